// SPDX-License-Identifier: Apache-2.0
//
// Static cost models: FLOP reports derived from sparsity patterns alone, the
// step/work counts of the tree scan, and per-worker space estimates.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "scanprop/scan.hpp"
#include "scanprop/sparse.hpp"

namespace scanprop::analysis {

enum class LayerKind { conv3x3, relu, maxpool, dense };

struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    /// Pooling window (square); maxpool only.
    std::size_t window = 0;
    /// dense only.
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    /// Fraction of weights kept; conv3x3 and dense only.
    std::optional<double> density;

    std::size_t input_size() const noexcept;
    std::size_t output_size() const noexcept;
};

/// Layers in forward order. Text form, one layer per line, '#' comments:
///   conv3x3 <c_in> <c_out> <h> <w> [density=<d>]
///   relu <c> <h> <w>
///   maxpool <c> <h> <w> <window>
///   dense <d_in> <d_out> [density=<d>]
struct ChainSpec {
    std::vector<LayerSpec> layers;

    /// Throws ConfigError when empty, malformed or not chain-compatible.
    void validate() const;
    static ChainSpec parse(std::istream& in);
    static ChainSpec load(const std::filesystem::path& path);
    /// The convolutional part of VGG-11 on 32x32 inputs: 8 conv3x3, 8 ReLU, 5 pools.
    static ChainSpec vgg11_conv();
};

/// Weight masks for the prunable layers. `masks[k]` applies to the k-th
/// conv3x3/dense layer as a string of '0'/'1' per weight in storage order;
/// otherwise a layer's own density, then `density`, then no pruning.
struct PruneOptions {
    std::optional<double> density;
    std::vector<std::string> masks;
    std::uint64_t seed = 0;
};

/// One line per prunable layer.
std::vector<std::string> load_masks(const std::filesystem::path& path);

/// Transposed Jacobians J_1^T .. J_n^T in forward order with random non-zero
/// weights, pruned weights removed from the patterns. Pool indices select the
/// top-left element of each window; ReLU slopes are all one.
template <typename T>
std::vector<sparse::CsrMatrix<T>> build_chain_jacobians(const ChainSpec& chain, const PruneOptions& prune = {},
                                                        std::uint64_t weight_seed = 1);

/// [grad, J_n^T, ..., J_1^T] with a random gradient.
template <typename T>
scan::ScanArray<T> chain_scan_array(const std::vector<sparse::CsrMatrix<T>>& jacobians, std::uint64_t seed = 1);

struct FlopRecord {
    std::size_t step = 0;
    scan::Phase phase = scan::Phase::linear;
    scan::OpKind kind = scan::OpKind::mv;
    std::uint64_t flop = 0;
    bool critical = false;
};

/// Identity short-circuits carry no arithmetic and are left out.
struct FlopReport {
    std::string executor;
    std::vector<FlopRecord> records;

    std::uint64_t max_step_flop() const noexcept;
    std::uint64_t critical_path_flop() const noexcept;
    std::uint64_t total_flop() const noexcept;
};

/// FLOP per step of the chosen executor (with the final fold) on the chain's
/// patterns: 2 x contributions for sparse products, 2 x nnz for sparse-vector.
FlopReport flops_of_patterns(const std::vector<sparse::PatternPtr>& jacobians, const scan::ExecutorConfig& executor);
FlopReport flops_of_chain(const ChainSpec& chain, const scan::ExecutorConfig& executor, const PruneOptions& prune = {});
/// Report built from an executor trace, multiply-adds doubled.
FlopReport flops_of_trace(const scan::ScanTrace& trace, std::string executor);

/// executor,step,phase,kind,flop,critical
void write_flop_csv(std::ostream& out, const std::vector<FlopReport>& reports);

struct LevelChoice {
    std::size_t up_levels = 0;
    std::size_t down_levels = 0;
    std::uint64_t critical_path_flop = 0;
};

/// Exhaustive search over (up, down) minimizing the critical-path FLOP.
LevelChoice sweep_levels(const std::vector<sparse::PatternPtr>& jacobians);

struct StepWork {
    std::size_t steps = 0;
    std::size_t work = 0;
};

/// Barrier levels of the tree scan with p-way task queueing, and its operator
/// count, for an array of n + 1 elements.
StepWork step_work_counts(std::size_t n, std::size_t p);

struct SpaceModel {
    double bppsa_per_worker = 0.0;
    double pipeline_per_device = 0.0;
};

/// max(ceil(n/p), 1) * m_jacob and (L/K + K) * m_x with unit constants.
SpaceModel space_models(std::size_t n, std::size_t p, std::size_t layers, std::size_t stages, double m_jacob,
                        double m_x);

}  // namespace scanprop::analysis
