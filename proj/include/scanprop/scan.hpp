// SPDX-License-Identifier: Apache-2.0
//
// Back-propagation as an exclusive scan. The array holds
// [grad_n, J_n^T, ..., J_1^T] and the operator is A <> B = B * A, so the
// exclusive scan yields [I, grad_n, grad_{n-1}, ..., grad_1]. Executors append
// the full fold (grad_0) as a final entry unless ScanOptions::with_total is off.
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "scanprop/dense.hpp"
#include "scanprop/sparse.hpp"
#include "scanprop/worker_pool.hpp"

namespace scanprop::scan {

enum class OpKind { identity, mv, mm };
enum class Phase { up_sweep, bridge, down_sweep, linear, epilogue };
enum class ElementKind { identity, vector, dense, sparse };

std::string_view to_string(OpKind kind) noexcept;
std::string_view to_string(Phase phase) noexcept;

/// Symbolic identity; dim 0 matches any shape.
struct Identity {
    std::size_t dim = 0;
};

/// `batch` gradient vectors stored back to back.
template <typename T>
struct VectorBlock {
    std::size_t batch = 1;
    std::size_t dim = 0;
    std::vector<T> values;
};

/// `batch` row-major rows x cols matrices stored back to back.
template <typename T>
struct MatrixBlock {
    std::size_t batch = 1;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> values;
};

template <typename T>
class ScanElement {
public:
    using Storage = std::variant<Identity, VectorBlock<T>, MatrixBlock<T>, sparse::CsrMatrix<T>>;

    ScanElement() = default;
    explicit ScanElement(Storage storage);

    static ScanElement identity(std::size_t dim = 0) { return ScanElement(Storage(Identity{dim})); }
    static ScanElement vector(std::vector<T> values);
    static ScanElement vectors(std::size_t batch, std::size_t dim, std::vector<T> values);
    static ScanElement dense(const DenseMatrix<T>& m);
    static ScanElement dense_batch(std::size_t batch, std::size_t rows, std::size_t cols, std::vector<T> values);
    static ScanElement sparse(sparse::CsrMatrix<T> m);

    ElementKind kind() const noexcept { return static_cast<ElementKind>(storage_.index()); }
    bool is_identity() const noexcept { return kind() == ElementKind::identity; }
    /// Vectors count as dim x 1; identity as dim x dim.
    std::size_t rows() const noexcept;
    std::size_t cols() const noexcept;
    std::size_t batch() const noexcept;

    const Storage& storage() const noexcept { return storage_; }
    const VectorBlock<T>& as_vector() const { return std::get<VectorBlock<T>>(storage_); }
    const MatrixBlock<T>& as_dense() const { return std::get<MatrixBlock<T>>(storage_); }
    const sparse::CsrMatrix<T>& as_sparse() const { return std::get<sparse::CsrMatrix<T>>(storage_); }

    /// Batch slice as a dense matrix (vectors become one column). Identity needs a dim.
    DenseMatrix<T> to_dense(std::size_t slice = 0) const;

private:
    Storage storage_ = Identity{};
};

/// Thread-safe cache of product plans keyed by the identity of the two
/// pattern objects. Holding the plan keeps both patterns alive.
class PlanCache {
public:
    std::shared_ptr<const sparse::ProductPlan> get(const sparse::PatternPtr& left, const sparse::PatternPtr& right);
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::map<std::pair<const void*, const void*>, std::shared_ptr<const sparse::ProductPlan>> plans_;
};

template <typename T>
struct DiamondResult {
    ScanElement<T> value;
    OpKind kind = OpKind::identity;
    std::uint64_t multiply_adds = 0;
};

/// a <> b = b * a. Identity on either side returns the other operand without
/// arithmetic. Batches combine slice by slice; a batch of 1 broadcasts.
/// Throws ShapeError when cols(b) != rows(a) or batches disagree.
template <typename T>
DiamondResult<T> diamond(const ScanElement<T>& a, const ScanElement<T>& b, PlanCache* cache = nullptr);

/// [grad, J_n^T, ..., J_1^T]; checks cols(a[k+1]) == rows(a[k]) and batch agreement.
template <typename T>
class ScanArray {
public:
    explicit ScanArray(std::vector<ScanElement<T>> elements);

    std::size_t n() const noexcept { return elements_.size() - 1; }
    std::size_t size() const noexcept { return elements_.size(); }
    const ScanElement<T>& operator[](std::size_t k) const noexcept { return elements_[k]; }
    const std::vector<ScanElement<T>>& elements() const noexcept { return elements_; }

private:
    std::vector<ScanElement<T>> elements_;
};

struct DiamondRecord {
    std::size_t step = 0;
    Phase phase = Phase::linear;
    int depth = -1;
    std::size_t left = 0;
    std::size_t right = 0;
    OpKind kind = OpKind::identity;
    std::uint64_t multiply_adds = 0;
    bool critical = false;
};

/// One barrier-separated group of operations.
struct LevelSummary {
    Phase phase = Phase::linear;
    int depth = -1;
    std::size_t ops = 0;
    std::uint64_t multiply_adds = 0;
};

struct ScanTrace {
    std::vector<DiamondRecord> records;
    std::vector<LevelSummary> levels;

    std::size_t diamond_ops(bool include_epilogue = false) const noexcept;
    std::size_t level_count(bool include_epilogue = false) const noexcept;
    /// step,phase,depth,left,right,kind,multiply_adds,critical
    void write_csv(std::ostream& out) const;
    /// phase,depth,pairs,flop
    void write_level_csv(std::ostream& out) const;
};

struct ScanOptions {
    ScanTrace* trace = nullptr;
    PlanCache* plan_cache = nullptr;
    bool with_total = true;
    /// Turning this off gives the textbook (commutative) down-sweep.
    bool reverse_down_sweep_operands = true;
};

enum class Executor { linear, blelloch, hybrid };
std::string_view to_string(Executor e) noexcept;
/// Throws ConfigError for unknown names.
Executor parse_executor(std::string_view name);

template <typename T>
using ScanOutput = std::vector<ScanElement<T>>;

template <typename T>
ScanOutput<T> linear_scan(const ScanArray<T>& arr, const ScanOptions& options = {});

template <typename T>
ScanOutput<T> blelloch_scan(const ScanArray<T>& arr, WorkerPool& pool, const ScanOptions& options = {});
template <typename T>
ScanOutput<T> blelloch_scan(const ScanArray<T>& arr, std::size_t workers, const ScanOptions& options = {});

/// Throws ConfigError when up_levels or down_levels exceed the full sweep depths.
template <typename T>
ScanOutput<T> hybrid_scan(const ScanArray<T>& arr, std::size_t up_levels, std::size_t down_levels, WorkerPool& pool,
                          const ScanOptions& options = {});
template <typename T>
ScanOutput<T> hybrid_scan(const ScanArray<T>& arr, std::size_t up_levels, std::size_t down_levels,
                          std::size_t workers, const ScanOptions& options = {});

struct ExecutorConfig {
    Executor kind = Executor::linear;
    std::size_t up_levels = 0;
    std::size_t down_levels = 0;
};

/// "linear", "blelloch" or "hybrid:u:v".
std::string to_string(const ExecutorConfig& e);

template <typename T>
ScanOutput<T> run_scan(const ScanArray<T>& arr, const ExecutorConfig& config, WorkerPool& pool,
                       const ScanOptions& options = {});

}  // namespace scanprop::scan
