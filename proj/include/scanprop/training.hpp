// SPDX-License-Identifier: Apache-2.0
//
// Recurrent classifiers trained with scan-based back-propagation through time.
// Hidden-state gradients come from a batched scan over the per-step
// transposed Jacobians; parameter gradients are then summed over timesteps.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scanprop/datagen.hpp"
#include "scanprop/dense.hpp"
#include "scanprop/scan.hpp"
#include "scanprop/tape.hpp"
#include "scanprop/worker_pool.hpp"

namespace scanprop::training {

/// Named flat parameter tensor. Matrices are row-major.
template <typename T>
struct Tensor {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> values;

    T& operator()(std::size_t r, std::size_t c) noexcept { return values[r * cols + c]; }
    const T& operator()(std::size_t r, std::size_t c) const noexcept { return values[r * cols + c]; }
    DenseMatrix<T> matrix() const { return DenseMatrix<T>(rows, cols, values); }
};

template <typename T>
class ParamSet {
public:
    std::vector<Tensor<T>>& tensors() noexcept { return tensors_; }
    const std::vector<Tensor<T>>& tensors() const noexcept { return tensors_; }
    void fill_zero() noexcept;
    std::size_t scalar_count() const noexcept;

protected:
    Tensor<T>& add(std::string name, std::size_t rows, std::size_t cols);

private:
    std::vector<Tensor<T>> tensors_;
};

/// h_t = tanh(W_ih x_t + b_ih + W_hh h_{t-1} + b_hh), logits = W_out h_T + b_out.
template <typename T>
class RnnParams : public ParamSet<T> {
public:
    RnnParams(std::size_t input_size, std::size_t hidden_size, std::size_t classes);

    std::size_t input_size() const noexcept { return w_ih().cols; }
    std::size_t hidden_size() const noexcept { return w_hh().rows; }
    std::size_t classes() const noexcept { return w_out().rows; }

    Tensor<T>& w_ih() noexcept { return this->tensors()[0]; }
    Tensor<T>& w_hh() noexcept { return this->tensors()[1]; }
    Tensor<T>& b_ih() noexcept { return this->tensors()[2]; }
    Tensor<T>& b_hh() noexcept { return this->tensors()[3]; }
    Tensor<T>& w_out() noexcept { return this->tensors()[4]; }
    Tensor<T>& b_out() noexcept { return this->tensors()[5]; }
    const Tensor<T>& w_ih() const noexcept { return this->tensors()[0]; }
    const Tensor<T>& w_hh() const noexcept { return this->tensors()[1]; }
    const Tensor<T>& b_ih() const noexcept { return this->tensors()[2]; }
    const Tensor<T>& b_hh() const noexcept { return this->tensors()[3]; }
    const Tensor<T>& w_out() const noexcept { return this->tensors()[4]; }
    const Tensor<T>& b_out() const noexcept { return this->tensors()[5]; }
};

/// r = sigma(W_ir x + b_ir + W_hr h + b_hr), z = sigma(W_iz x + b_iz + W_hz h + b_hz),
/// n = tanh(W_in x + b_in + r * (W_hn h + b_hn)), h' = (1 - z) * n + z * h.
template <typename T>
class GruParams : public ParamSet<T> {
public:
    GruParams(std::size_t input_size, std::size_t hidden_size, std::size_t classes);

    std::size_t input_size() const noexcept { return w_ir().cols; }
    std::size_t hidden_size() const noexcept { return w_hr().rows; }
    std::size_t classes() const noexcept { return w_out().rows; }

#define SCANPROP_GRU_TENSOR(name, index)                                         \
    Tensor<T>& name() noexcept { return this->tensors()[index]; }                \
    const Tensor<T>& name() const noexcept { return this->tensors()[index]; }
    SCANPROP_GRU_TENSOR(w_ir, 0)
    SCANPROP_GRU_TENSOR(w_iz, 1)
    SCANPROP_GRU_TENSOR(w_in, 2)
    SCANPROP_GRU_TENSOR(w_hr, 3)
    SCANPROP_GRU_TENSOR(w_hz, 4)
    SCANPROP_GRU_TENSOR(w_hn, 5)
    SCANPROP_GRU_TENSOR(b_ir, 6)
    SCANPROP_GRU_TENSOR(b_hr, 7)
    SCANPROP_GRU_TENSOR(b_iz, 8)
    SCANPROP_GRU_TENSOR(b_hz, 9)
    SCANPROP_GRU_TENSOR(b_in, 10)
    SCANPROP_GRU_TENSOR(b_hn, 11)
    SCANPROP_GRU_TENSOR(w_out, 12)
    SCANPROP_GRU_TENSOR(b_out, 13)
#undef SCANPROP_GRU_TENSOR
};

/// Fills every tensor with uniform(-1/sqrt(H), 1/sqrt(H)) draws.
template <typename T>
void init_uniform(ParamSet<T>& params, std::size_t hidden_size, std::uint64_t seed);

template <typename T>
std::vector<T> rnn_cell(const RnnParams<T>& p, std::span<const T> x, std::span<const T> h_prev);

/// Writes r, z, n and W_hn h + b_hn to the out-parameters when non-null.
template <typename T>
std::vector<T> gru_cell(const GruParams<T>& p, std::span<const T> x, std::span<const T> h_prev,
                        std::vector<T>* reset = nullptr, std::vector<T>* update = nullptr,
                        std::vector<T>* candidate = nullptr, std::vector<T>* candidate_pre = nullptr);

template <typename T>
struct LossResult {
    T loss{};
    std::vector<T> probabilities;
    /// d loss / d logits.
    std::vector<T> grad_logits;
};

template <typename T>
LossResult<T> softmax_cross_entropy(std::span<const T> logits, std::size_t label);

template <typename T>
struct ForwardResult {
    CellTape<T> tape;
    std::vector<T> logits;
    LossResult<T> loss;
};

/// x holds `steps` rows of input_size values. h0 defaults to zeros when empty.
template <typename T>
ForwardResult<T> rnn_forward(const RnnParams<T>& p, std::span<const T> x, std::size_t steps, std::size_t label,
                             std::span<const T> h0 = {});
template <typename T>
ForwardResult<T> gru_forward(const GruParams<T>& p, std::span<const T> x, std::size_t steps, std::size_t label,
                             std::span<const T> h0 = {});

template <typename T>
struct Sample {
    std::span<const T> inputs;
    std::size_t steps = 0;
    std::size_t label = 0;
};

template <typename Params>
struct BatchGradients {
    double loss = 0.0;
    Params grads;
};

/// Mean cross-entropy over the batch and its gradient. Hidden-state gradients
/// come from one batched scan over [grad h_T, J_T^T, ..., J_2^T].
template <typename T>
BatchGradients<RnnParams<T>> rnn_backward_via_scan(const RnnParams<T>& p, std::span<const Sample<T>> batch,
                                                   const scan::ExecutorConfig& executor, WorkerPool& pool,
                                                   scan::ScanTrace* trace = nullptr);
template <typename T>
BatchGradients<GruParams<T>> gru_backward_via_scan(const GruParams<T>& p, std::span<const Sample<T>> batch,
                                                   const scan::ExecutorConfig& executor, WorkerPool& pool,
                                                   scan::ScanTrace* trace = nullptr);

enum class OptimizerKind { adam, sgd };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double momentum = 0.9;
};

/// Bias-corrected Adam or SGD with momentum (buffer = m * buffer + g, seeded
/// with g on the first step). State tensors mirror the parameter shapes.
template <typename T>
class Optimizer {
public:
    Optimizer(const OptimizerConfig& config, const ParamSet<T>& shape);

    /// Throws ShapeError when grads do not mirror params.
    void step(ParamSet<T>& params, const ParamSet<T>& grads);
    std::uint64_t steps() const noexcept { return steps_; }
    const OptimizerConfig& config() const noexcept { return config_; }

private:
    OptimizerConfig config_;
    std::uint64_t steps_ = 0;
    std::vector<std::vector<T>> first_;
    std::vector<std::vector<T>> second_;
};

enum class ModelKind { rnn, gru };
enum class Precision { f32, f64 };

std::string_view to_string(ModelKind m) noexcept;
std::string_view to_string(Precision p) noexcept;
ModelKind parse_model(std::string_view name);
Precision parse_precision(std::string_view name);
OptimizerKind parse_optimizer(std::string_view name);

/// Learning rate used when none is given: 1e-5 for the RNN, 3e-4 for the GRU.
double default_learning_rate(ModelKind model) noexcept;

struct TrainConfig {
    ModelKind model = ModelKind::rnn;
    scan::ExecutorConfig executor;
    std::size_t seq_len = 1000;
    std::size_t batch = 16;
    std::size_t epochs = 1;
    std::optional<double> lr;
    OptimizerKind optimizer = OptimizerKind::adam;
    std::uint64_t seed = 1;
    std::size_t hidden_size = 20;
    std::size_t classes = 10;
    Precision precision = Precision::f32;
    std::size_t workers = 1;
    /// Loaded when set; otherwise generated from the fields below.
    std::filesystem::path dataset_path;
    datagen::DatasetKind dataset_kind = datagen::DatasetKind::bits;
    std::size_t samples = 32000;
    std::size_t frames = 259;
    std::size_t coefficients = 38;
    /// Drops any remainder so every iteration sees `batch` samples.
    bool drop_last = false;
};

/// Throws ConfigError on inconsistent settings.
void validate(const TrainConfig& config);
/// Parses `key = value` lines ('#' starts a comment) into config. Keys:
/// method, model, T, B, epochs, lr, seed, hidden_size, dataset_path,
/// dataset_kind, precision, workers, up_levels, down_levels, optimizer, N, F, C.
void apply_config_text(std::istream& in, TrainConfig& config);

struct IterationRecord {
    std::size_t epoch = 0;
    std::size_t iteration = 0;
    double loss = 0.0;
    double wall_ms = 0.0;
};

struct TrainMetrics {
    std::string method;
    std::vector<IterationRecord> iterations;
    std::vector<double> epoch_ms;
};

/// Called after every iteration; may be empty.
using IterationHook = std::function<void(const IterationRecord&)>;

TrainMetrics train(const TrainConfig& config, const IterationHook& hook = {});
/// Same, on an already loaded dataset (its kind overrides config.dataset_kind).
TrainMetrics train(const TrainConfig& config, const datagen::Dataset& data, const IterationHook& hook = {});

/// epoch,iteration,loss,wall_ms,method
void write_metrics_csv(std::ostream& out, const TrainMetrics& m);

}  // namespace scanprop::training
