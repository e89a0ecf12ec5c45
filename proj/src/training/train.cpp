// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <charconv>
#include <chrono>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "scanprop/error.hpp"
#include "scanprop/rng.hpp"
#include "scanprop/scan_schedule.hpp"
#include "scanprop/training.hpp"

namespace scanprop::training {

std::string_view to_string(ModelKind m) noexcept { return m == ModelKind::rnn ? "rnn" : "gru"; }
std::string_view to_string(Precision p) noexcept { return p == Precision::f32 ? "f32" : "f64"; }

ModelKind parse_model(std::string_view name) {
    if (name == "rnn")
        return ModelKind::rnn;
    if (name == "gru")
        return ModelKind::gru;
    throw ConfigError(fmt::format("unknown model '{}' (expected rnn or gru)", name));
}

Precision parse_precision(std::string_view name) {
    if (name == "f32" || name == "32" || name == "float")
        return Precision::f32;
    if (name == "f64" || name == "64" || name == "double")
        return Precision::f64;
    throw ConfigError(fmt::format("unknown precision '{}' (expected f32 or f64)", name));
}

OptimizerKind parse_optimizer(std::string_view name) {
    if (name == "adam")
        return OptimizerKind::adam;
    if (name == "sgd")
        return OptimizerKind::sgd;
    throw ConfigError(fmt::format("unknown optimizer '{}' (expected adam or sgd)", name));
}

double default_learning_rate(ModelKind model) noexcept { return model == ModelKind::rnn ? 1e-5 : 3e-4; }

void validate(const TrainConfig& c) {
    if (c.seq_len == 0 || c.batch == 0 || c.hidden_size == 0 || c.workers == 0 || c.samples == 0)
        throw ConfigError("T, B, hidden_size, workers and N must be positive");
    if (c.classes == 0 || c.classes > 256)
        throw ConfigError("classes must lie in 1..256");
    if (c.frames == 0 || c.coefficients == 0)
        throw ConfigError("F and C must be positive");
    if (c.lr && !(*c.lr >= 0.0))
        throw ConfigError("learning rate must be non-negative");
}

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

template <typename U>
U parse_number(const std::string& key, const std::string& value) {
    U out{};
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw ConfigError(fmt::format("invalid value '{}' for {}", value, key));
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used == value.size())
            return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(fmt::format("invalid value '{}' for {}", value, key));
}

}  // namespace

void apply_config_text(std::istream& in, TrainConfig& c) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.resize(hash);
        const std::string body = trim(line);
        if (body.empty())
            continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError(fmt::format("config line {}: expected key = value", line_no));
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        using U = std::size_t;
        if (key == "method")
            c.executor.kind = scan::parse_executor(value);
        else if (key == "model")
            c.model = parse_model(value);
        else if (key == "T")
            c.seq_len = parse_number<U>(key, value);
        else if (key == "B")
            c.batch = parse_number<U>(key, value);
        else if (key == "epochs")
            c.epochs = parse_number<U>(key, value);
        else if (key == "lr")
            c.lr = parse_double(key, value);
        else if (key == "seed")
            c.seed = parse_number<std::uint64_t>(key, value);
        else if (key == "hidden_size")
            c.hidden_size = parse_number<U>(key, value);
        else if (key == "dataset_path")
            c.dataset_path = value;
        else if (key == "dataset_kind")
            c.dataset_kind = value == "bits"       ? datagen::DatasetKind::bits
                             : value == "features" ? datagen::DatasetKind::features
                                                   : throw ConfigError(fmt::format("unknown dataset kind '{}'", value));
        else if (key == "precision")
            c.precision = parse_precision(value);
        else if (key == "workers")
            c.workers = parse_number<U>(key, value);
        else if (key == "up_levels")
            c.executor.up_levels = parse_number<U>(key, value);
        else if (key == "down_levels")
            c.executor.down_levels = parse_number<U>(key, value);
        else if (key == "optimizer")
            c.optimizer = parse_optimizer(value);
        else if (key == "N")
            c.samples = parse_number<U>(key, value);
        else if (key == "F")
            c.frames = parse_number<U>(key, value);
        else if (key == "C")
            c.coefficients = parse_number<U>(key, value);
        else
            throw ConfigError(fmt::format("config line {}: unknown key '{}'", line_no, key));
    }
}

namespace {

template <typename Params>
struct ModelOps;

template <typename T>
struct ModelOps<RnnParams<T>> {
    static BatchGradients<RnnParams<T>> grads(const RnnParams<T>& p, std::span<const Sample<T>> batch,
                                              const scan::ExecutorConfig& e, WorkerPool& pool) {
        return rnn_backward_via_scan(p, batch, e, pool);
    }
};

template <typename T>
struct ModelOps<GruParams<T>> {
    static BatchGradients<GruParams<T>> grads(const GruParams<T>& p, std::span<const Sample<T>> batch,
                                              const scan::ExecutorConfig& e, WorkerPool& pool) {
        return gru_backward_via_scan(p, batch, e, pool);
    }
};

template <typename T, typename Params>
TrainMetrics run(const TrainConfig& config, const datagen::Dataset& data, const IterationHook& hook) {
    const std::size_t steps = data.length, inputs = data.channels;
    if (config.executor.kind == scan::Executor::hybrid &&
        (config.executor.up_levels > scan::full_up_levels(steps - 1) ||
         config.executor.down_levels > scan::full_down_levels(steps - 1)))
        throw ConfigError(fmt::format("hybrid levels ({}, {}) exceed the sweep depths ({}, {}) for T={}",
                                      config.executor.up_levels, config.executor.down_levels,
                                      scan::full_up_levels(steps - 1), scan::full_down_levels(steps - 1), steps));
    for (const auto label : data.labels)
        if (label >= config.classes)
            throw ConfigError(fmt::format("dataset label {} exceeds {} classes", label, config.classes));

    Params params(inputs, config.hidden_size, config.classes);
    init_uniform(params, config.hidden_size, config.seed);
    OptimizerConfig opt;
    opt.kind = config.optimizer;
    opt.lr = config.lr.value_or(default_learning_rate(config.model));
    Optimizer<T> optimizer(opt, params);
    WorkerPool pool(config.workers);

    const std::vector<T> values(data.values.begin(), data.values.end());
    const std::size_t per_sample = data.sample_size();

    TrainMetrics metrics;
    metrics.method = scan::to_string(config.executor);
    const auto start = std::chrono::steady_clock::now();
    auto elapsed_ms = [&] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    };

    std::vector<std::size_t> order(data.samples);
    std::size_t iteration = 0;
    std::vector<Sample<T>> batch;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double epoch_start = elapsed_ms();
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle(config.seed, (std::uint64_t{1} << 40) + epoch);
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle.below(i)]);
        for (std::size_t first = 0; first < order.size(); first += config.batch) {
            const std::size_t count = std::min(config.batch, order.size() - first);
            if (config.drop_last && count < config.batch)
                break;
            batch.clear();
            for (std::size_t k = 0; k < count; ++k) {
                const std::size_t s = order[first + k];
                batch.push_back({std::span<const T>(values.data() + s * per_sample, per_sample), steps, data.labels[s]});
            }
            auto result = ModelOps<Params>::grads(params, batch, config.executor, pool);
            optimizer.step(params, result.grads);
            IterationRecord rec{epoch, iteration++, result.loss, elapsed_ms()};
            metrics.iterations.push_back(rec);
            if (hook)
                hook(rec);
        }
        metrics.epoch_ms.push_back(elapsed_ms() - epoch_start);
    }
    return metrics;
}

}  // namespace

TrainMetrics train(const TrainConfig& config, const datagen::Dataset& data, const IterationHook& hook) {
    validate(config);
    if (data.samples == 0 || data.length == 0)
        throw ConfigError("dataset is empty");
    const bool f64 = config.precision == Precision::f64;
    if (config.model == ModelKind::rnn)
        return f64 ? run<double, RnnParams<double>>(config, data, hook) : run<float, RnnParams<float>>(config, data, hook);
    return f64 ? run<double, GruParams<double>>(config, data, hook) : run<float, GruParams<float>>(config, data, hook);
}

TrainMetrics train(const TrainConfig& config, const IterationHook& hook) {
    validate(config);
    datagen::Dataset data;
    if (!config.dataset_path.empty()) {
        data = datagen::load_dataset(config.dataset_path);
    } else if (config.dataset_kind == datagen::DatasetKind::bits) {
        data = datagen::gen_bitstreams(static_cast<std::uint32_t>(config.seq_len),
                                       static_cast<std::uint32_t>(config.samples), config.seed);
    } else {
        data = datagen::gen_feature_sequences(static_cast<std::uint32_t>(config.frames),
                                              static_cast<std::uint32_t>(config.coefficients),
                                              static_cast<std::uint32_t>(config.samples),
                                              static_cast<std::uint32_t>(config.classes), config.seed);
    }
    return train(config, data, hook);
}

void write_metrics_csv(std::ostream& out, const TrainMetrics& m) {
    out << "epoch,iteration,loss,wall_ms,method\n";
    for (const auto& r : m.iterations)
        out << fmt::format("{},{},{:.9g},{:.3f},{}\n", r.epoch, r.iteration, r.loss, r.wall_ms, m.method);
}

}  // namespace scanprop::training
