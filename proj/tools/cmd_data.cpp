// SPDX-License-Identifier: Apache-2.0
// gen-data and train.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>

#include <unistd.h>

#include <fmt/format.h>

#include "cli.hpp"
#include "scanprop/datagen.hpp"
#include "scanprop/error.hpp"
#include "scanprop/training.hpp"

namespace scanprop::cli {

namespace {

datagen::DatasetKind parse_kind(const std::string& s) {
    if (s == "bits")
        return datagen::DatasetKind::bits;
    if (s == "features")
        return datagen::DatasetKind::features;
    throw ConfigError(fmt::format("unknown dataset kind '{}' (expected bits or features)", s));
}

struct GenDataArgs {
    std::string kind = "bits";
    std::uint32_t length = 1000;
    std::uint32_t samples = 32000;
    std::uint32_t frames = 259;
    std::uint32_t coefficients = 38;
    std::uint32_t classes = 10;
    std::uint64_t seed = 1;
    std::string out;
};

int run_gen_data(const GenDataArgs& a) {
    const auto kind = parse_kind(a.kind);
    if (a.samples == 0)
        throw ConfigError("--n must be positive");
    datagen::Dataset d;
    if (kind == datagen::DatasetKind::bits) {
        if (a.length == 0)
            throw ConfigError("--t must be positive");
        d = datagen::gen_bitstreams(a.length, a.samples, a.seed);
    } else {
        if (a.frames == 0 || a.coefficients == 0 || a.classes == 0)
            throw ConfigError("--f, --c and --classes must be positive");
        d = datagen::gen_feature_sequences(a.frames, a.coefficients, a.samples, a.classes, a.seed);
    }
    datagen::save_dataset(a.out, d);
    fmt::print("wrote {} {} samples, length {}, channels {}, seed {} to {}\n", d.samples, a.kind, d.length,
               d.channels, d.seed, a.out);
    return ok;
}

struct TrainArgs {
    std::string config_file;
    std::string method;
    std::string model;
    std::size_t t = 0, b = 0, epochs = 0, hidden = 0, workers = 0, n = 0, f = 0, c = 0, classes = 0;
    std::size_t up = 0, down = 0;
    double lr = 0.0;
    std::uint64_t seed = 0;
    std::string precision, optimizer, dataset, dataset_kind, out;
    bool drop_last = false;
};

int run_train(const TrainArgs& a, const CLI::App& cmd) {
    training::TrainConfig c;
    c.workers = default_worker_count(1);
    if (!a.config_file.empty()) {
        std::ifstream in(a.config_file);
        if (!in)
            throw ConfigError(fmt::format("cannot open config file {}", a.config_file));
        training::apply_config_text(in, c);
    }
    auto given = [&](const char* name) { return cmd.count(name) > 0; };
    if (given("--method")) {
        const auto e = parse_executor_spec(a.method);
        c.executor.kind = e.kind;
        if (e.kind == scan::Executor::hybrid && a.method.find(':') != std::string::npos) {
            c.executor.up_levels = e.up_levels;
            c.executor.down_levels = e.down_levels;
        }
    }
    if (given("--model"))
        c.model = training::parse_model(a.model);
    if (given("--t"))
        c.seq_len = a.t;
    if (given("--b"))
        c.batch = a.b;
    if (given("--epochs"))
        c.epochs = a.epochs;
    if (given("--lr"))
        c.lr = a.lr;
    if (given("--seed"))
        c.seed = a.seed;
    if (given("--hidden"))
        c.hidden_size = a.hidden;
    if (given("--workers"))
        c.workers = a.workers;
    if (given("--precision"))
        c.precision = training::parse_precision(a.precision);
    if (given("--optimizer"))
        c.optimizer = training::parse_optimizer(a.optimizer);
    if (given("--up-levels"))
        c.executor.up_levels = a.up;
    if (given("--down-levels"))
        c.executor.down_levels = a.down;
    if (given("--dataset"))
        c.dataset_path = a.dataset;
    if (given("--dataset-kind"))
        c.dataset_kind = parse_kind(a.dataset_kind);
    if (given("--n"))
        c.samples = a.n;
    if (given("--f"))
        c.frames = a.f;
    if (given("--c"))
        c.coefficients = a.c;
    if (given("--classes"))
        c.classes = a.classes;
    c.drop_last = a.drop_last;

    std::ofstream file;
    if (!a.out.empty()) {
        file.open(a.out);
        if (!file)
            throw Error(fmt::format("cannot write {}", a.out));
    }
    const bool progress = !a.out.empty() && isatty(fileno(stderr));
    const auto metrics = training::train(c, [&](const training::IterationRecord& r) {
        if (!progress)
            return;
        fmt::print(stderr, "\repoch {} iteration {} loss {:.6f}", r.epoch, r.iteration, r.loss);
    });
    if (progress)
        fmt::print(stderr, "\n");
    training::write_metrics_csv(a.out.empty() ? std::cout : file, metrics);
    const double mean_epoch =
        metrics.epoch_ms.empty()
            ? 0.0
            : std::accumulate(metrics.epoch_ms.begin(), metrics.epoch_ms.end(), 0.0) / metrics.epoch_ms.size();
    auto& summary = a.out.empty() ? stderr : stdout;
    if (metrics.iterations.empty())
        fmt::print(summary, "method {}: no iterations\n", metrics.method);
    else
        fmt::print(summary, "method {}: final loss {:.6f}, mean epoch {:.1f} ms over {} epochs\n", metrics.method,
                   metrics.iterations.back().loss, mean_epoch, metrics.epoch_ms.size());
    return ok;
}

}  // namespace

void add_gen_data(CLI::App& app, Action& action) {
    auto a = std::make_shared<GenDataArgs>();
    auto* cmd = app.add_subcommand("gen-data", "Write a synthetic dataset file");
    cmd->add_option("--kind", a->kind, "bits or features")->capture_default_str();
    cmd->add_option("--t", a->length, "Bitstream length")->capture_default_str();
    cmd->add_option("--n", a->samples, "Sample count")->capture_default_str();
    cmd->add_option("--f", a->frames, "Frames per feature sequence")->capture_default_str();
    cmd->add_option("--c", a->coefficients, "Coefficients per frame")->capture_default_str();
    cmd->add_option("--classes", a->classes, "Classes for feature data")->capture_default_str();
    cmd->add_option("--seed", a->seed)->capture_default_str();
    cmd->add_option("--out", a->out, "Output path")->required();
    cmd->callback([a, &action] { action = [a] { return run_gen_data(*a); }; });
}

void add_train(CLI::App& app, Action& action) {
    auto a = std::make_shared<TrainArgs>();
    auto* cmd = app.add_subcommand("train", "Train the RNN or GRU classifier and emit per-iteration metrics");
    cmd->add_option("--config", a->config_file, "key = value file applied before the flags");
    cmd->add_option("--method", a->method, "linear, blelloch, hybrid or hybrid:<up>:<down>");
    cmd->add_option("--model", a->model, "rnn or gru");
    cmd->add_option("--t", a->t, "Sequence length for generated bitstreams");
    cmd->add_option("--b", a->b, "Batch size");
    cmd->add_option("--epochs", a->epochs);
    cmd->add_option("--lr", a->lr, "Learning rate (default 1e-5 rnn, 3e-4 gru)");
    cmd->add_option("--seed", a->seed);
    cmd->add_option("--hidden", a->hidden, "Hidden size");
    cmd->add_option("--workers", a->workers, "Scan workers (default SCANPROP_THREADS or 1)");
    cmd->add_option("--precision", a->precision, "f32 or f64");
    cmd->add_option("--optimizer", a->optimizer, "adam or sgd");
    cmd->add_option("--up-levels", a->up);
    cmd->add_option("--down-levels", a->down);
    cmd->add_option("--dataset", a->dataset, "BPDS file; generated in memory when absent");
    cmd->add_option("--dataset-kind", a->dataset_kind, "bits or features for generated data");
    cmd->add_option("--n", a->n, "Generated sample count");
    cmd->add_option("--f", a->f, "Generated frames per sequence");
    cmd->add_option("--c", a->c, "Generated coefficients per frame");
    cmd->add_option("--classes", a->classes);
    cmd->add_flag("--drop-last", a->drop_last, "Skip the final partial batch");
    cmd->add_option("--out", a->out, "Metrics CSV path (stdout when absent)");
    cmd->callback([a, cmd, &action] { action = [a, cmd] { return run_train(*a, *cmd); }; });
}

}  // namespace scanprop::cli
