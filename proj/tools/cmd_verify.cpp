// SPDX-License-Identifier: Apache-2.0
// verify-jacobians: analytical builders against central finite differences.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>

#include <fmt/format.h>

#include "cli.hpp"
#include "scanprop/csr_io.hpp"
#include "scanprop/error.hpp"
#include "scanprop/jacobians.hpp"
#include "scanprop/rng.hpp"
#include "scanprop/training.hpp"

namespace scanprop::cli {

namespace {

using namespace jacobians;
using Clock = std::chrono::steady_clock;

const std::vector<std::string> kDefaultSpecs{"conv:1x1x4x4",     "conv:2x3x5x6", "conv:3x64x32x32",
                                             "relu:64x32x32",    "maxpool:64x32x32x2", "rnn:20",
                                             "gru:20"};

struct ParsedSpec {
    std::string op;
    std::vector<std::size_t> dims;
};

ParsedSpec parse_spec(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw ConfigError(fmt::format("spec '{}' needs the form op:AxBx...", text));
    ParsedSpec s{text.substr(0, colon), {}};
    std::size_t start = colon + 1;
    while (true) {
        const auto x = text.find('x', start);
        const std::string piece = text.substr(start, x == std::string::npos ? std::string::npos : x - start);
        std::size_t used = 0;
        std::size_t v = 0;
        try {
            v = std::stoul(piece, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != piece.size() || v == 0)
            throw ConfigError(fmt::format("spec '{}': bad dimension '{}'", text, piece));
        s.dims.push_back(v);
        if (x == std::string::npos)
            break;
        start = x + 1;
    }
    const std::size_t want = s.op == "conv" ? 4 : s.op == "relu" ? 3 : s.op == "maxpool" ? 4 : 1;
    if (s.op != "conv" && s.op != "relu" && s.op != "maxpool" && s.op != "rnn" && s.op != "gru")
        throw ConfigError(fmt::format("spec '{}': unknown operator (conv, relu, maxpool, rnn, gru)", text));
    if (s.dims.size() != want)
        throw ConfigError(fmt::format("spec '{}': expected {} dimensions", text, want));
    if (s.op == "conv" && (s.dims[2] < 3 || s.dims[3] < 3))
        throw ConfigError(fmt::format("spec '{}': conv needs h, w >= 3", text));
    return s;
}

/// Analytical matrix under test plus the map the oracle differentiates.
struct Case {
    std::optional<sparse::CsrMatrix<float>> sparse;
    std::optional<DenseMatrix<double>> dense;
    VectorMap<double> map;
    std::vector<double> point;
    double eps = 1e-6;
    double tolerance = 1e-4;
    double builder_ms = 0.0;
};

template <typename F>
double min_time_ms(F&& f, int repeats = 3) {
    double best = INFINITY;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = Clock::now();
        f();
        best = std::min(best, std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    }
    return best;
}

Case make_case(const ParsedSpec& s, std::uint64_t seed) {
    Rng rng(seed);
    Case c;
    if (s.op == "conv") {
        ConvSpec<float> spec{s.dims[0], s.dims[1], s.dims[2], s.dims[3], {}};
        spec.weights.resize(spec.in_channels * spec.out_channels * 9);
        for (auto& w : spec.weights)
            w = static_cast<float>(rng.uniform(-1, 1));
        c.builder_ms = min_time_ms([&] { c.sparse = conv3x3_tjac(spec); });
        auto wide = std::make_shared<ConvSpec<double>>(ConvSpec<double>{
            spec.in_channels, spec.out_channels, spec.height, spec.width,
            std::vector<double>(spec.weights.begin(), spec.weights.end())});
        c.map = [wide](std::span<const double> x) { return conv3x3_forward(*wide, x); };
        c.point.resize(spec.input_size());
        for (auto& v : c.point)
            v = rng.uniform(-1, 1);
        c.eps = 1e-3;
    } else if (s.op == "relu") {
        const std::size_t d = s.dims[0] * s.dims[1] * s.dims[2];
        c.point.resize(d);
        for (auto& v : c.point)
            v = rng.uniform(0.1, 1.0) * (rng.bernoulli(0.5) ? 1 : -1);
        const std::vector<float> x(c.point.begin(), c.point.end());
        c.builder_ms = min_time_ms([&] { c.sparse = relu_tjac<float>(x); });
        c.map = [](std::span<const double> in) { return relu_forward(in); };
    } else if (s.op == "maxpool") {
        const std::size_t ch = s.dims[0], h = s.dims[1], w = s.dims[2], k = s.dims[3];
        c.point.resize(ch * h * w);
        for (auto& v : c.point)
            v = rng.uniform(-1, 1);
        const std::vector<float> x(c.point.begin(), c.point.end());
        const auto fwd = maxpool_forward<float>(ch, h, w, k, k, x);
        c.builder_ms = min_time_ms([&] { c.sparse = maxpool_tjac<float>(fwd.spec); });
        const auto spec = std::make_shared<PoolSpec>(fwd.spec);
        c.map = [spec](std::span<const double> in) { return maxpool_apply(*spec, in); };
    } else if (s.op == "rnn") {
        const std::size_t H = s.dims[0];
        auto p = std::make_shared<training::RnnParams<double>>(1, H, 10);
        training::init_uniform(*p, H, seed);
        std::vector<double> bits(5);
        for (auto& b : bits)
            b = rng.bernoulli(0.5) ? 1.0 : 0.0;
        const auto f = training::rnn_forward<double>(*p, bits, 5, 0);
        const auto w_hh = p->w_hh().matrix();
        c.builder_ms = min_time_ms([&] { c.dense = rnn_tjac(f.tape, 3, w_hh); });
        auto x3 = std::make_shared<std::vector<double>>(f.tape.inputs[2]);
        c.map = [p, x3](std::span<const double> h) { return training::rnn_cell<double>(*p, *x3, h); };
        c.point = f.tape.hidden[2];
        c.tolerance = 1e-6;
    } else {
        const std::size_t H = s.dims[0], C = 4;
        auto p = std::make_shared<training::GruParams<double>>(C, H, 10);
        training::init_uniform(*p, H, seed);
        std::vector<double> x(5 * C);
        for (auto& v : x)
            v = rng.uniform(-1, 1);
        const auto f = training::gru_forward<double>(*p, x, 5, 0);
        const auto w_hr = p->w_hr().matrix(), w_hz = p->w_hz().matrix(), w_hn = p->w_hn().matrix();
        c.builder_ms = min_time_ms([&] { c.dense = gru_tjac(f.tape, 3, w_hr, w_hz, w_hn); });
        auto x3 = std::make_shared<std::vector<double>>(f.tape.inputs[2]);
        c.map = [p, x3](std::span<const double> h) { return training::gru_cell<double>(*p, *x3, h); };
        c.point = f.tape.hidden[2];
        c.tolerance = 1e-6;
    }
    return c;
}

std::vector<std::size_t> rows_to_check(std::size_t rows, std::size_t budget) {
    std::vector<std::size_t> out;
    if (budget == 0 || rows <= budget) {
        out.resize(rows);
        for (std::size_t i = 0; i < rows; ++i)
            out[i] = i;
        return out;
    }
    for (std::size_t k = 0; k < budget; ++k) {
        const std::size_t j = budget == 1 ? 0 : (k * (rows - 1) + (budget - 1) / 2) / (budget - 1);
        if (out.empty() || out.back() != j)
            out.push_back(j);
    }
    return out;
}

struct VerifyArgs {
    std::vector<std::string> specs;
    std::string dump_dir;
    std::size_t oracle_columns = 64;
    std::uint64_t seed = 1;
};

int run_verify(const VerifyArgs& a) {
    const auto names = a.specs.empty() ? kDefaultSpecs : split_list(a.specs);
    std::vector<ParsedSpec> specs;
    for (const auto& n : names)
        specs.push_back(parse_spec(n));
    if (!a.dump_dir.empty())
        std::filesystem::create_directories(a.dump_dir);

    fmt::print("{:<22} {:>8} {:>8} {:>10} {:>9} {:>10} {:>7} {:>11} {:>12} {:>10}  {}\n", "spec", "rows", "cols",
               "nnz", "sparsity", "max_err", "checked", "builder_ms", "oracle_ms", "speedup", "status");
    bool all_ok = true;
    for (std::size_t k = 0; k < specs.size(); ++k) {
        auto c = make_case(specs[k], a.seed + k);
        const std::size_t rows = c.sparse ? c.sparse->rows() : c.dense->rows();
        const std::size_t cols = c.sparse ? c.sparse->cols() : c.dense->cols();
        const auto check = rows_to_check(rows, a.oracle_columns);
        double max_err = 0.0;
        std::vector<double> analytic(cols);
        const auto t0 = Clock::now();
        numeric_tjac_rows<double>(c.map, c.point, c.eps, check, [&](std::size_t j, std::span<const double> row) {
            std::fill(analytic.begin(), analytic.end(), 0.0);
            if (c.sparse) {
                const auto ptr = c.sparse->indptr();
                for (auto p = ptr[j]; p < ptr[j + 1]; ++p)
                    analytic[c.sparse->indices()[p]] = c.sparse->data()[p];
            } else {
                for (std::size_t i = 0; i < cols; ++i)
                    analytic[i] = (*c.dense)(j, i);
            }
            for (std::size_t i = 0; i < cols; ++i)
                max_err = std::max(max_err, std::abs(analytic[i] - row[i]));
        });
        const double sampled_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        const double oracle_ms = sampled_ms * static_cast<double>(rows) / static_cast<double>(check.size());
        const bool pass = max_err <= c.tolerance;
        all_ok = all_ok && pass;
        const std::string sparsity =
            c.sparse ? fmt::format("{:.5f}", c.sparse->pattern().sparsity()) : std::string("-");
        const std::size_t nnz = c.sparse ? c.sparse->nnz() : rows * cols;
        fmt::print("{:<22} {:>8} {:>8} {:>10} {:>9} {:>10.2e} {:>7} {:>11.3f} {:>12.1f} {:>9.0f}x  {}\n", names[k],
                   rows, cols, nnz, sparsity, max_err, check.size(), c.builder_ms, oracle_ms,
                   oracle_ms / std::max(c.builder_ms, 1e-6), pass ? "ok" : fmt::format("FAIL (tol {:g})", c.tolerance));
        if (!a.dump_dir.empty()) {
            std::string file = names[k];
            std::replace(file.begin(), file.end(), ':', '_');
            const auto path = std::filesystem::path(a.dump_dir) / (file + ".csr");
            if (c.sparse)
                sparse::save_csr(path, *c.sparse);
            else
                sparse::save_csr(path, sparse::CsrMatrix<double>::from_dense(*c.dense, true));
        }
    }
    if (!all_ok)
        fmt::print(stderr, "verification failed: at least one builder exceeded its tolerance\n");
    return all_ok ? ok : verification_failed;
}

}  // namespace

void add_verify_jacobians(CLI::App& app, Action& action) {
    auto a = std::make_shared<VerifyArgs>();
    auto* cmd = app.add_subcommand("verify-jacobians", "Check analytical Jacobian builders against finite differences");
    cmd->add_option("--spec", a->specs,
                    "conv:CIxCOxHxW, relu:CxHxW, maxpool:CxHxWxK, rnn:H or gru:H (repeatable, comma lists)");
    cmd->add_option("--dump-dir", a->dump_dir, "Write each analytical matrix as a CSR file");
    cmd->add_option("--oracle-columns", a->oracle_columns,
                    "Oracle rows checked per spec, evenly spaced; 0 checks all")
        ->capture_default_str();
    cmd->add_option("--seed", a->seed)->capture_default_str();
    cmd->callback([a, &action] { action = [a] { return run_verify(*a); }; });
}

}  // namespace scanprop::cli
