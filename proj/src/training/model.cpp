// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "scanprop/error.hpp"
#include "scanprop/jacobians.hpp"
#include "scanprop/rng.hpp"
#include "scanprop/training.hpp"

namespace scanprop::training {

template <typename T>
void ParamSet<T>::fill_zero() noexcept {
    for (auto& t : tensors_)
        std::fill(t.values.begin(), t.values.end(), T{0});
}

template <typename T>
std::size_t ParamSet<T>::scalar_count() const noexcept {
    std::size_t total = 0;
    for (const auto& t : tensors_)
        total += t.values.size();
    return total;
}

template <typename T>
Tensor<T>& ParamSet<T>::add(std::string name, std::size_t rows, std::size_t cols) {
    tensors_.push_back({std::move(name), rows, cols, std::vector<T>(rows * cols, T{0})});
    return tensors_.back();
}

template <typename T>
RnnParams<T>::RnnParams(std::size_t input_size, std::size_t hidden_size, std::size_t classes) {
    if (input_size == 0 || hidden_size == 0 || classes == 0)
        throw ShapeError("RNN sizes must be positive");
    this->add("W_ih", hidden_size, input_size);
    this->add("W_hh", hidden_size, hidden_size);
    this->add("b_ih", hidden_size, 1);
    this->add("b_hh", hidden_size, 1);
    this->add("W_out", classes, hidden_size);
    this->add("b_out", classes, 1);
}

template <typename T>
GruParams<T>::GruParams(std::size_t input_size, std::size_t hidden_size, std::size_t classes) {
    if (input_size == 0 || hidden_size == 0 || classes == 0)
        throw ShapeError("GRU sizes must be positive");
    for (const char* name : {"W_ir", "W_iz", "W_in"})
        this->add(name, hidden_size, input_size);
    for (const char* name : {"W_hr", "W_hz", "W_hn"})
        this->add(name, hidden_size, hidden_size);
    for (const char* name : {"b_ir", "b_hr", "b_iz", "b_hz", "b_in", "b_hn"})
        this->add(name, hidden_size, 1);
    this->add("W_out", classes, hidden_size);
    this->add("b_out", classes, 1);
}

template <typename T>
void init_uniform(ParamSet<T>& params, std::size_t hidden_size, std::uint64_t seed) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
    Rng rng(seed);
    for (auto& t : params.tensors())
        for (auto& v : t.values)
            v = static_cast<T>(rng.uniform(-bound, bound));
}

namespace {

// out = W x + b (+ out when accumulate).
template <typename T>
void affine(const Tensor<T>& w, std::span<const T> x, const Tensor<T>& b, std::vector<T>& out) {
    out.resize(w.rows);
    for (std::size_t i = 0; i < w.rows; ++i) {
        T acc{0};
        for (std::size_t j = 0; j < w.cols; ++j)
            acc += w(i, j) * x[j];
        out[i] = acc + b.values[i];
    }
}

template <typename T>
T sigmoid(T v) {
    return T{1} / (T{1} + std::exp(-v));
}

template <typename T>
void check_cell_inputs(std::size_t input_size, std::size_t hidden_size, std::span<const T> x,
                       std::span<const T> h_prev) {
    if (x.size() != input_size || h_prev.size() != hidden_size)
        throw ShapeError(fmt::format("cell expects input {} and hidden {}, got {} and {}", input_size, hidden_size,
                                     x.size(), h_prev.size()));
}

}  // namespace

template <typename T>
std::vector<T> rnn_cell(const RnnParams<T>& p, std::span<const T> x, std::span<const T> h_prev) {
    check_cell_inputs(p.input_size(), p.hidden_size(), x, h_prev);
    std::vector<T> a, b;
    affine(p.w_ih(), x, p.b_ih(), a);
    affine(p.w_hh(), h_prev, p.b_hh(), b);
    for (std::size_t i = 0; i < a.size(); ++i)
        a[i] = std::tanh(a[i] + b[i]);
    return a;
}

template <typename T>
std::vector<T> gru_cell(const GruParams<T>& p, std::span<const T> x, std::span<const T> h_prev,
                        std::vector<T>* reset, std::vector<T>* update, std::vector<T>* candidate,
                        std::vector<T>* candidate_pre) {
    check_cell_inputs(p.input_size(), p.hidden_size(), x, h_prev);
    const std::size_t H = p.hidden_size();
    std::vector<T> xr, hr, xz, hz, xn, m;
    affine(p.w_ir(), x, p.b_ir(), xr);
    affine(p.w_hr(), h_prev, p.b_hr(), hr);
    affine(p.w_iz(), x, p.b_iz(), xz);
    affine(p.w_hz(), h_prev, p.b_hz(), hz);
    affine(p.w_in(), x, p.b_in(), xn);
    affine(p.w_hn(), h_prev, p.b_hn(), m);
    std::vector<T> r(H), z(H), n(H), h(H);
    for (std::size_t i = 0; i < H; ++i) {
        r[i] = sigmoid(xr[i] + hr[i]);
        z[i] = sigmoid(xz[i] + hz[i]);
        n[i] = std::tanh(xn[i] + r[i] * m[i]);
        h[i] = (T{1} - z[i]) * n[i] + z[i] * h_prev[i];
    }
    if (reset)
        *reset = std::move(r);
    if (update)
        *update = std::move(z);
    if (candidate)
        *candidate = std::move(n);
    if (candidate_pre)
        *candidate_pre = std::move(m);
    return h;
}

template <typename T>
LossResult<T> softmax_cross_entropy(std::span<const T> logits, std::size_t label) {
    if (label >= logits.size())
        throw ShapeError(fmt::format("label {} outside {} classes", label, logits.size()));
    LossResult<T> r;
    const T top = *std::max_element(logits.begin(), logits.end());
    r.probabilities.resize(logits.size());
    T total{0};
    for (std::size_t k = 0; k < logits.size(); ++k) {
        r.probabilities[k] = std::exp(logits[k] - top);
        total += r.probabilities[k];
    }
    for (auto& v : r.probabilities)
        v /= total;
    r.loss = -(logits[label] - top - std::log(total));
    r.grad_logits = r.probabilities;
    r.grad_logits[label] -= T{1};
    return r;
}

namespace {

template <typename T, typename Params, typename Step>
ForwardResult<T> run_forward(const Params& p, std::span<const T> x, std::size_t steps, std::size_t label,
                             std::span<const T> h0, CellKind kind, Step step) {
    const std::size_t C = p.input_size(), H = p.hidden_size();
    if (steps == 0)
        throw ShapeError("a sequence needs at least one step");
    if (x.size() != steps * C)
        throw ShapeError(fmt::format("sequence holds {} values, expected {} x {}", x.size(), steps, C));
    if (!h0.empty() && h0.size() != H)
        throw ShapeError("initial hidden state has the wrong size");
    ForwardResult<T> f;
    CellTape<T>& tape = f.tape;
    tape.kind = kind;
    tape.input_size = C;
    tape.hidden_size = H;
    tape.hidden.reserve(steps + 1);
    tape.hidden.push_back(h0.empty() ? std::vector<T>(H, T{0}) : std::vector<T>(h0.begin(), h0.end()));
    for (std::size_t t = 0; t < steps; ++t) {
        tape.inputs.emplace_back(x.begin() + static_cast<std::ptrdiff_t>(t * C),
                                 x.begin() + static_cast<std::ptrdiff_t>((t + 1) * C));
        tape.hidden.push_back(step(tape.inputs.back(), tape.hidden.back(), tape));
    }
    affine(p.w_out(), std::span<const T>(tape.hidden.back()), p.b_out(), f.logits);
    f.loss = softmax_cross_entropy<T>(f.logits, label);
    return f;
}

}  // namespace

template <typename T>
ForwardResult<T> rnn_forward(const RnnParams<T>& p, std::span<const T> x, std::size_t steps, std::size_t label,
                             std::span<const T> h0) {
    return run_forward<T>(p, x, steps, label, h0, CellKind::rnn,
                          [&](const std::vector<T>& xt, const std::vector<T>& h, CellTape<T>&) {
                              return rnn_cell<T>(p, xt, h);
                          });
}

template <typename T>
ForwardResult<T> gru_forward(const GruParams<T>& p, std::span<const T> x, std::size_t steps, std::size_t label,
                             std::span<const T> h0) {
    return run_forward<T>(p, x, steps, label, h0, CellKind::gru,
                          [&](const std::vector<T>& xt, const std::vector<T>& h, CellTape<T>& tape) {
                              std::vector<T> r, z, n, m;
                              auto next = gru_cell<T>(p, xt, h, &r, &z, &n, &m);
                              tape.reset.push_back(std::move(r));
                              tape.update.push_back(std::move(z));
                              tape.candidate.push_back(std::move(n));
                              tape.candidate_pre.push_back(std::move(m));
                              return next;
                          });
}

namespace {

// g += a b^T
template <typename T>
void add_outer(Tensor<T>& g, std::span<const T> a, std::span<const T> b) {
    for (std::size_t i = 0; i < g.rows; ++i)
        for (std::size_t j = 0; j < g.cols; ++j)
            g(i, j) += a[i] * b[j];
}

template <typename T>
void add_to(Tensor<T>& g, std::span<const T> a) {
    for (std::size_t i = 0; i < a.size(); ++i)
        g.values[i] += a[i];
}

template <typename T, typename Params, typename Forward, typename Tjac, typename Accumulate>
BatchGradients<Params> backward(const Params& p, std::span<const Sample<T>> batch,
                                const scan::ExecutorConfig& executor, WorkerPool& pool, scan::ScanTrace* trace,
                                Forward forward, Tjac tjac, Accumulate accumulate) {
    if (batch.empty())
        throw ShapeError("empty batch");
    const std::size_t B = batch.size(), H = p.hidden_size(), K = p.classes();
    const std::size_t steps = batch.front().steps;
    for (const auto& s : batch)
        if (s.steps != steps)
            throw ShapeError("all sequences in a batch must have the same length");

    BatchGradients<Params> out{0.0, p};
    out.grads.fill_zero();
    Params& g = out.grads;

    std::vector<ForwardResult<T>> fwd;
    fwd.reserve(B);
    std::vector<T> seed(B * H, T{0});
    const T inv_batch = T{1} / static_cast<T>(B);
    for (std::size_t b = 0; b < B; ++b) {
        fwd.push_back(forward(batch[b]));
        const auto& f = fwd.back();
        out.loss += static_cast<double>(f.loss.loss);
        std::vector<T> dl(K);
        for (std::size_t k = 0; k < K; ++k)
            dl[k] = f.loss.grad_logits[k] * inv_batch;
        const auto& h_last = f.tape.hidden.back();
        add_outer<T>(g.w_out(), dl, h_last);
        add_to<T>(g.b_out(), dl);
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t j = 0; j < H; ++j)
                seed[b * H + j] += p.w_out()(k, j) * dl[k];
    }
    out.loss /= static_cast<double>(B);

    std::vector<scan::ScanElement<T>> elements;
    elements.reserve(steps);
    elements.push_back(scan::ScanElement<T>::vectors(B, H, std::move(seed)));
    for (std::size_t t = steps; t >= 2; --t) {
        std::vector<T> block(B * H * H);
        for (std::size_t b = 0; b < B; ++b) {
            const DenseMatrix<T> j = tjac(fwd[b].tape, t);
            std::copy(j.storage().begin(), j.storage().end(), block.begin() + static_cast<std::ptrdiff_t>(b * H * H));
        }
        elements.push_back(scan::ScanElement<T>::dense_batch(B, H, H, std::move(block)));
    }
    scan::ScanOptions options;
    options.trace = trace;
    options.with_total = true;
    const auto grads = scan::run_scan(scan::ScanArray<T>(std::move(elements)), executor, pool, options);

    // grads[steps - t + 1] holds dl/dh_t for t = 1 .. steps.
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t t = 1; t <= steps; ++t) {
            const auto& block = grads[steps - t + 1].as_vector();
            const std::size_t slice = block.batch == 1 ? 0 : b;
            accumulate(g, fwd[b].tape, t, std::span<const T>(block.values.data() + slice * H, H));
        }
    }
    return out;
}

}  // namespace

template <typename T>
BatchGradients<RnnParams<T>> rnn_backward_via_scan(const RnnParams<T>& p, std::span<const Sample<T>> batch,
                                                   const scan::ExecutorConfig& executor, WorkerPool& pool,
                                                   scan::ScanTrace* trace) {
    const DenseMatrix<T> w_hh = p.w_hh().matrix();
    const std::size_t H = p.hidden_size();
    std::vector<T> pre(H);
    return backward<T>(
        p, batch, executor, pool, trace,
        [&](const Sample<T>& s) { return rnn_forward<T>(p, s.inputs, s.steps, s.label); },
        [&](const CellTape<T>& tape, std::size_t t) { return jacobians::rnn_tjac(tape, t, w_hh); },
        [&](RnnParams<T>& g, const CellTape<T>& tape, std::size_t t, std::span<const T> delta) {
            const auto& h = tape.hidden[t];
            for (std::size_t j = 0; j < H; ++j)
                pre[j] = delta[j] * (T{1} - h[j] * h[j]);
            add_outer<T>(g.w_ih(), pre, tape.inputs[t - 1]);
            add_outer<T>(g.w_hh(), pre, tape.hidden[t - 1]);
            add_to<T>(g.b_ih(), pre);
            add_to<T>(g.b_hh(), pre);
        });
}

template <typename T>
BatchGradients<GruParams<T>> gru_backward_via_scan(const GruParams<T>& p, std::span<const Sample<T>> batch,
                                                   const scan::ExecutorConfig& executor, WorkerPool& pool,
                                                   scan::ScanTrace* trace) {
    const DenseMatrix<T> w_hr = p.w_hr().matrix(), w_hz = p.w_hz().matrix(), w_hn = p.w_hn().matrix();
    const std::size_t H = p.hidden_size();
    std::vector<T> d_reset(H), d_update(H), d_cand(H), d_pre(H);
    return backward<T>(
        p, batch, executor, pool, trace,
        [&](const Sample<T>& s) { return gru_forward<T>(p, s.inputs, s.steps, s.label); },
        [&](const CellTape<T>& tape, std::size_t t) { return jacobians::gru_tjac(tape, t, w_hr, w_hz, w_hn); },
        [&](GruParams<T>& g, const CellTape<T>& tape, std::size_t t, std::span<const T> delta) {
            const auto& r = tape.reset[t - 1];
            const auto& z = tape.update[t - 1];
            const auto& n = tape.candidate[t - 1];
            const auto& m = tape.candidate_pre[t - 1];
            const auto& h_prev = tape.hidden[t - 1];
            const auto& x = tape.inputs[t - 1];
            for (std::size_t j = 0; j < H; ++j) {
                const T dn = delta[j] * (T{1} - z[j]);
                const T dz = delta[j] * (h_prev[j] - n[j]);
                d_cand[j] = dn * (T{1} - n[j] * n[j]);
                d_update[j] = dz * z[j] * (T{1} - z[j]);
                d_reset[j] = d_cand[j] * m[j] * r[j] * (T{1} - r[j]);
                d_pre[j] = d_cand[j] * r[j];
            }
            add_outer<T>(g.w_ir(), d_reset, x);
            add_outer<T>(g.w_hr(), d_reset, h_prev);
            add_to<T>(g.b_ir(), d_reset);
            add_to<T>(g.b_hr(), d_reset);
            add_outer<T>(g.w_iz(), d_update, x);
            add_outer<T>(g.w_hz(), d_update, h_prev);
            add_to<T>(g.b_iz(), d_update);
            add_to<T>(g.b_hz(), d_update);
            add_outer<T>(g.w_in(), d_cand, x);
            add_to<T>(g.b_in(), d_cand);
            add_outer<T>(g.w_hn(), d_pre, h_prev);
            add_to<T>(g.b_hn(), d_pre);
        });
}

#define SCANPROP_INSTANTIATE(T)                                                                                  \
    template class ParamSet<T>;                                                                                  \
    template class RnnParams<T>;                                                                                 \
    template class GruParams<T>;                                                                                 \
    template void init_uniform(ParamSet<T>&, std::size_t, std::uint64_t);                                        \
    template std::vector<T> rnn_cell(const RnnParams<T>&, std::span<const T>, std::span<const T>);               \
    template std::vector<T> gru_cell(const GruParams<T>&, std::span<const T>, std::span<const T>,                \
                                     std::vector<T>*, std::vector<T>*, std::vector<T>*, std::vector<T>*);        \
    template LossResult<T> softmax_cross_entropy(std::span<const T>, std::size_t);                               \
    template ForwardResult<T> rnn_forward(const RnnParams<T>&, std::span<const T>, std::size_t, std::size_t,     \
                                          std::span<const T>);                                                   \
    template ForwardResult<T> gru_forward(const GruParams<T>&, std::span<const T>, std::size_t, std::size_t,     \
                                          std::span<const T>);                                                   \
    template BatchGradients<RnnParams<T>> rnn_backward_via_scan(const RnnParams<T>&, std::span<const Sample<T>>, \
                                                                const scan::ExecutorConfig&, WorkerPool&,        \
                                                                scan::ScanTrace*);                               \
    template BatchGradients<GruParams<T>> gru_backward_via_scan(const GruParams<T>&, std::span<const Sample<T>>, \
                                                                const scan::ExecutorConfig&, WorkerPool&,        \
                                                                scan::ScanTrace*);
SCANPROP_INSTANTIATE(float)
SCANPROP_INSTANTIATE(double)
#undef SCANPROP_INSTANTIATE

}  // namespace scanprop::training
