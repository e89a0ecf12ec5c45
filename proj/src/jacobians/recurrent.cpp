// SPDX-License-Identifier: Apache-2.0
#include <fmt/format.h>

#include "scanprop/error.hpp"
#include "scanprop/jacobians.hpp"

namespace scanprop::jacobians {

namespace {

template <typename T>
void check_step(const CellTape<T>& tape, std::size_t t) {
    if (t < 1 || t > tape.steps() || tape.hidden.size() != tape.steps() + 1)
        throw TapeError(fmt::format("timestep {} is outside the recorded range 1..{}", t, tape.steps()));
}

template <typename T>
void check_square(const DenseMatrix<T>& m, std::size_t n, const char* name) {
    if (m.rows() != n || m.cols() != n)
        throw ShapeError(fmt::format("{} is {}x{}, expected {}x{}", name, m.rows(), m.cols(), n, n));
}

}  // namespace

template <typename T>
DenseMatrix<T> rnn_tjac(const CellTape<T>& tape, std::size_t t, const DenseMatrix<T>& w_hh) {
    check_step(tape, t);
    const std::size_t n = tape.hidden_size;
    check_square(w_hh, n, "W_hh");
    const auto& h = tape.hidden[t];
    if (h.size() != n)
        throw TapeError(fmt::format("hidden state {} has {} entries, expected {}", t, h.size(), n));
    DenseMatrix<T> out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out(i, j) = w_hh(j, i) * (T{1} - h[j] * h[j]);
    return out;
}

template <typename T>
DenseMatrix<T> gru_tjac(const CellTape<T>& tape, std::size_t t, const DenseMatrix<T>& w_hr,
                        const DenseMatrix<T>& w_hz, const DenseMatrix<T>& w_hn) {
    check_step(tape, t);
    if (tape.kind != CellKind::gru || !tape.has_gates())
        throw TapeError("GRU gate values are missing from the tape");
    const std::size_t n = tape.hidden_size;
    check_square(w_hr, n, "W_hr");
    check_square(w_hz, n, "W_hz");
    check_square(w_hn, n, "W_hn");
    const auto& r = tape.reset[t - 1];
    const auto& z = tape.update[t - 1];
    const auto& g = tape.candidate[t - 1];
    const auto& m = tape.candidate_pre[t - 1];
    const auto& h_prev = tape.hidden[t - 1];
    if (r.size() != n || z.size() != n || g.size() != n || m.size() != n || h_prev.size() != n)
        throw TapeError(fmt::format("gate vectors of step {} do not have {} entries", t, n));

    // Column factors, one per output unit j.
    std::vector<T> reset_path(n), cand_scale(n), update_path(n), direct(n);
    for (std::size_t j = 0; j < n; ++j) {
        reset_path[j] = r[j] * (T{1} - r[j]) * m[j];
        cand_scale[j] = (T{1} - g[j] * g[j]) * (T{1} - z[j]);
        update_path[j] = z[j] * (T{1} - z[j]) * (h_prev[j] - g[j]);
        direct[j] = r[j];
    }
    DenseMatrix<T> out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            T v = (w_hr(j, i) * reset_path[j] + w_hn(j, i) * direct[j]) * cand_scale[j] + w_hz(j, i) * update_path[j];
            if (i == j)
                v += z[j];
            out(i, j) = v;
        }
    }
    return out;
}

#define SCANPROP_INSTANTIATE(T)                                                                                    \
    template DenseMatrix<T> rnn_tjac(const CellTape<T>&, std::size_t, const DenseMatrix<T>&);                     \
    template DenseMatrix<T> gru_tjac(const CellTape<T>&, std::size_t, const DenseMatrix<T>&, const DenseMatrix<T>&, \
                                     const DenseMatrix<T>&);
SCANPROP_INSTANTIATE(float)
SCANPROP_INSTANTIATE(double)
#undef SCANPROP_INSTANTIATE

}  // namespace scanprop::jacobians
