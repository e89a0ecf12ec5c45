// SPDX-License-Identifier: Apache-2.0
// Shared helpers for the unit tests: random operands and dense reference math.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "scanprop/dense.hpp"
#include "scanprop/rng.hpp"
#include "scanprop/sparse.hpp"

namespace scanprop::test {

template <typename T>
DenseMatrix<T> random_dense(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
    DenseMatrix<T> m(rows, cols);
    for (auto& v : m.storage())
        v = static_cast<T>(rng.uniform(lo, hi));
    return m;
}

/// Each entry present with probability `density`; present values are never 0.
template <typename T>
sparse::CsrMatrix<T> random_csr(std::size_t rows, std::size_t cols, double density, Rng& rng) {
    DenseMatrix<T> m(rows, cols);
    for (auto& v : m.storage())
        if (rng.bernoulli(density))
            v = static_cast<T>(rng.uniform(0.5, 1.5) * (rng.bernoulli(0.5) ? 1 : -1));
    return sparse::CsrMatrix<T>::from_dense(m);
}

/// Plain triple loop, ascending inner index.
template <typename T>
DenseMatrix<T> reference_product(const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
    DenseMatrix<T> out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            T acc{0};
            for (std::size_t k = 0; k < a.cols(); ++k)
                acc += a(i, k) * b(k, j);
            out(i, j) = acc;
        }
    return out;
}

/// Boolean product of the non-zero structures, as (row, col) flags.
inline std::vector<std::vector<bool>> boolean_product(const sparse::SparsityPattern& a,
                                                      const sparse::SparsityPattern& b) {
    std::vector<std::vector<bool>> out(a.rows(), std::vector<bool>(b.cols(), false));
    for (sparse::Index i = 0; i < a.rows(); ++i)
        for (auto k : a.row(i))
            for (auto j : b.row(k))
                out[i][j] = true;
    return out;
}

inline std::vector<std::vector<bool>> flags_of(const sparse::SparsityPattern& p) {
    std::vector<std::vector<bool>> out(p.rows(), std::vector<bool>(p.cols(), false));
    for (sparse::Index i = 0; i < p.rows(); ++i)
        for (auto j : p.row(i))
            out[i][j] = true;
    return out;
}

/// max |a - b| / max(1, |b|) over all entries.
template <typename T>
double max_rel_diff(std::span<const T> a, std::span<const T> b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double ref = static_cast<double>(b[i]);
        const double scale = std::max(1.0, std::abs(ref));
        worst = std::max(worst, std::abs(static_cast<double>(a[i]) - ref) / scale);
    }
    return worst;
}

/// Structural checks every CsrMatrix must pass.
template <typename T>
bool csr_invariants_hold(const sparse::CsrMatrix<T>& m) {
    const auto ptr = m.indptr();
    const auto idx = m.indices();
    if (ptr.size() != std::size_t{m.rows()} + 1 || ptr[0] != 0 || ptr.back() != idx.size() ||
        m.data().size() != idx.size())
        return false;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        if (ptr[r] > ptr[r + 1])
            return false;
        for (auto k = ptr[r]; k < ptr[r + 1]; ++k) {
            if (idx[k] >= m.cols())
                return false;
            if (k > ptr[r] && idx[k - 1] >= idx[k])
                return false;
        }
    }
    return true;
}

}  // namespace scanprop::test
