// SPDX-License-Identifier: Apache-2.0
#include "scanprop/dense.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scanprop/error.hpp"

namespace scanprop {

template <typename T>
DenseMatrix<T>::DenseMatrix(std::size_t rows, std::size_t cols, T fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

template <typename T>
DenseMatrix<T>::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<T> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows * cols) {
        throw ShapeError("dense matrix storage holds " + std::to_string(data_.size()) +
                         " values, expected " + std::to_string(rows * cols));
    }
}

template <typename T>
DenseMatrix<T> DenseMatrix<T>::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
}

template <typename T>
DenseMatrix<T> DenseMatrix<T>::transposed() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

template <typename T>
void gemm_kernel(std::size_t rows, std::size_t inner, std::size_t cols, const T* a, const T* b, T* out) {
    std::fill(out, out + rows * cols, T{0});
    for (std::size_t i = 0; i < rows; ++i) {
        T* out_row = out + i * cols;
        const T* a_row = a + i * inner;
        for (std::size_t k = 0; k < inner; ++k) {
            const T aik = a_row[k];
            const T* b_row = b + k * cols;
            for (std::size_t j = 0; j < cols; ++j) out_row[j] += aik * b_row[j];
        }
    }
}

template <typename T>
void gemv_kernel(std::size_t rows, std::size_t cols, const T* a, const T* v, T* out) {
    for (std::size_t i = 0; i < rows; ++i) {
        const T* a_row = a + i * cols;
        T acc{0};
        for (std::size_t j = 0; j < cols; ++j) acc += a_row[j] * v[j];
        out[i] = acc;
    }
}

template <typename T>
DenseMatrix<T> matmul(const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " times " +
                         std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
    DenseMatrix<T> out(a.rows(), b.cols());
    gemm_kernel(a.rows(), a.cols(), b.cols(), a.values().data(), b.values().data(), out.values().data());
    return out;
}

template <typename T>
std::vector<T> matvec(const DenseMatrix<T>& a, std::span<const T> v) {
    if (a.cols() != v.size()) {
        throw ShapeError("matvec: matrix has " + std::to_string(a.cols()) + " columns, vector has " +
                         std::to_string(v.size()) + " entries");
    }
    std::vector<T> out(a.rows());
    gemv_kernel(a.rows(), a.cols(), a.values().data(), v.data(), out.data());
    return out;
}

template <typename T>
double max_abs_diff(const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("max_abs_diff: shape mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(static_cast<double>(a.values()[i]) - static_cast<double>(b.values()[i])));
    }
    return worst;
}

#define SCANPROP_INSTANTIATE_DENSE(T)                                                               \
    template class DenseMatrix<T>;                                                                  \
    template void gemm_kernel<T>(std::size_t, std::size_t, std::size_t, const T*, const T*, T*);    \
    template void gemv_kernel<T>(std::size_t, std::size_t, const T*, const T*, T*);                 \
    template DenseMatrix<T> matmul<T>(const DenseMatrix<T>&, const DenseMatrix<T>&);                \
    template std::vector<T> matvec<T>(const DenseMatrix<T>&, std::span<const T>);                   \
    template double max_abs_diff<T>(const DenseMatrix<T>&, const DenseMatrix<T>&);

SCANPROP_INSTANTIATE_DENSE(float)
SCANPROP_INSTANTIATE_DENSE(double)

}  // namespace scanprop
