// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace scanprop {

/// Row-major dense matrix.
template <typename T>
class DenseMatrix {
public:
    using value_type = T;

    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, T fill = T{0});
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<T> values);

    static DenseMatrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }
    std::vector<T>& storage() noexcept { return data_; }
    const std::vector<T>& storage() const noexcept { return data_; }

    DenseMatrix transposed() const;

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

// Raw kernels shared by the dense and batched paths. All accumulate each
// output entry in ascending inner-index order starting from zero.

/// out[rows x cols] = a[rows x inner] * b[inner x cols]
template <typename T>
void gemm_kernel(std::size_t rows, std::size_t inner, std::size_t cols, const T* a, const T* b, T* out);

/// out[rows] = a[rows x cols] * v[cols]
template <typename T>
void gemv_kernel(std::size_t rows, std::size_t cols, const T* a, const T* v, T* out);

/// Returns a * b. Throws ShapeError when a.cols() != b.rows().
template <typename T>
DenseMatrix<T> matmul(const DenseMatrix<T>& a, const DenseMatrix<T>& b);

/// Returns a * v. Throws ShapeError when a.cols() != v.size().
template <typename T>
std::vector<T> matvec(const DenseMatrix<T>& a, std::span<const T> v);

/// Largest |a - b| over all entries; throws ShapeError on mismatched shapes.
template <typename T>
double max_abs_diff(const DenseMatrix<T>& a, const DenseMatrix<T>& b);

}  // namespace scanprop
