// SPDX-License-Identifier: Apache-2.0
//
// Compressed sparse row storage and the two-phase product pipeline: a
// symbolic plan computed once per pair of sparsity patterns, then a numeric
// pass that only gathers and accumulates.
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "scanprop/dense.hpp"

namespace scanprop::sparse {

using Index = std::uint32_t;
using Offset = std::uint64_t;

/// Row offsets and column ids of a CSR matrix without values. Immutable.
class SparsityPattern {
public:
    SparsityPattern();
    /// Validates the CSR invariants and throws FormatError on violation.
    SparsityPattern(Index rows, Index cols, std::vector<Offset> indptr, std::vector<Index> indices);

    static SparsityPattern diagonal(Index n);
    static SparsityPattern full(Index rows, Index cols);

    Index rows() const noexcept { return rows_; }
    Index cols() const noexcept { return cols_; }
    Offset nnz() const noexcept { return indices_.size(); }

    std::span<const Offset> indptr() const noexcept { return indptr_; }
    std::span<const Index> indices() const noexcept { return indices_; }
    std::span<const Index> row(Index r) const noexcept {
        return {indices_.data() + indptr_[r], static_cast<std::size_t>(indptr_[r + 1] - indptr_[r])};
    }

    /// Fraction of entries that are structurally zero.
    double sparsity() const noexcept;

    friend bool operator==(const SparsityPattern&, const SparsityPattern&) = default;

private:
    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<Offset> indptr_;
    std::vector<Index> indices_;
};

using PatternPtr = std::shared_ptr<const SparsityPattern>;

/// Pointer-equal or structurally equal.
bool same_pattern(const SparsityPattern& a, const SparsityPattern& b) noexcept;

template <typename T>
class CsrMatrix {
public:
    using value_type = T;

    CsrMatrix();
    CsrMatrix(PatternPtr pattern, std::vector<T> data);
    CsrMatrix(Index rows, Index cols, std::vector<Offset> indptr, std::vector<Index> indices, std::vector<T> data);

    static CsrMatrix identity(Index n);
    /// Stores every non-zero entry of `m`; exact zeros are kept only when `keep_zeros` is set.
    static CsrMatrix from_dense(const DenseMatrix<T>& m, bool keep_zeros = false);

    Index rows() const noexcept { return pattern_->rows(); }
    Index cols() const noexcept { return pattern_->cols(); }
    Offset nnz() const noexcept { return pattern_->nnz(); }

    const SparsityPattern& pattern() const noexcept { return *pattern_; }
    const PatternPtr& shared_pattern() const noexcept { return pattern_; }
    std::span<const Offset> indptr() const noexcept { return pattern_->indptr(); }
    std::span<const Index> indices() const noexcept { return pattern_->indices(); }
    std::span<const T> data() const noexcept { return data_; }

    /// Value at (r, c); zero when the entry is not stored.
    T at(Index r, Index c) const;
    DenseMatrix<T> to_dense() const;

    friend bool operator==(const CsrMatrix& a, const CsrMatrix& b) {
        return a.pattern() == b.pattern() && a.data_ == b.data_;
    }

private:
    PatternPtr pattern_;
    std::vector<T> data_;
};

/// Multiply-add counter filled in by the kernels below.
struct KernelStats {
    std::uint64_t multiply_adds = 0;
};

/// Precomputed index merge for left * right. For every output entry the plan
/// lists the (left.data, right.data) positions whose products sum into it, in
/// ascending order of the shared inner index.
class ProductPlan {
public:
    const PatternPtr& left() const noexcept { return left_; }
    const PatternPtr& right() const noexcept { return right_; }
    const PatternPtr& output() const noexcept { return output_; }

    Offset contribution_count() const noexcept { return left_pos_.size(); }
    std::span<const Offset> contribution_offsets() const noexcept { return contrib_ptr_; }
    std::span<const Index> left_positions() const noexcept { return left_pos_; }
    std::span<const Index> right_positions() const noexcept { return right_pos_; }

private:
    friend ProductPlan plan_product(const PatternPtr& left, const PatternPtr& right);

    PatternPtr left_;
    PatternPtr right_;
    PatternPtr output_;
    std::vector<Offset> contrib_ptr_;
    std::vector<Index> left_pos_;
    std::vector<Index> right_pos_;
};

/// Throws ShapeError when left.cols() != right.rows().
ProductPlan plan_product(const PatternPtr& left, const PatternPtr& right);
ProductPlan plan_product(const SparsityPattern& left, const SparsityPattern& right);

/// Output pattern and contribution count of left * right without storing the
/// contribution lists. Same traversal as plan_product.
struct SymbolicProduct {
    PatternPtr pattern;
    Offset contributions = 0;
};
SymbolicProduct symbolic_product(const SparsityPattern& left, const SparsityPattern& right);

/// Numeric phase. Throws PlanError if a or b does not carry the planned pattern.
template <typename T>
CsrMatrix<T> execute_plan(const ProductPlan& plan, const CsrMatrix<T>& a, const CsrMatrix<T>& b,
                          KernelStats* stats = nullptr);

/// One-shot Gustavson product; keeps structural zeros so the result pattern
/// equals plan_product(a.pattern(), b.pattern()).output().
template <typename T>
CsrMatrix<T> spgemm(const CsrMatrix<T>& a, const CsrMatrix<T>& b, KernelStats* stats = nullptr);

template <typename T>
std::vector<T> spmv(const CsrMatrix<T>& a, std::span<const T> v, KernelStats* stats = nullptr);

/// out[a.rows()] = a * v, no shape checks.
template <typename T>
void spmv_kernel(const CsrMatrix<T>& a, const T* v, T* out);

/// out[a.rows() x cols] = a * dense[a.cols() x cols], no shape checks.
template <typename T>
void csr_dense_kernel(const CsrMatrix<T>& a, const T* dense, std::size_t cols, T* out);

/// out[rows x b.cols()] = dense[rows x b.rows()] * b, no shape checks.
template <typename T>
void dense_csr_kernel(const T* dense, std::size_t rows, const CsrMatrix<T>& b, T* out);

/// Drops stored entries that are exactly zero.
template <typename T>
CsrMatrix<T> compact(const CsrMatrix<T>& a);

}  // namespace scanprop::sparse
