// SPDX-License-Identifier: Apache-2.0
#include <string>

#include "scanprop/error.hpp"
#include "scanprop/sparse.hpp"

namespace scanprop::sparse {

SparsityPattern::SparsityPattern() : indptr_(1, 0) {}

SparsityPattern::SparsityPattern(Index rows, Index cols, std::vector<Offset> indptr, std::vector<Index> indices)
    : rows_(rows), cols_(cols), indptr_(std::move(indptr)), indices_(std::move(indices)) {
    if (indptr_.size() != static_cast<std::size_t>(rows_) + 1) {
        throw FormatError("indptr has " + std::to_string(indptr_.size()) + " entries, expected rows+1 = " +
                          std::to_string(static_cast<std::size_t>(rows_) + 1));
    }
    if (indptr_.front() != 0) throw FormatError("indptr[0] must be 0");
    if (indptr_.back() != indices_.size()) {
        throw FormatError("indptr[rows] = " + std::to_string(indptr_.back()) + " but " +
                          std::to_string(indices_.size()) + " column indices are stored");
    }
    for (Index r = 0; r < rows_; ++r) {
        const Offset begin = indptr_[r];
        const Offset end = indptr_[r + 1];
        if (end < begin) throw FormatError("indptr decreases at row " + std::to_string(r));
        if (end > indices_.size()) throw FormatError("indptr exceeds nnz at row " + std::to_string(r));
        for (Offset p = begin; p < end; ++p) {
            if (indices_[p] >= cols_) {
                throw FormatError("column " + std::to_string(indices_[p]) + " out of range in row " +
                                  std::to_string(r));
            }
            if (p > begin && indices_[p] <= indices_[p - 1]) {
                throw FormatError("column indices not strictly increasing in row " + std::to_string(r));
            }
        }
    }
}

SparsityPattern SparsityPattern::diagonal(Index n) {
    std::vector<Offset> indptr(static_cast<std::size_t>(n) + 1);
    std::vector<Index> indices(n);
    for (Index i = 0; i < n; ++i) {
        indptr[i] = i;
        indices[i] = i;
    }
    indptr[n] = n;
    return SparsityPattern(n, n, std::move(indptr), std::move(indices));
}

SparsityPattern SparsityPattern::full(Index rows, Index cols) {
    std::vector<Offset> indptr(static_cast<std::size_t>(rows) + 1);
    std::vector<Index> indices(static_cast<std::size_t>(rows) * cols);
    for (Index r = 0; r <= rows; ++r) indptr[r] = static_cast<Offset>(r) * cols;
    for (std::size_t p = 0; p < indices.size(); ++p) indices[p] = static_cast<Index>(p % cols);
    return SparsityPattern(rows, cols, std::move(indptr), std::move(indices));
}

double SparsityPattern::sparsity() const noexcept {
    const double total = static_cast<double>(rows_) * static_cast<double>(cols_);
    if (total == 0.0) return 0.0;
    return 1.0 - static_cast<double>(nnz()) / total;
}

bool same_pattern(const SparsityPattern& a, const SparsityPattern& b) noexcept {
    return &a == &b || a == b;
}

}  // namespace scanprop::sparse
