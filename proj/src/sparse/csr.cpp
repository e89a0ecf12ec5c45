// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <string>

#include "scanprop/error.hpp"
#include "scanprop/sparse.hpp"

namespace scanprop::sparse {

template <typename T>
CsrMatrix<T>::CsrMatrix() : pattern_(std::make_shared<const SparsityPattern>()) {}

template <typename T>
CsrMatrix<T>::CsrMatrix(PatternPtr pattern, std::vector<T> data) : pattern_(std::move(pattern)), data_(std::move(data)) {
    if (!pattern_) throw FormatError("CSR matrix needs a sparsity pattern");
    if (data_.size() != pattern_->nnz()) {
        throw FormatError("CSR data holds " + std::to_string(data_.size()) + " values for " +
                          std::to_string(pattern_->nnz()) + " stored entries");
    }
}

template <typename T>
CsrMatrix<T>::CsrMatrix(Index rows, Index cols, std::vector<Offset> indptr, std::vector<Index> indices,
                        std::vector<T> data)
    : CsrMatrix(std::make_shared<const SparsityPattern>(rows, cols, std::move(indptr), std::move(indices)),
                std::move(data)) {}

template <typename T>
CsrMatrix<T> CsrMatrix<T>::identity(Index n) {
    return CsrMatrix(std::make_shared<const SparsityPattern>(SparsityPattern::diagonal(n)), std::vector<T>(n, T{1}));
}

template <typename T>
CsrMatrix<T> CsrMatrix<T>::from_dense(const DenseMatrix<T>& m, bool keep_zeros) {
    std::vector<Offset> indptr{0};
    std::vector<Index> indices;
    std::vector<T> data;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (keep_zeros || m(r, c) != T{0}) {
                indices.push_back(static_cast<Index>(c));
                data.push_back(m(r, c));
            }
        }
        indptr.push_back(indices.size());
    }
    return CsrMatrix(static_cast<Index>(m.rows()), static_cast<Index>(m.cols()), std::move(indptr), std::move(indices),
                     std::move(data));
}

template <typename T>
T CsrMatrix<T>::at(Index r, Index c) const {
    if (r >= rows() || c >= cols()) throw ShapeError("CSR element access out of range");
    const auto cols_in_row = pattern_->row(r);
    const auto it = std::lower_bound(cols_in_row.begin(), cols_in_row.end(), c);
    if (it == cols_in_row.end() || *it != c) return T{0};
    return data_[pattern_->indptr()[r] + static_cast<Offset>(it - cols_in_row.begin())];
}

template <typename T>
DenseMatrix<T> CsrMatrix<T>::to_dense() const {
    DenseMatrix<T> out(rows(), cols());
    const auto ptr = indptr();
    const auto idx = indices();
    for (Index r = 0; r < rows(); ++r)
        for (Offset p = ptr[r]; p < ptr[r + 1]; ++p) out(r, idx[p]) = data_[p];
    return out;
}

template <typename T>
CsrMatrix<T> compact(const CsrMatrix<T>& a) {
    std::vector<Offset> indptr{0};
    std::vector<Index> indices;
    std::vector<T> data;
    indptr.reserve(static_cast<std::size_t>(a.rows()) + 1);
    const auto ptr = a.indptr();
    const auto idx = a.indices();
    const auto val = a.data();
    for (Index r = 0; r < a.rows(); ++r) {
        for (Offset p = ptr[r]; p < ptr[r + 1]; ++p) {
            if (val[p] != T{0}) {
                indices.push_back(idx[p]);
                data.push_back(val[p]);
            }
        }
        indptr.push_back(indices.size());
    }
    return CsrMatrix<T>(a.rows(), a.cols(), std::move(indptr), std::move(indices), std::move(data));
}

template class CsrMatrix<float>;
template class CsrMatrix<double>;
template CsrMatrix<float> compact<float>(const CsrMatrix<float>&);
template CsrMatrix<double> compact<double>(const CsrMatrix<double>&);

}  // namespace scanprop::sparse
