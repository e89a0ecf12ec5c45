// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <limits>
#include <type_traits>
#include <string>

#include "scanprop/error.hpp"
#include "scanprop/sparse.hpp"

namespace scanprop::sparse {

namespace {

constexpr Index kUnseen = std::numeric_limits<Index>::max();

void check_chain(const SparsityPattern& left, const SparsityPattern& right, const char* what) {
    if (left.cols() != right.rows()) {
        throw ShapeError(std::string(what) + ": left is " + std::to_string(left.rows()) + "x" +
                         std::to_string(left.cols()) + ", right is " + std::to_string(right.rows()) + "x" +
                         std::to_string(right.cols()));
    }
}

// Row-by-row structural merge shared by plan_product and symbolic_product.
// Emits the sorted output columns of each row together with per-column
// contribution counts; when `on_pair` is non-null it is then called once per
// (output slot, left position, right position) in ascending inner-index order.
template <typename PairSink>
Offset merge_rows(const SparsityPattern& left, const SparsityPattern& right, std::vector<Offset>& out_indptr,
                  std::vector<Index>& out_indices, std::vector<Offset>* contrib_ptr, PairSink&& on_pair) {
    const auto lptr = left.indptr();
    const auto lidx = left.indices();
    const auto rptr = right.indptr();
    const auto ridx = right.indices();

    std::vector<Index> marker(right.cols(), kUnseen);
    std::vector<Offset> count(right.cols(), 0);
    std::vector<Offset> fill(right.cols(), 0);
    std::vector<Index> row_cols;

    out_indptr.assign(1, 0);
    out_indptr.reserve(static_cast<std::size_t>(left.rows()) + 1);
    Offset pairs = 0;

    for (Index i = 0; i < left.rows(); ++i) {
        row_cols.clear();
        for (Offset pa = lptr[i]; pa < lptr[i + 1]; ++pa) {
            const Index k = lidx[pa];
            for (Offset pb = rptr[k]; pb < rptr[k + 1]; ++pb) {
                const Index j = ridx[pb];
                if (marker[j] != i) {
                    marker[j] = i;
                    count[j] = 0;
                    row_cols.push_back(j);
                }
                ++count[j];
            }
        }
        std::sort(row_cols.begin(), row_cols.end());
        for (const Index j : row_cols) {
            out_indices.push_back(j);
            fill[j] = pairs;
            pairs += count[j];
            if (contrib_ptr) contrib_ptr->push_back(pairs);
        }
        out_indptr.push_back(out_indices.size());
        if constexpr (!std::is_same_v<std::decay_t<PairSink>, std::nullptr_t>) {
            for (Offset pa = lptr[i]; pa < lptr[i + 1]; ++pa) {
                const Index k = lidx[pa];
                for (Offset pb = rptr[k]; pb < rptr[k + 1]; ++pb) on_pair(fill[ridx[pb]]++, pa, pb);
            }
        }
    }
    return pairs;
}

template <typename T>
void check_plan_operand(const PatternPtr& planned, const CsrMatrix<T>& m, const char* side) {
    if (planned.get() != &m.pattern() && !same_pattern(*planned, m.pattern())) {
        throw PlanError(std::string("execute_plan: ") + side + " operand does not carry the planned pattern");
    }
}

}  // namespace

ProductPlan plan_product(const PatternPtr& left, const PatternPtr& right) {
    check_chain(*left, *right, "plan_product");
    if (left->nnz() > std::numeric_limits<Index>::max() || right->nnz() > std::numeric_limits<Index>::max()) {
        throw FormatError("plan_product: operand nnz exceeds 32-bit positions");
    }
    ProductPlan plan;
    plan.left_ = left;
    plan.right_ = right;
    plan.contrib_ptr_.assign(1, 0);

    std::vector<Offset> out_indptr;
    std::vector<Index> out_indices;
    auto& lpos = plan.left_pos_;
    auto& rpos = plan.right_pos_;
    merge_rows(*left, *right, out_indptr, out_indices, &plan.contrib_ptr_, [&](Offset slot, Offset pa, Offset pb) {
        if (slot >= lpos.size()) {
            lpos.resize(plan.contrib_ptr_.back());
            rpos.resize(plan.contrib_ptr_.back());
        }
        lpos[slot] = static_cast<Index>(pa);
        rpos[slot] = static_cast<Index>(pb);
    });
    lpos.resize(plan.contrib_ptr_.back());
    rpos.resize(plan.contrib_ptr_.back());
    plan.output_ =
        std::make_shared<const SparsityPattern>(left->rows(), right->cols(), std::move(out_indptr), std::move(out_indices));
    return plan;
}

ProductPlan plan_product(const SparsityPattern& left, const SparsityPattern& right) {
    return plan_product(std::make_shared<const SparsityPattern>(left), std::make_shared<const SparsityPattern>(right));
}

SymbolicProduct symbolic_product(const SparsityPattern& left, const SparsityPattern& right) {
    check_chain(left, right, "symbolic_product");
    std::vector<Offset> out_indptr;
    std::vector<Index> out_indices;
    const Offset pairs = merge_rows(left, right, out_indptr, out_indices, nullptr, nullptr);
    return {std::make_shared<const SparsityPattern>(left.rows(), right.cols(), std::move(out_indptr),
                                                    std::move(out_indices)),
            pairs};
}

template <typename T>
CsrMatrix<T> execute_plan(const ProductPlan& plan, const CsrMatrix<T>& a, const CsrMatrix<T>& b, KernelStats* stats) {
    check_plan_operand(plan.left(), a, "left");
    check_plan_operand(plan.right(), b, "right");
    const auto ptr = plan.contribution_offsets();
    const auto lpos = plan.left_positions();
    const auto rpos = plan.right_positions();
    const auto ad = a.data();
    const auto bd = b.data();
    const std::size_t out_nnz = plan.output()->nnz();
    std::vector<T> out(out_nnz);
    for (std::size_t e = 0; e < out_nnz; ++e) {
        T acc{0};
        for (Offset c = ptr[e]; c < ptr[e + 1]; ++c) acc += ad[lpos[c]] * bd[rpos[c]];
        out[e] = acc;
    }
    if (stats) stats->multiply_adds += plan.contribution_count();
    return CsrMatrix<T>(plan.output(), std::move(out));
}

template <typename T>
CsrMatrix<T> spgemm(const CsrMatrix<T>& a, const CsrMatrix<T>& b, KernelStats* stats) {
    check_chain(a.pattern(), b.pattern(), "spgemm");
    const auto aptr = a.indptr();
    const auto aidx = a.indices();
    const auto ad = a.data();
    const auto bptr = b.indptr();
    const auto bidx = b.indices();
    const auto bd = b.data();

    std::vector<T> acc(b.cols(), T{0});
    std::vector<Index> marker(b.cols(), kUnseen);
    std::vector<Index> row_cols;
    std::vector<Offset> indptr{0};
    std::vector<Index> indices;
    std::vector<T> data;
    indptr.reserve(static_cast<std::size_t>(a.rows()) + 1);
    std::uint64_t madds = 0;

    for (Index i = 0; i < a.rows(); ++i) {
        row_cols.clear();
        for (Offset pa = aptr[i]; pa < aptr[i + 1]; ++pa) {
            const Index k = aidx[pa];
            const T av = ad[pa];
            for (Offset pb = bptr[k]; pb < bptr[k + 1]; ++pb) {
                const Index j = bidx[pb];
                if (marker[j] != i) {
                    marker[j] = i;
                    acc[j] = T{0};
                    row_cols.push_back(j);
                }
                acc[j] += av * bd[pb];
            }
            madds += bptr[k + 1] - bptr[k];
        }
        std::sort(row_cols.begin(), row_cols.end());
        for (const Index j : row_cols) {
            indices.push_back(j);
            data.push_back(acc[j]);
        }
        indptr.push_back(indices.size());
    }
    if (stats) stats->multiply_adds += madds;
    return CsrMatrix<T>(a.rows(), b.cols(), std::move(indptr), std::move(indices), std::move(data));
}

template <typename T>
void spmv_kernel(const CsrMatrix<T>& a, const T* v, T* out) {
    const auto ptr = a.indptr();
    const auto idx = a.indices();
    const auto val = a.data();
    for (Index r = 0; r < a.rows(); ++r) {
        T acc{0};
        for (Offset p = ptr[r]; p < ptr[r + 1]; ++p) acc += val[p] * v[idx[p]];
        out[r] = acc;
    }
}

template <typename T>
std::vector<T> spmv(const CsrMatrix<T>& a, std::span<const T> v, KernelStats* stats) {
    if (a.cols() != v.size()) {
        throw ShapeError("spmv: matrix has " + std::to_string(a.cols()) + " columns, vector has " +
                         std::to_string(v.size()) + " entries");
    }
    std::vector<T> out(a.rows());
    spmv_kernel(a, v.data(), out.data());
    if (stats) stats->multiply_adds += a.nnz();
    return out;
}

template <typename T>
void csr_dense_kernel(const CsrMatrix<T>& a, const T* dense, std::size_t cols, T* out) {
    const auto ptr = a.indptr();
    const auto idx = a.indices();
    const auto val = a.data();
    std::fill(out, out + static_cast<std::size_t>(a.rows()) * cols, T{0});
    for (Index r = 0; r < a.rows(); ++r) {
        T* out_row = out + static_cast<std::size_t>(r) * cols;
        for (Offset p = ptr[r]; p < ptr[r + 1]; ++p) {
            const T av = val[p];
            const T* d_row = dense + static_cast<std::size_t>(idx[p]) * cols;
            for (std::size_t j = 0; j < cols; ++j) out_row[j] += av * d_row[j];
        }
    }
}

template <typename T>
void dense_csr_kernel(const T* dense, std::size_t rows, const CsrMatrix<T>& b, T* out) {
    const auto ptr = b.indptr();
    const auto idx = b.indices();
    const auto val = b.data();
    const std::size_t inner = b.rows();
    const std::size_t cols = b.cols();
    std::fill(out, out + rows * cols, T{0});
    for (std::size_t i = 0; i < rows; ++i) {
        T* out_row = out + i * cols;
        const T* d_row = dense + i * inner;
        for (std::size_t k = 0; k < inner; ++k) {
            const T dk = d_row[k];
            for (Offset p = ptr[k]; p < ptr[k + 1]; ++p) out_row[idx[p]] += dk * val[p];
        }
    }
}

#define SCANPROP_INSTANTIATE_PRODUCTS(T)                                                                   \
    template CsrMatrix<T> execute_plan<T>(const ProductPlan&, const CsrMatrix<T>&, const CsrMatrix<T>&,    \
                                          KernelStats*);                                                   \
    template CsrMatrix<T> spgemm<T>(const CsrMatrix<T>&, const CsrMatrix<T>&, KernelStats*);               \
    template std::vector<T> spmv<T>(const CsrMatrix<T>&, std::span<const T>, KernelStats*);                \
    template void spmv_kernel<T>(const CsrMatrix<T>&, const T*, T*);                                       \
    template void csr_dense_kernel<T>(const CsrMatrix<T>&, const T*, std::size_t, T*);                     \
    template void dense_csr_kernel<T>(const T*, std::size_t, const CsrMatrix<T>&, T*);

SCANPROP_INSTANTIATE_PRODUCTS(float)
SCANPROP_INSTANTIATE_PRODUCTS(double)

}  // namespace scanprop::sparse
