// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "scanprop/error.hpp"
#include "scanprop/scan.hpp"

namespace scanprop::scan {

std::string_view to_string(OpKind kind) noexcept {
    switch (kind) {
    case OpKind::identity: return "id";
    case OpKind::mv: return "mv";
    case OpKind::mm: return "mm";
    }
    return "?";
}

std::string_view to_string(Phase phase) noexcept {
    switch (phase) {
    case Phase::up_sweep: return "up-sweep";
    case Phase::bridge: return "bridge";
    case Phase::down_sweep: return "down-sweep";
    case Phase::linear: return "baseline";
    case Phase::epilogue: return "epilogue";
    }
    return "?";
}

std::string_view to_string(Executor e) noexcept {
    switch (e) {
    case Executor::linear: return "linear";
    case Executor::blelloch: return "blelloch";
    case Executor::hybrid: return "hybrid";
    }
    return "?";
}

std::string to_string(const ExecutorConfig& e) {
    if (e.kind == Executor::hybrid)
        return fmt::format("hybrid:{}:{}", e.up_levels, e.down_levels);
    return std::string(to_string(e.kind));
}

Executor parse_executor(std::string_view name) {
    if (name == "linear")
        return Executor::linear;
    if (name == "blelloch")
        return Executor::blelloch;
    if (name == "hybrid")
        return Executor::hybrid;
    throw ConfigError(fmt::format("unknown executor '{}' (expected linear, blelloch or hybrid)", name));
}

template <typename T>
ScanElement<T>::ScanElement(Storage storage) : storage_(std::move(storage)) {
    if (const auto* v = std::get_if<VectorBlock<T>>(&storage_)) {
        if (v->batch == 0 || v->dim == 0 || v->values.size() != v->batch * v->dim)
            throw ShapeError("vector block size does not match batch x dim");
    } else if (const auto* m = std::get_if<MatrixBlock<T>>(&storage_)) {
        if (m->batch == 0 || m->rows == 0 || m->cols == 0 || m->values.size() != m->batch * m->rows * m->cols)
            throw ShapeError("matrix block size does not match batch x rows x cols");
    } else if (const auto* s = std::get_if<sparse::CsrMatrix<T>>(&storage_)) {
        if (s->rows() == 0 || s->cols() == 0)
            throw ShapeError("sparse scan element must have positive dimensions");
    }
}

template <typename T>
ScanElement<T> ScanElement<T>::vector(std::vector<T> values) {
    const std::size_t dim = values.size();
    return ScanElement(Storage(VectorBlock<T>{1, dim, std::move(values)}));
}

template <typename T>
ScanElement<T> ScanElement<T>::vectors(std::size_t batch, std::size_t dim, std::vector<T> values) {
    return ScanElement(Storage(VectorBlock<T>{batch, dim, std::move(values)}));
}

template <typename T>
ScanElement<T> ScanElement<T>::dense(const DenseMatrix<T>& m) {
    return ScanElement(Storage(MatrixBlock<T>{1, m.rows(), m.cols(), m.storage()}));
}

template <typename T>
ScanElement<T> ScanElement<T>::dense_batch(std::size_t batch, std::size_t rows, std::size_t cols,
                                           std::vector<T> values) {
    return ScanElement(Storage(MatrixBlock<T>{batch, rows, cols, std::move(values)}));
}

template <typename T>
ScanElement<T> ScanElement<T>::sparse(sparse::CsrMatrix<T> m) {
    return ScanElement(Storage(std::move(m)));
}

template <typename T>
std::size_t ScanElement<T>::rows() const noexcept {
    switch (kind()) {
    case ElementKind::identity: return std::get<Identity>(storage_).dim;
    case ElementKind::vector: return as_vector().dim;
    case ElementKind::dense: return as_dense().rows;
    case ElementKind::sparse: return as_sparse().rows();
    }
    return 0;
}

template <typename T>
std::size_t ScanElement<T>::cols() const noexcept {
    switch (kind()) {
    case ElementKind::identity: return std::get<Identity>(storage_).dim;
    case ElementKind::vector: return 1;
    case ElementKind::dense: return as_dense().cols;
    case ElementKind::sparse: return as_sparse().cols();
    }
    return 0;
}

template <typename T>
std::size_t ScanElement<T>::batch() const noexcept {
    switch (kind()) {
    case ElementKind::vector: return as_vector().batch;
    case ElementKind::dense: return as_dense().batch;
    default: return 1;
    }
}

template <typename T>
DenseMatrix<T> ScanElement<T>::to_dense(std::size_t slice) const {
    if (slice >= batch())
        throw ShapeError(fmt::format("batch slice {} out of range {}", slice, batch()));
    switch (kind()) {
    case ElementKind::identity: {
        const std::size_t d = std::get<Identity>(storage_).dim;
        if (d == 0)
            throw ShapeError("an unsized identity has no dense form");
        return DenseMatrix<T>::identity(d);
    }
    case ElementKind::vector: {
        const auto& v = as_vector();
        const auto begin = v.values.begin() + static_cast<std::ptrdiff_t>(slice * v.dim);
        return DenseMatrix<T>(v.dim, 1, std::vector<T>(begin, begin + static_cast<std::ptrdiff_t>(v.dim)));
    }
    case ElementKind::dense: {
        const auto& m = as_dense();
        const std::size_t size = m.rows * m.cols;
        const auto begin = m.values.begin() + static_cast<std::ptrdiff_t>(slice * size);
        return DenseMatrix<T>(m.rows, m.cols, std::vector<T>(begin, begin + static_cast<std::ptrdiff_t>(size)));
    }
    case ElementKind::sparse: return as_sparse().to_dense();
    }
    return {};
}

std::shared_ptr<const sparse::ProductPlan> PlanCache::get(const sparse::PatternPtr& left,
                                                          const sparse::PatternPtr& right) {
    const auto key = std::make_pair(static_cast<const void*>(left.get()), static_cast<const void*>(right.get()));
    {
        std::lock_guard lock(mutex_);
        if (auto it = plans_.find(key); it != plans_.end())
            return it->second;
    }
    auto plan = std::make_shared<const sparse::ProductPlan>(sparse::plan_product(left, right));
    std::lock_guard lock(mutex_);
    return plans_.emplace(key, std::move(plan)).first->second;
}

std::size_t PlanCache::size() const {
    std::lock_guard lock(mutex_);
    return plans_.size();
}

namespace {

std::size_t combined_batch(std::size_t a, std::size_t b) {
    if (a != b && a != 1 && b != 1)
        throw ShapeError(fmt::format("batch sizes {} and {} cannot be combined", a, b));
    return std::max(a, b);
}

template <typename T>
DiamondResult<T> sparse_sparse(const sparse::CsrMatrix<T>& b, const sparse::CsrMatrix<T>& a, PlanCache* cache) {
    sparse::KernelStats stats;
    DiamondResult<T> out;
    if (cache) {
        const auto plan = cache->get(b.shared_pattern(), a.shared_pattern());
        out.value = ScanElement<T>::sparse(sparse::execute_plan(*plan, b, a, &stats));
    } else {
        const auto plan = sparse::plan_product(b.shared_pattern(), a.shared_pattern());
        out.value = ScanElement<T>::sparse(sparse::execute_plan(plan, b, a, &stats));
    }
    out.kind = OpKind::mm;
    out.multiply_adds = stats.multiply_adds;
    return out;
}

}  // namespace

template <typename T>
DiamondResult<T> diamond(const ScanElement<T>& a, const ScanElement<T>& b, PlanCache* cache) {
    if (a.is_identity() || b.is_identity()) {
        const ScanElement<T>& id = a.is_identity() ? a : b;
        const ScanElement<T>& other = a.is_identity() ? b : a;
        const std::size_t d = id.rows();
        // a = I means b * I, so cols(b) must match; b = I needs rows(a).
        const std::size_t touching = a.is_identity() ? other.cols() : other.rows();
        if (d != 0 && !other.is_identity() && touching != d)
            throw ShapeError(fmt::format("identity of dim {} does not fit an operand dimension {}", d, touching));
        if (d != 0 && other.is_identity() && other.rows() != 0 && other.rows() != d)
            throw ShapeError("identity dimensions differ");
        return {other, OpKind::identity, 0};
    }
    if (b.cols() != a.rows())
        throw ShapeError(fmt::format("cannot apply a {}x{} operator to a {}x{} operand", b.rows(), b.cols(), a.rows(),
                                     a.cols()));
    if (b.kind() == ElementKind::vector)
        throw ShapeError("a gradient vector can only be combined with an identity on its right");
    const std::size_t batch = combined_batch(a.batch(), b.batch());
    const std::size_t rows = b.rows();

    if (b.kind() == ElementKind::sparse) {
        const auto& bs = b.as_sparse();
        switch (a.kind()) {
        case ElementKind::sparse: return sparse_sparse(bs, a.as_sparse(), cache);
        case ElementKind::vector: {
            const auto& v = a.as_vector();
            std::vector<T> out(batch * rows);
            for (std::size_t s = 0; s < batch; ++s)
                sparse::spmv_kernel(bs, v.values.data() + s * v.dim, out.data() + s * rows);
            return {ScanElement<T>::vectors(batch, rows, std::move(out)), OpKind::mv, bs.nnz() * batch};
        }
        case ElementKind::dense: {
            const auto& m = a.as_dense();
            std::vector<T> out(batch * rows * m.cols);
            for (std::size_t s = 0; s < batch; ++s)
                sparse::csr_dense_kernel(bs, m.values.data() + s * m.rows * m.cols, m.cols,
                                         out.data() + s * rows * m.cols);
            return {ScanElement<T>::dense_batch(batch, rows, m.cols, std::move(out)), OpKind::mm,
                    bs.nnz() * m.cols * batch};
        }
        default: break;
        }
    } else {
        const auto& bm = b.as_dense();
        const std::size_t b_stride = bm.batch == 1 ? 0 : bm.rows * bm.cols;
        switch (a.kind()) {
        case ElementKind::vector: {
            const auto& v = a.as_vector();
            const std::size_t v_stride = v.batch == 1 ? 0 : v.dim;
            std::vector<T> out(batch * rows);
            for (std::size_t s = 0; s < batch; ++s)
                gemv_kernel(rows, bm.cols, bm.values.data() + s * b_stride, v.values.data() + s * v_stride,
                            out.data() + s * rows);
            return {ScanElement<T>::vectors(batch, rows, std::move(out)), OpKind::mv,
                    std::uint64_t{rows} * bm.cols * batch};
        }
        case ElementKind::dense: {
            const auto& m = a.as_dense();
            const std::size_t a_stride = m.batch == 1 ? 0 : m.rows * m.cols;
            std::vector<T> out(batch * rows * m.cols);
            for (std::size_t s = 0; s < batch; ++s)
                gemm_kernel(rows, bm.cols, m.cols, bm.values.data() + s * b_stride, m.values.data() + s * a_stride,
                            out.data() + s * rows * m.cols);
            return {ScanElement<T>::dense_batch(batch, rows, m.cols, std::move(out)), OpKind::mm,
                    std::uint64_t{rows} * bm.cols * m.cols * batch};
        }
        case ElementKind::sparse: {
            const auto& as = a.as_sparse();
            const std::size_t cols = as.cols();
            std::vector<T> out(batch * rows * cols);
            for (std::size_t s = 0; s < batch; ++s)
                sparse::dense_csr_kernel(bm.values.data() + s * b_stride, rows, as, out.data() + s * rows * cols);
            return {ScanElement<T>::dense_batch(batch, rows, cols, std::move(out)), OpKind::mm,
                    std::uint64_t{rows} * as.nnz() * batch};
        }
        default: break;
        }
    }
    throw ShapeError("unsupported operand combination");
}

template <typename T>
ScanArray<T>::ScanArray(std::vector<ScanElement<T>> elements) : elements_(std::move(elements)) {
    if (elements_.empty())
        throw ShapeError("scan array must hold at least the gradient");
    const auto& head = elements_.front();
    if (head.kind() != ElementKind::vector && !head.is_identity())
        throw ShapeError("the first scan element must be a gradient vector");
    std::size_t batch = 1;
    for (std::size_t k = 0; k < elements_.size(); ++k) {
        const auto& e = elements_[k];
        if (k > 0 && e.kind() == ElementKind::vector)
            throw ShapeError(fmt::format("element {} is a vector; only element 0 may be", k));
        batch = combined_batch(batch, e.batch());
        if (k + 1 < elements_.size()) {
            const auto& next = elements_[k + 1];
            if (!e.is_identity() && !next.is_identity() && next.cols() != e.rows())
                throw ShapeError(fmt::format("element {} has {} columns but element {} has {} rows", k + 1,
                                             next.cols(), k, e.rows()));
        }
    }
}

std::size_t ScanTrace::diamond_ops(bool include_epilogue) const noexcept {
    return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [&](const DiamondRecord& r) {
        return include_epilogue || r.phase != Phase::epilogue;
    }));
}

std::size_t ScanTrace::level_count(bool include_epilogue) const noexcept {
    return static_cast<std::size_t>(std::count_if(levels.begin(), levels.end(), [&](const LevelSummary& l) {
        return include_epilogue || l.phase != Phase::epilogue;
    }));
}

void ScanTrace::write_csv(std::ostream& out) const {
    out << "step,phase,depth,left,right,kind,multiply_adds,critical\n";
    for (const auto& r : records)
        out << fmt::format("{},{},{},{},{},{},{},{}\n", r.step, to_string(r.phase), r.depth, r.left, r.right,
                           to_string(r.kind), r.multiply_adds, r.critical ? 1 : 0);
}

void ScanTrace::write_level_csv(std::ostream& out) const {
    out << "phase,depth,pairs,flop\n";
    for (const auto& l : levels)
        out << fmt::format("{},{},{},{}\n", to_string(l.phase), l.depth, l.ops, 2 * l.multiply_adds);
}

#define SCANPROP_INSTANTIATE(T)                                                                      \
    template class ScanElement<T>;                                                                   \
    template class ScanArray<T>;                                                                     \
    template DiamondResult<T> diamond(const ScanElement<T>&, const ScanElement<T>&, PlanCache*);
SCANPROP_INSTANTIATE(float)
SCANPROP_INSTANTIATE(double)
#undef SCANPROP_INSTANTIATE

}  // namespace scanprop::scan
