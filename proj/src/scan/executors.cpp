// SPDX-License-Identifier: Apache-2.0
#include "engine.hpp"

namespace scanprop::scan {

namespace {

template <typename T>
struct NumericAlgebra {
    using Value = ScanElement<T>;
    PlanCache* cache = nullptr;

    Value identity() const { return Value::identity(); }
    bool is_identity(const Value& v) const { return v.is_identity(); }
    DiamondResult<T> combine(const Value& a, const Value& b) const { return diamond(a, b, cache); }
};

template <typename T>
ScanOutput<T> execute(const ScanArray<T>& arr, const ScanSchedule& schedule, WorkerPool* pool,
                      const ScanOptions& options) {
    PlanCache local_cache;
    NumericAlgebra<T> algebra{options.plan_cache ? options.plan_cache : &local_cache};
    detail::Engine<NumericAlgebra<T>> engine{algebra, detail::TraceWriter(options.trace)};
    if (pool && pool->size() == 1)
        pool = nullptr;
    return engine.run(schedule, arr.elements(), pool, options.reverse_down_sweep_operands, options.with_total);
}

}  // namespace

template <typename T>
ScanOutput<T> linear_scan(const ScanArray<T>& arr, const ScanOptions& options) {
    PlanCache local_cache;
    NumericAlgebra<T> algebra{options.plan_cache ? options.plan_cache : &local_cache};
    detail::Engine<NumericAlgebra<T>> engine{algebra, detail::TraceWriter(options.trace)};
    return engine.run_linear(arr.elements(), options.with_total);
}

template <typename T>
ScanOutput<T> blelloch_scan(const ScanArray<T>& arr, WorkerPool& pool, const ScanOptions& options) {
    return execute(arr, blelloch_schedule(arr.n()), &pool, options);
}

template <typename T>
ScanOutput<T> blelloch_scan(const ScanArray<T>& arr, std::size_t workers, const ScanOptions& options) {
    WorkerPool pool(workers);
    return blelloch_scan(arr, pool, options);
}

template <typename T>
ScanOutput<T> hybrid_scan(const ScanArray<T>& arr, std::size_t up_levels, std::size_t down_levels, WorkerPool& pool,
                          const ScanOptions& options) {
    return execute(arr, hybrid_schedule(arr.n(), up_levels, down_levels), &pool, options);
}

template <typename T>
ScanOutput<T> hybrid_scan(const ScanArray<T>& arr, std::size_t up_levels, std::size_t down_levels,
                          std::size_t workers, const ScanOptions& options) {
    WorkerPool pool(workers);
    return hybrid_scan(arr, up_levels, down_levels, pool, options);
}

template <typename T>
ScanOutput<T> run_scan(const ScanArray<T>& arr, const ExecutorConfig& config, WorkerPool& pool,
                       const ScanOptions& options) {
    switch (config.kind) {
    case Executor::linear: return linear_scan(arr, options);
    case Executor::blelloch: return blelloch_scan(arr, pool, options);
    case Executor::hybrid: return hybrid_scan(arr, config.up_levels, config.down_levels, pool, options);
    }
    return {};
}

#define SCANPROP_INSTANTIATE(T)                                                                                \
    template ScanOutput<T> linear_scan(const ScanArray<T>&, const ScanOptions&);                               \
    template ScanOutput<T> blelloch_scan(const ScanArray<T>&, WorkerPool&, const ScanOptions&);                \
    template ScanOutput<T> blelloch_scan(const ScanArray<T>&, std::size_t, const ScanOptions&);                \
    template ScanOutput<T> hybrid_scan(const ScanArray<T>&, std::size_t, std::size_t, WorkerPool&,             \
                                       const ScanOptions&);                                                    \
    template ScanOutput<T> hybrid_scan(const ScanArray<T>&, std::size_t, std::size_t, std::size_t,             \
                                       const ScanOptions&);                                                    \
    template ScanOutput<T> run_scan(const ScanArray<T>&, const ExecutorConfig&, WorkerPool&, const ScanOptions&);
SCANPROP_INSTANTIATE(float)
SCANPROP_INSTANTIATE(double)
#undef SCANPROP_INSTANTIATE

}  // namespace scanprop::scan
