// SPDX-License-Identifier: Apache-2.0
//
// Schedule interpreter shared by the numeric executors and the static FLOP
// analysis. `Algebra` supplies:
//   Value                               slot type
//   Value identity() const
//   bool is_identity(const Value&) const
//   Combined combine(const Value& a, const Value& b) const   // a <> b, neither identity
// where Combined has members value, kind and multiply_adds.
#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "scanprop/scan.hpp"
#include "scanprop/scan_schedule.hpp"
#include "scanprop/worker_pool.hpp"

namespace scanprop::scan::detail {

class TraceWriter {
public:
    explicit TraceWriter(ScanTrace* trace) : trace_(trace) {}

    /// Reserves `ops` record slots for a level and returns the first index.
    std::size_t open_level(Phase phase, int depth, std::size_t ops) {
        const std::size_t base = next_step_;
        next_step_ += ops;
        if (trace_) {
            trace_->records.resize(next_step_);
            for (std::size_t k = base; k < next_step_; ++k) {
                trace_->records[k].step = k;
                trace_->records[k].phase = phase;
                trace_->records[k].depth = depth;
            }
            trace_->levels.push_back({phase, depth, ops, 0});
        }
        return base;
    }

    void record(std::size_t step, std::size_t left, std::size_t right, OpKind kind, std::uint64_t madds) {
        if (!trace_)
            return;
        auto& r = trace_->records[step];
        r.left = left;
        r.right = right;
        r.kind = kind;
        r.multiply_adds = madds;
    }

    /// Marks the most expensive operation of the level as critical; levels of
    /// one operation are trivially critical.
    void close_level(std::size_t base) {
        if (!trace_ || base >= next_step_)
            return;
        auto first = trace_->records.begin() + static_cast<std::ptrdiff_t>(base);
        auto last = trace_->records.begin() + static_cast<std::ptrdiff_t>(next_step_);
        auto top = std::max_element(first, last, [](const DiamondRecord& a, const DiamondRecord& b) {
            return a.multiply_adds < b.multiply_adds;
        });
        top->critical = true;
        std::uint64_t total = 0;
        for (auto it = first; it != last; ++it)
            total += it->multiply_adds;
        trace_->levels.back().multiply_adds = total;
    }

private:
    ScanTrace* trace_;
    std::size_t next_step_ = 0;
};

template <typename Algebra>
struct Engine {
    using Value = typename Algebra::Value;

    const Algebra& algebra;
    TraceWriter trace;

    Value apply(const Value& a, const Value& b, std::size_t step, std::size_t left, std::size_t right) {
        if (algebra.is_identity(a) || algebra.is_identity(b)) {
            trace.record(step, left, right, OpKind::identity, 0);
            return algebra.is_identity(a) ? b : a;
        }
        auto c = algebra.combine(a, b);
        trace.record(step, left, right, c.kind, c.multiply_adds);
        return std::move(c.value);
    }

    void run_level(const SweepLevel& level, std::vector<Value>& a, WorkerPool* pool, bool reverse) {
        const std::size_t base = trace.open_level(level.phase, level.depth, level.pairs.size());
        auto task = [&](std::size_t k) {
            const auto [l, r] = level.pairs[k];
            if (level.phase == Phase::up_sweep) {
                a[r] = apply(a[l], a[r], base + k, l, r);
            } else {
                Value next = reverse ? apply(a[r], a[l], base + k, r, l) : apply(a[l], a[r], base + k, l, r);
                a[l] = std::move(a[r]);
                a[r] = std::move(next);
            }
        };
        if (pool)
            pool->run_level(level.pairs.size(), task);
        else
            for (std::size_t k = 0; k < level.pairs.size(); ++k)
                task(k);
        trace.close_level(base);
    }

    void run_bridge(const Bridge& bridge, std::vector<Value>& a) {
        std::vector<Value> temps;
        temps.reserve(bridge.ops.size());
        auto get = [&](const Operand& o) -> const Value& { return o.temp ? temps[o.index] : a[o.index]; };
        auto slot_of = [&](const Operand& o) { return o.temp ? a.size() + o.index : o.index; };
        for (const auto& op : bridge.ops) {
            const std::size_t step = trace.open_level(Phase::bridge, -1, 1);
            temps.push_back(apply(get(op.left), get(op.right), step, slot_of(op.left), slot_of(op.right)));
            trace.close_level(step);
        }
        std::vector<Value> staged;
        staged.reserve(bridge.writes.size());
        for (const auto& w : bridge.writes)
            staged.push_back(w.identity ? algebra.identity() : get(w.value));
        for (std::size_t k = 0; k < bridge.writes.size(); ++k)
            a[bridge.writes[k].slot] = std::move(staged[k]);
    }

    void epilogue(std::vector<Value>& out, const Value& last) {
        const std::size_t step = trace.open_level(Phase::epilogue, -1, 1);
        const std::size_t n = out.size() - 1;
        out.push_back(apply(out[n], last, step, n, n));
        trace.close_level(step);
    }

    std::vector<Value> run(const ScanSchedule& schedule, std::vector<Value> a, WorkerPool* pool, bool reverse,
                           bool with_total) {
        std::optional<Value> last;
        if (with_total)
            last = a.back();
        for (const auto& level : schedule.up)
            run_level(level, a, pool, reverse);
        run_bridge(schedule.bridge, a);
        for (const auto& level : schedule.down)
            run_level(level, a, pool, reverse);
        if (last)
            epilogue(a, *last);
        return a;
    }

    std::vector<Value> run_linear(const std::vector<Value>& a, bool with_total) {
        std::vector<Value> out;
        out.reserve(a.size() + 1);
        out.push_back(algebra.identity());
        const std::size_t count = with_total ? a.size() : a.size() - 1;
        for (std::size_t k = 0; k < count; ++k) {
            // The last fold is an ordinary step of the serial recurrence.
            const std::size_t step = trace.open_level(Phase::linear, -1, 1);
            out.push_back(apply(out[k], a[k], step, k, k));
            trace.close_level(step);
        }
        return out;
    }
};

}  // namespace scanprop::scan::detail
