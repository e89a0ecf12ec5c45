// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <map>
#include <ostream>

#include <fmt/format.h>

#include "../scan/engine.hpp"
#include "scanprop/analysis.hpp"
#include "scanprop/error.hpp"

namespace scanprop::analysis {

namespace {

using scan::ElementKind;
using scan::OpKind;

// Shape-and-pattern stand-in for a scan element.
struct Symbol {
    ElementKind kind = ElementKind::identity;
    std::size_t rows = 0;
    std::size_t cols = 0;
    sparse::PatternPtr pattern;
};

struct SymbolCombined {
    Symbol value;
    OpKind kind = OpKind::identity;
    std::uint64_t multiply_adds = 0;
};

// Mirrors the arithmetic of scan::diamond with batch 1.
class SymbolicAlgebra {
public:
    using Value = Symbol;

    Value identity() const { return {}; }
    bool is_identity(const Value& v) const { return v.kind == ElementKind::identity; }

    SymbolCombined combine(const Value& a, const Value& b) const {
        if (b.cols != a.rows)
            throw ShapeError(fmt::format("cannot apply a {}x{} operator to a {}x{} operand", b.rows, b.cols, a.rows,
                                         a.cols));
        if (b.kind == ElementKind::vector)
            throw ShapeError("a gradient vector can only be combined with an identity on its right");
        if (b.kind == ElementKind::sparse) {
            const std::uint64_t nnz = b.pattern->nnz();
            switch (a.kind) {
            case ElementKind::sparse: {
                const auto& product = product_of(b.pattern, a.pattern);
                return {{ElementKind::sparse, b.rows, a.cols, product.pattern}, OpKind::mm, product.contributions};
            }
            case ElementKind::vector: return {{ElementKind::vector, b.rows, 1, {}}, OpKind::mv, nnz};
            case ElementKind::dense: return {{ElementKind::dense, b.rows, a.cols, {}}, OpKind::mm, nnz * a.cols};
            default: break;
            }
        } else {
            switch (a.kind) {
            case ElementKind::vector:
                return {{ElementKind::vector, b.rows, 1, {}}, OpKind::mv, std::uint64_t{b.rows} * b.cols};
            case ElementKind::dense:
                return {{ElementKind::dense, b.rows, a.cols, {}}, OpKind::mm, std::uint64_t{b.rows} * b.cols * a.cols};
            case ElementKind::sparse:
                return {{ElementKind::dense, b.rows, a.cols, {}}, OpKind::mm, std::uint64_t{b.rows} * a.pattern->nnz()};
            default: break;
            }
        }
        throw ShapeError("unsupported operand combination");
    }

private:
    const sparse::SymbolicProduct& product_of(const sparse::PatternPtr& left, const sparse::PatternPtr& right) const {
        const auto key = std::make_pair(left.get(), right.get());
        auto it = memo_.find(key);
        if (it == memo_.end()) {
            it = memo_.emplace(key, sparse::symbolic_product(*left, *right)).first;
            keep_.push_back(left);
            keep_.push_back(right);
        }
        return it->second;
    }

    mutable std::map<std::pair<const void*, const void*>, sparse::SymbolicProduct> memo_;
    mutable std::vector<sparse::PatternPtr> keep_;
};

std::vector<Symbol> leaves(const std::vector<sparse::PatternPtr>& jacobians) {
    if (jacobians.empty())
        throw ConfigError("layer chain is empty");
    std::vector<Symbol> out;
    out.reserve(jacobians.size() + 1);
    out.push_back({ElementKind::vector, jacobians.back()->cols(), 1, {}});
    for (auto it = jacobians.rbegin(); it != jacobians.rend(); ++it) {
        if ((*it)->cols() != out.back().rows)
            throw ShapeError("layer Jacobians are not chain-compatible");
        out.push_back({ElementKind::sparse, (*it)->rows(), (*it)->cols(), *it});
    }
    return out;
}

FlopReport run_symbolic(const std::vector<Symbol>& values, const scan::ExecutorConfig& executor,
                        const SymbolicAlgebra& algebra) {
    scan::ScanTrace trace;
    scan::detail::Engine<SymbolicAlgebra> engine{algebra, scan::detail::TraceWriter(&trace)};
    const std::size_t n = values.size() - 1;
    switch (executor.kind) {
    case scan::Executor::linear: engine.run_linear(values, true); break;
    case scan::Executor::blelloch: engine.run(scan::blelloch_schedule(n), values, nullptr, true, true); break;
    case scan::Executor::hybrid:
        engine.run(scan::hybrid_schedule(n, executor.up_levels, executor.down_levels), values, nullptr, true, true);
        break;
    }
    return flops_of_trace(trace, scan::to_string(executor));
}

}  // namespace

std::uint64_t FlopReport::max_step_flop() const noexcept {
    std::uint64_t best = 0;
    for (const auto& r : records)
        best = std::max(best, r.flop);
    return best;
}

std::uint64_t FlopReport::critical_path_flop() const noexcept {
    std::uint64_t total = 0;
    for (const auto& r : records)
        if (r.critical)
            total += r.flop;
    return total;
}

std::uint64_t FlopReport::total_flop() const noexcept {
    std::uint64_t total = 0;
    for (const auto& r : records)
        total += r.flop;
    return total;
}

FlopReport flops_of_trace(const scan::ScanTrace& trace, std::string executor) {
    FlopReport report;
    report.executor = std::move(executor);
    for (const auto& r : trace.records)
        if (r.kind != OpKind::identity)
            report.records.push_back({r.step, r.phase, r.kind, 2 * r.multiply_adds, r.critical});
    return report;
}

FlopReport flops_of_patterns(const std::vector<sparse::PatternPtr>& jacobians, const scan::ExecutorConfig& executor) {
    SymbolicAlgebra algebra;
    return run_symbolic(leaves(jacobians), executor, algebra);
}

FlopReport flops_of_chain(const ChainSpec& chain, const scan::ExecutorConfig& executor, const PruneOptions& prune) {
    const auto jac = build_chain_jacobians<float>(chain, prune);
    std::vector<sparse::PatternPtr> patterns;
    for (const auto& j : jac)
        patterns.push_back(j.shared_pattern());
    return flops_of_patterns(patterns, executor);
}

void write_flop_csv(std::ostream& out, const std::vector<FlopReport>& reports) {
    out << "executor,step,phase,kind,flop,critical\n";
    for (const auto& rep : reports)
        for (const auto& r : rep.records)
            out << fmt::format("{},{},{},{},{},{}\n", rep.executor, r.step, scan::to_string(r.phase),
                               scan::to_string(r.kind), r.flop, r.critical ? 1 : 0);
}

LevelChoice sweep_levels(const std::vector<sparse::PatternPtr>& jacobians) {
    const auto values = leaves(jacobians);
    const std::size_t n = values.size() - 1;
    SymbolicAlgebra algebra;
    LevelChoice best;
    bool first = true;
    for (std::size_t u = 0; u <= scan::full_up_levels(n); ++u) {
        for (std::size_t v = 0; v <= scan::full_down_levels(n); ++v) {
            const auto report = run_symbolic(values, {scan::Executor::hybrid, u, v}, algebra);
            const std::uint64_t cost = report.critical_path_flop();
            if (first || cost < best.critical_path_flop) {
                best = {u, v, cost};
                first = false;
            }
        }
    }
    return best;
}

}  // namespace scanprop::analysis
