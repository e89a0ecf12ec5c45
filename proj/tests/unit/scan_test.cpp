// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "scanprop/error.hpp"
#include "scanprop/scan.hpp"
#include "scanprop/scan_schedule.hpp"
#include "support.hpp"

namespace scanprop::scan {
namespace {

using Elem = ScanElement<double>;

std::vector<double> random_values(std::size_t n, Rng& rng, double scale = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v)
        x = rng.uniform(-scale, scale);
    return v;
}

/// [g, J_n^T, ..., J_1^T] where a[k] is dims[k] x dims[k-1]; roughly norm-preserving.
ScanArray<double> random_chain(const std::vector<std::size_t>& dims, Rng& rng, double sparse_share = 0.0) {
    std::vector<Elem> a;
    a.push_back(Elem::vector(random_values(dims[0], rng)));
    for (std::size_t k = 1; k < dims.size(); ++k) {
        const double scale = 1.5 / std::sqrt(static_cast<double>(dims[k - 1]));
        if (rng.bernoulli(sparse_share)) {
            auto m = test::random_csr<double>(dims[k], dims[k - 1], 0.5, rng);
            a.push_back(Elem::sparse(std::move(m)));
        } else {
            DenseMatrix<double> m(dims[k], dims[k - 1], random_values(dims[k] * dims[k - 1], rng, scale));
            a.push_back(Elem::dense(m));
        }
    }
    return ScanArray<double>(std::move(a));
}

ScanArray<double> square_chain(std::size_t n, std::size_t dim, Rng& rng, double sparse_share = 0.0) {
    return random_chain(std::vector<std::size_t>(n + 1, dim), rng, sparse_share);
}

/// Worst relative entry difference; infinity when kinds or shapes disagree.
double output_diff(const ScanOutput<double>& got, const ScanOutput<double>& want) {
    if (got.size() != want.size())
        return INFINITY;
    double worst = 0.0;
    for (std::size_t k = 0; k < got.size(); ++k) {
        if (got[k].is_identity() != want[k].is_identity())
            return INFINITY;
        if (got[k].is_identity())
            continue;
        if (got[k].batch() != want[k].batch())
            return INFINITY;
        for (std::size_t s = 0; s < got[k].batch(); ++s) {
            const auto a = got[k].to_dense(s), b = want[k].to_dense(s);
            if (a.rows() != b.rows() || a.cols() != b.cols())
                return INFINITY;
            worst = std::max(worst, test::max_rel_diff<double>(a.values(), b.values()));
        }
    }
    return worst;
}

/// Straight chain rule: g_k = a[k-1] * g_{k-1}.
std::vector<std::vector<double>> recurrence(const ScanArray<double>& arr) {
    std::vector<std::vector<double>> out;
    auto g = arr[0].as_vector().values;
    out.push_back(g);
    for (std::size_t k = 1; k <= arr.n(); ++k) {
        const auto m = arr[k].to_dense();
        g = matvec(m, std::span<const double>(g));
        out.push_back(g);
    }
    return out;
}

TEST(Diamond, IdentityShortCircuits) {
    const auto v = Elem::vector({1, 2});
    const auto m = Elem::dense(DenseMatrix<double>(2, 2, {1, 0, 1, 1}));
    auto r = diamond(v, Elem::identity());
    EXPECT_EQ(r.kind, OpKind::identity);
    EXPECT_EQ(r.multiply_adds, 0u);
    EXPECT_EQ(r.value.as_vector().values, v.as_vector().values);
    r = diamond(Elem::identity(), m);
    EXPECT_EQ(r.kind, OpKind::identity);
    EXPECT_EQ(r.value.to_dense(), m.to_dense());
}

TEST(Diamond, MatrixTimesVector) {
    const auto r = diamond(Elem::vector({1, 2}), Elem::dense(DenseMatrix<double>(2, 2, {1, 0, 1, 1})));
    EXPECT_EQ(r.value.as_vector().values, (std::vector<double>{1, 3}));
    EXPECT_EQ(r.kind, OpKind::mv);
    EXPECT_EQ(r.multiply_adds, 4u);
}

TEST(Diamond, OperandOrder) {
    const DenseMatrix<double> a(2, 2, {1, 2, 0, 1}), b(2, 2, {1, 0, 3, 1});
    const auto r = diamond(Elem::dense(a), Elem::dense(b));
    EXPECT_EQ(r.value.to_dense(), test::reference_product(b, a));
    EXPECT_EQ(r.kind, OpKind::mm);
    EXPECT_EQ(r.multiply_adds, 8u);
}

TEST(Diamond, SparseOperandsMatchDense) {
    Rng rng(20);
    for (int trial = 0; trial < 30; ++trial) {
        const auto sa = test::random_csr<double>(6, 5, 0.4, rng);
        const auto sb = test::random_csr<double>(7, 6, 0.4, rng);
        const auto da = sa.to_dense(), db = sb.to_dense();
        const auto want = test::reference_product(db, da);
        const Elem forms_a[] = {Elem::sparse(sa), Elem::dense(da)};
        const Elem forms_b[] = {Elem::sparse(sb), Elem::dense(db)};
        for (const auto& a : forms_a)
            for (const auto& b : forms_b)
                EXPECT_LE(max_abs_diff(diamond(a, b).value.to_dense(), want), 1e-12);
        const auto v = Elem::vector(random_values(6, rng));
        const auto mv = diamond(v, Elem::sparse(sb));
        EXPECT_EQ(mv.kind, OpKind::mv);
        EXPECT_EQ(mv.multiply_adds, sb.nnz());
        EXPECT_LE(max_abs_diff(mv.value.to_dense(), test::reference_product(db, v.to_dense())), 1e-12);
    }
}

TEST(Diamond, ShapeMismatchThrows) {
    EXPECT_THROW(diamond(Elem::vector({1, 2, 3}), Elem::dense(DenseMatrix<double>(2, 2))), ShapeError);
    EXPECT_THROW(ScanArray<double>({Elem::vector({1, 2}), Elem::dense(DenseMatrix<double>(3, 3))}), ShapeError);
}

TEST(Diamond, Associative) {
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = Elem::dense(test::random_dense<double>(3, 3, rng));
        const auto b = Elem::dense(test::random_dense<double>(3, 3, rng));
        const auto c = Elem::dense(test::random_dense<double>(3, 3, rng));
        const auto left = diamond(diamond(a, b).value, c).value.to_dense();
        const auto right = diamond(a, diamond(b, c).value).value.to_dense();
        EXPECT_LE(max_abs_diff(left, right), 1e-14);
    }
}

TEST(Diamond, BatchSlicesIndependent) {
    Rng rng(22);
    const auto vs = random_values(3 * 4, rng);
    const auto ms = random_values(3 * 4 * 4, rng);
    const auto r = diamond(Elem::vectors(3, 4, vs), Elem::dense_batch(3, 4, 4, ms));
    for (std::size_t s = 0; s < 3; ++s) {
        const DenseMatrix<double> m(4, 4, std::vector<double>(ms.begin() + s * 16, ms.begin() + (s + 1) * 16));
        const std::vector<double> v(vs.begin() + s * 4, vs.begin() + (s + 1) * 4);
        EXPECT_EQ(r.value.to_dense(s).storage(), matvec(m, std::span<const double>(v)));
    }
    EXPECT_EQ(r.multiply_adds, 3u * 16);
}

TEST(LinearScan, LengthOne) {
    const auto out = linear_scan(ScanArray<double>({Elem::vector({4, 5})}));
    ASSERT_EQ(out.size(), 2u);
    EXPECT_TRUE(out[0].is_identity());
    EXPECT_EQ(out[1].as_vector().values, (std::vector<double>{4, 5}));
}

TEST(LinearScan, ScalarChain) {
    const ScanArray<double> arr({Elem::vector({2}), Elem::dense(DenseMatrix<double>(1, 1, {3})),
                                 Elem::dense(DenseMatrix<double>(1, 1, {4}))});
    const auto out = linear_scan(arr);
    ASSERT_EQ(out.size(), 4u);
    EXPECT_TRUE(out[0].is_identity());
    EXPECT_EQ(out[1].as_vector().values[0], 2);
    EXPECT_EQ(out[2].as_vector().values[0], 6);
    EXPECT_EQ(out[3].as_vector().values[0], 24);
    ScanOptions without_total;
    without_total.with_total = false;
    EXPECT_EQ(linear_scan(arr, without_total).size(), 3u);
}

TEST(LinearScan, MatchesChainRule) {
    Rng rng(23);
    const auto arr = square_chain(5, 4, rng);
    const auto out = linear_scan(arr);
    const auto want = recurrence(arr);
    for (std::size_t k = 0; k < want.size(); ++k)
        EXPECT_EQ(out[k + 1].as_vector().values, want[k]) << k;
}

TEST(Schedule, DepthHelpers) {
    EXPECT_EQ(tree_depth(1), 1u);
    EXPECT_EQ(tree_depth(7), 3u);
    EXPECT_EQ(tree_depth(8), 4u);
    EXPECT_EQ(full_up_levels(7), 2u);
    EXPECT_EQ(full_down_levels(7), 3u);
    EXPECT_EQ(full_up_levels(1), 0u);
}

TEST(Schedule, PairsAreDisjointWithinLevels) {
    for (std::size_t n = 1; n <= 600; ++n) {
        const auto s = blelloch_schedule(n);
        for (const auto* levels : {&s.up, &s.down})
            for (const auto& level : *levels) {
                std::set<std::size_t> seen;
                for (const auto& p : level.pairs) {
                    EXPECT_LT(p.left, p.right);
                    EXPECT_LE(p.right, n);
                    EXPECT_TRUE(seen.insert(p.left).second) << n;
                    EXPECT_TRUE(seen.insert(p.right).second) << n;
                }
            }
    }
}

TEST(Schedule, WorkAndLevelBounds) {
    for (std::size_t n = 1; n <= 4096; ++n) {
        const auto s = blelloch_schedule(n);
        std::size_t ops = 0;
        for (const auto& l : s.up)
            ops += l.pairs.size();
        for (const auto& l : s.down)
            ops += l.pairs.size();
        ASSERT_LE(ops, 2 * (n + 1)) << n;
        const auto L = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(n + 1))));
        ASSERT_EQ(s.up.size() + s.down.size(), (L - 1) + L) << n;
        EXPECT_TRUE(s.bridge.ops.empty());
    }
}

TEST(Schedule, RejectsTooManyLevels) {
    EXPECT_THROW(hybrid_schedule(7, 3, 0), ConfigError);
    EXPECT_THROW(hybrid_schedule(7, 0, 4), ConfigError);
    EXPECT_NO_THROW(hybrid_schedule(7, 2, 3));
}

TEST(BlellochScan, EightScalarsTrace) {
    std::vector<Elem> a{Elem::vector({1.5})};
    for (int k = 1; k <= 7; ++k)
        a.push_back(Elem::dense(DenseMatrix<double>(1, 1, {0.5 + 0.25 * k})));
    const ScanArray<double> arr(std::move(a));
    ScanTrace trace;
    ScanOptions opts;
    opts.trace = &trace;
    const auto out = blelloch_scan(arr, 1, opts);
    EXPECT_EQ(trace.diamond_ops(), 13u);
    EXPECT_EQ(trace.level_count(), 5u);
    EXPECT_EQ(trace.diamond_ops(true), 14u);
    EXPECT_LE(output_diff(out, linear_scan(arr)), 1e-15);
}

TEST(BlellochScan, AllIdentityInput) {
    std::vector<Elem> a(8, Elem::identity());
    const auto out = blelloch_scan(ScanArray<double>(std::move(a)), 2);
    for (const auto& e : out)
        EXPECT_TRUE(e.is_identity());
}

TEST(BlellochScan, MatchesLinearExhaustively) {
    Rng rng(24);
    for (std::size_t n = 1; n <= 300; ++n) {
        const auto arr = square_chain(n, 3, rng, 0.3);
        EXPECT_LE(output_diff(blelloch_scan(arr, 1), linear_scan(arr)), 1e-12) << n;
    }
}

TEST(BlellochScan, RaggedDimensions) {
    Rng rng(25);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 1 + rng.below(60);
        std::vector<std::size_t> dims(n + 1);
        for (auto& d : dims)
            d = 1 + rng.below(6);
        const auto arr = random_chain(dims, rng, 0.3);
        EXPECT_LE(output_diff(blelloch_scan(arr, 3), linear_scan(arr)), 1e-12);
    }
}

TEST(BlellochScan, ThreadCountDoesNotChangeBits) {
    Rng rng(26);
    const auto arr = square_chain(257, 5, rng, 0.5);
    const auto serial = blelloch_scan(arr, 1);
    for (std::size_t workers : {2, 4, 7})
        EXPECT_EQ(output_diff(blelloch_scan(arr, workers), serial), 0.0) << workers;
}

TEST(BlellochScan, WithoutOperandReversalIsWrong) {
    Rng rng(27);
    ScanOptions textbook;
    textbook.reverse_down_sweep_operands = false;
    // Square matrices only: the unreversed products are well-formed but wrong.
    std::vector<Elem> a{Elem::identity(2)};
    for (int k = 1; k <= 7; ++k)
        a.push_back(Elem::dense(test::random_dense<double>(2, 2, rng)));
    const ScanArray<double> square(std::move(a));
    const auto want = linear_scan(square);
    EXPECT_LE(output_diff(blelloch_scan(square, 1), want), 1e-12);
    EXPECT_GT(output_diff(blelloch_scan(square, 1, textbook), want), 1e-6);
    // With a gradient vector in slot 0 the unreversed order cannot even be formed.
    EXPECT_THROW(blelloch_scan(square_chain(7, 2, rng), 1, textbook), ShapeError);
}

TEST(BlellochScan, WorkBoundOnTraces) {
    Rng rng(28);
    for (std::size_t n : {1, 2, 3, 15, 16, 100, 511}) {
        const auto arr = square_chain(n, 2, rng);
        ScanTrace trace;
        ScanOptions opts;
        opts.trace = &trace;
        blelloch_scan(arr, 1, opts);
        EXPECT_LE(trace.diamond_ops(), 2 * (n + 1));
        const auto L = tree_depth(n);
        EXPECT_EQ(trace.level_count(), (L - 1) + L);
    }
}

TEST(HybridScan, MatchesLinearForEveryLevelSplit) {
    Rng rng(29);
    for (std::size_t n = 1; n <= 160; ++n) {
        const auto arr = square_chain(n, 2, rng, 0.3);
        const auto want = linear_scan(arr);
        for (std::size_t u = 0; u <= full_up_levels(n); ++u)
            for (std::size_t v = 0; v <= full_down_levels(n); ++v)
                ASSERT_LE(output_diff(hybrid_scan(arr, u, v, 1), want), 1e-12) << n << " " << u << "/" << v;
    }
}

TEST(HybridScan, ScheduleReadsOnlyEarlierTemps) {
    for (std::size_t n = 1; n <= 300; n += 7)
        for (std::size_t u = 0; u <= full_up_levels(n); ++u)
            for (std::size_t v = 0; v <= full_down_levels(n); ++v) {
                const auto s = hybrid_schedule(n, u, v);
                for (std::size_t k = 0; k < s.bridge.ops.size(); ++k)
                    for (const auto& o : {s.bridge.ops[k].left, s.bridge.ops[k].right})
                        ASSERT_TRUE(o.temp ? o.index < k : o.index <= n);
                std::set<std::size_t> slots;
                for (const auto& w : s.bridge.writes)
                    ASSERT_TRUE(slots.insert(w.slot).second);
            }
}

TEST(HybridScan, FullLevelsReproduceBlellochTrace) {
    Rng rng(30);
    for (std::size_t n : {5, 8, 63, 100}) {
        const auto arr = square_chain(n, 3, rng);
        ScanTrace a, b;
        ScanOptions oa, ob;
        oa.trace = &a;
        ob.trace = &b;
        blelloch_scan(arr, 1, oa);
        hybrid_scan(arr, full_up_levels(n), full_down_levels(n), 1, ob);
        ASSERT_EQ(a.records.size(), b.records.size());
        for (std::size_t k = 0; k < a.records.size(); ++k) {
            EXPECT_EQ(a.records[k].phase, b.records[k].phase);
            EXPECT_EQ(a.records[k].depth, b.records[k].depth);
            EXPECT_EQ(a.records[k].left, b.records[k].left);
            EXPECT_EQ(a.records[k].right, b.records[k].right);
            EXPECT_EQ(a.records[k].multiply_adds, b.records[k].multiply_adds);
        }
    }
}

TEST(HybridScan, NoLevelsIsLinear) {
    Rng rng(31);
    for (std::size_t n : {1, 4, 9, 50}) {
        const auto arr = square_chain(n, 3, rng);
        EXPECT_EQ(output_diff(hybrid_scan(arr, 0, 0, 1), linear_scan(arr)), 0.0) << n;
    }
}

TEST(HybridScan, VggShapedSplit) {
    // 21 layers in the conv stack; three up levels and four down levels.
    Rng rng(32);
    const auto arr = square_chain(21, 6, rng, 0.5);
    EXPECT_LE(output_diff(hybrid_scan(arr, 3, 4, 2), linear_scan(arr)), 1e-12);
}

TEST(RunScan, ExecutorNames) {
    EXPECT_EQ(scan::to_string(scan::ExecutorConfig{scan::Executor::linear, 0, 0}), "linear");
    EXPECT_EQ(scan::to_string(scan::ExecutorConfig{scan::Executor::blelloch, 0, 0}), "blelloch");
    EXPECT_EQ(scan::to_string(scan::ExecutorConfig{scan::Executor::hybrid, 3, 4}), "hybrid:3:4");
}

TEST(RunScan, Dispatch) {
    Rng rng(33);
    const auto arr = square_chain(30, 3, rng);
    const auto want = linear_scan(arr);
    WorkerPool pool(2);
    EXPECT_LE(output_diff(run_scan(arr, {Executor::blelloch, 0, 0}, pool), want), 1e-12);
    EXPECT_LE(output_diff(run_scan(arr, {Executor::hybrid, 2, 3}, pool), want), 1e-12);
    EXPECT_EQ(output_diff(run_scan(arr, {Executor::linear, 0, 0}, pool), want), 0.0);
    EXPECT_EQ(parse_executor("hybrid"), Executor::hybrid);
    EXPECT_THROW(parse_executor("bogus"), ConfigError);
}

TEST(ScanTraceCsv, Columns) {
    Rng rng(34);
    ScanTrace trace;
    ScanOptions opts;
    opts.trace = &trace;
    blelloch_scan(square_chain(3, 2, rng), 1, opts);
    std::ostringstream ops, levels;
    trace.write_csv(ops);
    trace.write_level_csv(levels);
    EXPECT_EQ(ops.str().substr(0, ops.str().find('\n')), "step,phase,depth,left,right,kind,multiply_adds,critical");
    EXPECT_EQ(levels.str().substr(0, levels.str().find('\n')), "phase,depth,pairs,flop");
    EXPECT_NE(ops.str().find("up-sweep"), std::string::npos);
    EXPECT_NE(ops.str().find("down-sweep"), std::string::npos);
}

TEST(WorkerPoolTest, RunsEveryTaskOnce) {
    WorkerPool pool(4);
    std::vector<std::atomic<int>> hits(1000);
    pool.run_level(hits.size(), [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits)
        EXPECT_EQ(h.load(), 1);
    pool.run_level(0, [](std::size_t) { FAIL(); });
}

TEST(WorkerPoolTest, PropagatesExceptions) {
    WorkerPool pool(3);
    EXPECT_THROW(pool.run_level(10,
                                [](std::size_t i) {
                                    if (i == 6)
                                        throw std::runtime_error("boom");
                                }),
                 std::runtime_error);
    std::atomic<int> count{0};
    pool.run_level(5, [&](std::size_t) { count++; });
    EXPECT_EQ(count.load(), 5);
}

}  // namespace
}  // namespace scanprop::scan
