// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <map>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

#include "scanprop/error.hpp"
#include "scanprop/scan_schedule.hpp"

namespace scanprop::scan {

std::size_t tree_depth(std::size_t n) noexcept {
    std::size_t depth = 0;
    while ((std::size_t{1} << depth) < n + 1)
        ++depth;
    return depth;
}

std::size_t full_up_levels(std::size_t n) noexcept {
    const std::size_t depth = tree_depth(n);
    return depth > 0 ? depth - 1 : 0;
}

std::size_t full_down_levels(std::size_t n) noexcept { return tree_depth(n); }

std::vector<PairStep> level_pairs(std::size_t n, int depth) {
    std::vector<PairStep> pairs;
    const std::size_t half = std::size_t{1} << depth;
    const std::size_t stride = half << 1;
    for (std::size_t i = 0; i + half <= n; i += stride)
        pairs.push_back({i + half - 1, std::min(i + stride - 1, n)});
    return pairs;
}

std::vector<SweepLevel> up_sweep_levels(std::size_t n) {
    std::vector<SweepLevel> levels;
    for (std::size_t d = 0; d < full_up_levels(n); ++d)
        levels.push_back({Phase::up_sweep, static_cast<int>(d), level_pairs(n, static_cast<int>(d))});
    return levels;
}

std::vector<SweepLevel> down_sweep_levels(std::size_t n) {
    std::vector<SweepLevel> levels;
    for (std::size_t d = full_down_levels(n); d-- > 0;)
        levels.push_back({Phase::down_sweep, static_cast<int>(d), level_pairs(n, static_cast<int>(d))});
    return levels;
}

ScanSchedule blelloch_schedule(std::size_t n) {
    ScanSchedule s;
    s.n = n;
    s.up = up_sweep_levels(n);
    s.bridge.writes.push_back({n, true, {}});
    s.down = down_sweep_levels(n);
    return s;
}

namespace {

// Symbolic slot content: the fold of original elements first..last, or the
// identity. Folds starting at 0 are the prefixes the down-sweep distributes.
struct Span {
    bool identity = false;
    std::size_t first = 0;
    std::size_t last = 0;
    friend bool operator==(const Span&, const Span&) = default;
};

[[noreturn]] void broken(std::size_t n, const char* what) {
    throw std::logic_error(fmt::format("scan schedule for n={} is inconsistent: {}", n, what));
}

void simulate_up(std::size_t n, const SweepLevel& level, std::vector<Span>& slots) {
    for (const auto& [l, r] : level.pairs) {
        const Span a = slots[l], b = slots[r];
        if (a.identity || b.identity || a.last + 1 != b.first)
            broken(n, "up-sweep operands are not adjacent");
        slots[r] = {false, a.first, b.last};
    }
}

void simulate_down(std::size_t n, const SweepLevel& level, std::vector<Span>& slots) {
    for (const auto& [l, r] : level.pairs) {
        const Span t = slots[l], p = slots[r];
        const std::size_t next = p.identity ? 0 : p.last + 1;
        if (t.identity || (!p.identity && p.first != 0) || t.first != next)
            broken(n, "down-sweep prefix does not meet its block");
        slots[l] = p;
        slots[r] = {false, 0, t.last};
    }
}

class BridgeBuilder {
public:
    BridgeBuilder(std::size_t n, const std::vector<Span>& snapshot) : n_(n), pieces_(n + 1) {
        for (std::size_t i = 0; i <= n; ++i)
            if (!snapshot[i].identity)
                pieces_[snapshot[i].last].emplace(snapshot[i].first, Operand{false, i});
    }

    Operand build(std::size_t first, std::size_t last) {
        auto& at_last = pieces_[last];
        if (auto it = at_last.find(first); it != at_last.end())
            return it->second;
        // Cover first..last right to left with the longest available pieces.
        std::vector<std::pair<std::size_t, Operand>> cover;
        std::size_t pos = last;
        for (;;) {
            const auto& candidates = pieces_[pos];
            auto it = candidates.lower_bound(first);
            if (it == candidates.end())
                broken(n_, "bridge target cannot be assembled");
            cover.emplace_back(it->first, it->second);
            if (it->first == first)
                break;
            pos = it->first - 1;
        }
        std::reverse(cover.begin(), cover.end());
        Operand acc = cover.front().second;
        for (std::size_t k = 1; k < cover.size(); ++k) {
            ops_.push_back({acc, cover[k].second});
            acc = Operand{true, ops_.size() - 1};
            const std::size_t end = k + 1 < cover.size() ? cover[k + 1].first - 1 : last;
            pieces_[end].emplace(first, acc);
        }
        return acc;
    }

    std::vector<BridgeOp> take_ops() { return std::move(ops_); }

private:
    std::size_t n_;
    std::vector<std::map<std::size_t, Operand>> pieces_;
    std::vector<BridgeOp> ops_;
};

}  // namespace

ScanSchedule hybrid_schedule(std::size_t n, std::size_t up_levels, std::size_t down_levels) {
    const std::size_t full_up = full_up_levels(n), full_down = full_down_levels(n);
    if (up_levels > full_up || down_levels > full_down)
        throw ConfigError(fmt::format("hybrid levels ({}, {}) exceed the sweep depths ({}, {}) for n={}", up_levels,
                                      down_levels, full_up, full_down, n));
    const auto up = up_sweep_levels(n);
    const auto down = down_sweep_levels(n);

    std::vector<Span> slots(n + 1);
    for (std::size_t i = 0; i <= n; ++i)
        slots[i] = {false, i, i};
    for (std::size_t k = 0; k < up_levels; ++k)
        simulate_up(n, up[k], slots);
    const std::vector<Span> snapshot = slots;
    for (std::size_t k = up_levels; k < full_up; ++k)
        simulate_up(n, up[k], slots);
    slots[n] = {true, 0, 0};
    const std::size_t skipped_down = full_down - down_levels;
    for (std::size_t k = 0; k < skipped_down; ++k)
        simulate_down(n, down[k], slots);

    // Shorter folds first so longer ones can extend them.
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i <= n; ++i)
        if (!(slots[i] == snapshot[i]))
            order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        const Span& a = slots[x];
        const Span& b = slots[y];
        if (a.identity != b.identity)
            return a.identity;
        return std::make_tuple(a.last - a.first, a.first) < std::make_tuple(b.last - b.first, b.first);
    });

    ScanSchedule s;
    s.n = n;
    s.up.assign(up.begin(), up.begin() + static_cast<std::ptrdiff_t>(up_levels));
    s.down.assign(down.begin() + static_cast<std::ptrdiff_t>(skipped_down), down.end());
    BridgeBuilder builder(n, snapshot);
    for (std::size_t i : order) {
        if (slots[i].identity)
            s.bridge.writes.push_back({i, true, {}});
        else
            s.bridge.writes.push_back({i, false, builder.build(slots[i].first, slots[i].last)});
    }
    s.bridge.ops = builder.take_ops();
    std::sort(s.bridge.writes.begin(), s.bridge.writes.end(),
              [](const BridgeWrite& a, const BridgeWrite& b) { return a.slot < b.slot; });
    return s;
}

}  // namespace scanprop::scan
