// SPDX-License-Identifier: Apache-2.0
//
// Index schedules of the tree scan over slots 0..n.
#pragma once

#include <cstddef>
#include <vector>

#include "scanprop/scan.hpp"

namespace scanprop::scan {

/// ceil(log2(n + 1)).
std::size_t tree_depth(std::size_t n) noexcept;
/// Up-sweep runs d = 0 .. tree_depth - 2.
std::size_t full_up_levels(std::size_t n) noexcept;
/// Down-sweep runs d = tree_depth - 1 .. 0.
std::size_t full_down_levels(std::size_t n) noexcept;

struct PairStep {
    std::size_t left = 0;
    std::size_t right = 0;
};

struct SweepLevel {
    Phase phase = Phase::up_sweep;
    int depth = 0;
    std::vector<PairStep> pairs;
};

/// Pairs of depth d: l = i + 2^d - 1, r = min(i + 2^(d+1) - 1, n).
std::vector<PairStep> level_pairs(std::size_t n, int depth);
std::vector<SweepLevel> up_sweep_levels(std::size_t n);
std::vector<SweepLevel> down_sweep_levels(std::size_t n);

/// Reference to a slot of the array as it stood when the bridge started, or
/// to the result of an earlier bridge operation.
struct Operand {
    bool temp = false;
    std::size_t index = 0;
    friend bool operator==(const Operand&, const Operand&) = default;
};

/// temp[k] = left <> right for the k-th op.
struct BridgeOp {
    Operand left;
    Operand right;
};

struct BridgeWrite {
    std::size_t slot = 0;
    bool identity = false;
    Operand value;
};

/// Serial segment between a truncated up-sweep and a truncated down-sweep.
/// All ops read the pre-bridge array; writes are applied after the last op.
struct Bridge {
    std::vector<BridgeOp> ops;
    std::vector<BridgeWrite> writes;
};

struct ScanSchedule {
    std::size_t n = 0;
    std::vector<SweepLevel> up;
    Bridge bridge;
    std::vector<SweepLevel> down;
};

ScanSchedule blelloch_schedule(std::size_t n);
/// Throws ConfigError when up_levels > full_up_levels(n) or down_levels > full_down_levels(n).
ScanSchedule hybrid_schedule(std::size_t n, std::size_t up_levels, std::size_t down_levels);

}  // namespace scanprop::scan
