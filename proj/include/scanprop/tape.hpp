// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

namespace scanprop {

enum class CellKind { rnn, gru };

/// Per-timestep record of a recurrent forward pass. Timesteps are 1-based:
/// hidden[t] is h_t for t in [0, T] with hidden[0] = h_0, and inputs[t-1],
/// reset[t-1], ... belong to step t. Gate vectors are filled for GRU only;
/// `candidate_pre` holds W_hn h_{t-1} + b_hn, the term the reset gate scales.
template <typename T>
struct CellTape {
    CellKind kind = CellKind::rnn;
    std::size_t input_size = 0;
    std::size_t hidden_size = 0;

    std::vector<std::vector<T>> inputs;
    std::vector<std::vector<T>> hidden;

    std::vector<std::vector<T>> reset;
    std::vector<std::vector<T>> update;
    std::vector<std::vector<T>> candidate;
    std::vector<std::vector<T>> candidate_pre;

    std::size_t steps() const noexcept { return inputs.size(); }
    bool has_gates() const noexcept {
        const std::size_t n = steps();
        return reset.size() == n && update.size() == n && candidate.size() == n && candidate_pre.size() == n;
    }
};

}  // namespace scanprop
