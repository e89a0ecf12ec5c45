// SPDX-License-Identifier: Apache-2.0
//
// Analytical transposed Jacobians (rows index the layer input, columns the
// layer output) and the finite-difference oracle used to check them.
//
// Tensors are flattened channel-major then row-major: (c * h + y) * w + x.
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "scanprop/dense.hpp"
#include "scanprop/sparse.hpp"
#include "scanprop/tape.hpp"

namespace scanprop::jacobians {

using sparse::CsrMatrix;
using sparse::Index;
using sparse::Offset;

/// 3x3 convolution with stride 1 and zero padding 1, weights stored as
/// [out_channels][in_channels][3][3].
template <typename T>
struct ConvSpec {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<T> weights;

    std::size_t input_size() const noexcept { return in_channels * height * width; }
    std::size_t output_size() const noexcept { return out_channels * height * width; }
    T weight(std::size_t o, std::size_t c, std::size_t u, std::size_t v) const noexcept {
        return weights[((o * in_channels + c) * 3 + u) * 3 + v];
    }
    /// Throws ShapeError unless height, width >= 3 and the weight count matches.
    void validate() const;
};

/// Stored-entry count of conv3x3_tjac: 3 w (3 h - 2) c_i c_o.
Offset conv3x3_tjac_nnz(std::size_t in_channels, std::size_t out_channels, std::size_t height, std::size_t width);

/// CSR transposed Jacobian laid out with 6 c_o entries per top/bottom image row
/// position and 9 c_o elsewhere. Left/right border rows keep their out-of-image
/// neighbours as explicit zeros, so the pattern depends on the geometry only.
template <typename T>
CsrMatrix<T> conv3x3_tjac(const ConvSpec<T>& spec);

/// Same operator built by enumerating each input's in-image neighbourhood;
/// stores no out-of-image entries and accepts any height, width >= 1. With
/// `drop_zero_weights`, entries whose weight is exactly zero are skipped too.
template <typename T>
CsrMatrix<T> conv3x3_tjac_direct(const ConvSpec<T>& spec, bool drop_zero_weights = false);

template <typename T>
std::vector<T> conv3x3_forward(const ConvSpec<T>& spec, std::span<const T> input);

/// d x d diagonal with 1 where x > 0 and 0 elsewhere (including x == 0).
template <typename T>
CsrMatrix<T> relu_tjac(std::span<const T> x);

template <typename T>
std::vector<T> relu_forward(std::span<const T> x);

/// Non-overlapping max-pooling (stride equals window). pool_indices holds, per
/// output element in flat output order, the pooled input position within its
/// channel plane (y * width + x).
struct PoolSpec {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t window_h = 0;
    std::size_t window_w = 0;
    std::vector<Index> pool_indices;

    std::size_t out_height() const noexcept { return window_h ? height / window_h : 0; }
    std::size_t out_width() const noexcept { return window_w ? width / window_w : 0; }
    std::size_t input_size() const noexcept { return channels * height * width; }
    std::size_t output_size() const noexcept { return channels * out_height() * out_width(); }
};

template <typename T>
struct PoolForward {
    std::vector<T> output;
    PoolSpec spec;
};

/// Takes the first maximal element in row-major window order.
template <typename T>
PoolForward<T> maxpool_forward(std::size_t channels, std::size_t height, std::size_t width, std::size_t window_h,
                               std::size_t window_w, std::span<const T> input);

/// Output equals input gathered at spec.pool_indices.
template <typename T>
std::vector<T> maxpool_apply(const PoolSpec& spec, std::span<const T> input);

/// One unit entry per output element at row = pooled input index. Throws
/// PoolIndexError for repeated or out-of-window indices.
template <typename T>
CsrMatrix<T> maxpool_tjac(const PoolSpec& spec);

/// (dh_t/dh_{t-1})^T = W_hh^T diag(1 - h_t^2). Throws TapeError unless 1 <= t <= T.
template <typename T>
DenseMatrix<T> rnn_tjac(const CellTape<T>& tape, std::size_t t, const DenseMatrix<T>& w_hh);

/// (dh_t/dh_{t-1})^T of a GRU cell from the gate values on the tape.
/// Throws TapeError when the gates of step t are missing.
template <typename T>
DenseMatrix<T> gru_tjac(const CellTape<T>& tape, std::size_t t, const DenseMatrix<T>& w_hr,
                        const DenseMatrix<T>& w_hz, const DenseMatrix<T>& w_hn);

template <typename T>
using VectorMap = std::function<std::vector<T>(std::span<const T>)>;

/// Central-difference transposed Jacobian of f at x: row j is
/// (f(x + eps e_j) - f(x - eps e_j)) / (2 eps).
template <typename T>
DenseMatrix<T> numeric_tjac_oracle(const VectorMap<T>& f, std::span<const T> x, T eps);

/// Streams the oracle rows for the listed inputs (all inputs when empty)
/// without materializing the full matrix.
template <typename T>
void numeric_tjac_rows(const VectorMap<T>& f, std::span<const T> x, T eps, std::span<const std::size_t> inputs,
                       const std::function<void(std::size_t, std::span<const T>)>& sink);

}  // namespace scanprop::jacobians
