// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstdint>
#include <limits>
#include <utility>

#include <fmt/format.h>

#include "scanprop/error.hpp"
#include "scanprop/jacobians.hpp"

namespace scanprop::jacobians {

namespace {

void check_index_range(std::uint64_t rows, std::uint64_t cols) {
    constexpr std::uint64_t limit = std::numeric_limits<Index>::max();
    if (rows > limit || cols > limit)
        throw ShapeError(fmt::format("conv Jacobian of {}x{} exceeds 32-bit indices", rows, cols));
}

}  // namespace

template <typename T>
void ConvSpec<T>::validate() const {
    if (in_channels == 0 || out_channels == 0)
        throw ShapeError("conv3x3: channel counts must be positive");
    if (height < 3 || width < 3)
        throw ShapeError(fmt::format("conv3x3: spatial size {}x{} is below 3x3", height, width));
    if (weights.size() != out_channels * in_channels * 9)
        throw ShapeError(fmt::format("conv3x3: expected {} weights, got {}", out_channels * in_channels * 9,
                                     weights.size()));
}

Offset conv3x3_tjac_nnz(std::size_t in_channels, std::size_t out_channels, std::size_t height, std::size_t width) {
    if (height < 3 || width < 3)
        return 0;
    return Offset{3} * width * (3 * height - 2) * in_channels * out_channels;
}

template <typename T>
CsrMatrix<T> conv3x3_tjac(const ConvSpec<T>& spec) {
    spec.validate();
    const std::size_t ci = spec.in_channels, co = spec.out_channels;
    const std::size_t h = spec.height, w = spec.width;
    const std::size_t plane = h * w;
    const std::size_t rows = ci * plane, cols = co * plane;
    check_index_range(rows, cols);

    const Offset edge = 6 * co, inner = 9 * co;
    std::vector<Offset> indptr(rows + 1);
    for (std::size_t i = 0; i < rows; ++i) {
        const std::size_t r = i % plane;
        indptr[i + 1] = indptr[i] + ((r < w || r >= w * (h - 1)) ? edge : inner);
    }
    const Offset nnz = indptr[rows];
    std::vector<Index> indices(nnz);
    std::vector<T> data(nnz);

    const auto period = static_cast<std::int64_t>(cols);
    std::vector<std::pair<Index, T>> entries;
    entries.reserve(inner);
    for (std::size_t i = 0; i < rows; ++i) {
        const std::size_t a = i / plane, r = i % plane;
        const std::size_t x = r % w;
        const std::size_t k_lo = r < w ? 1 : 0;
        const std::size_t k_hi = r >= w * (h - 1) ? 1 : 2;
        entries.clear();
        for (std::size_t j = 0; j < co; ++j) {
            for (std::size_t k = k_lo; k <= k_hi; ++k) {
                for (int off = -1; off <= 1; ++off) {
                    std::int64_t col = (static_cast<std::int64_t>(j * h + k) - 1) * static_cast<std::int64_t>(w) +
                                       static_cast<std::int64_t>(r) + off;
                    col = ((col % period) + period) % period;
                    const auto q = static_cast<std::int64_t>(x) + off;
                    const T value = (q >= 0 && q < static_cast<std::int64_t>(w))
                                        ? spec.weight(j, a, 2 - k, static_cast<std::size_t>(1 - off))
                                        : T{0};
                    entries.emplace_back(static_cast<Index>(col), value);
                }
            }
        }
        // Wrapped columns only occur at the first and last rows of the matrix.
        if (!std::is_sorted(entries.begin(), entries.end(),
                            [](const auto& l, const auto& rhs) { return l.first < rhs.first; }))
            std::sort(entries.begin(), entries.end(), [](const auto& l, const auto& rhs) { return l.first < rhs.first; });
        Offset pos = indptr[i];
        for (const auto& [col, value] : entries) {
            indices[pos] = col;
            data[pos] = value;
            ++pos;
        }
    }
    return CsrMatrix<T>(static_cast<Index>(rows), static_cast<Index>(cols), std::move(indptr), std::move(indices),
                        std::move(data));
}

template <typename T>
CsrMatrix<T> conv3x3_tjac_direct(const ConvSpec<T>& spec, bool drop_zero_weights) {
    const std::size_t ci = spec.in_channels, co = spec.out_channels;
    const std::size_t h = spec.height, w = spec.width;
    if (ci == 0 || co == 0 || h == 0 || w == 0)
        throw ShapeError("conv3x3: empty geometry");
    if (spec.weights.size() != co * ci * 9)
        throw ShapeError("conv3x3: weight count does not match the channel counts");
    const std::size_t rows = ci * h * w, cols = co * h * w;
    check_index_range(rows, cols);

    std::vector<Offset> indptr(rows + 1, 0);
    std::vector<Index> indices;
    std::vector<T> data;
    for (std::size_t c = 0; c < ci; ++c) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                for (std::size_t o = 0; o < co; ++o) {
                    for (std::size_t p = y == 0 ? 0 : y - 1; p <= std::min(y + 1, h - 1); ++p) {
                        for (std::size_t q = x == 0 ? 0 : x - 1; q <= std::min(x + 1, w - 1); ++q) {
                            const T value = spec.weight(o, c, y + 1 - p, x + 1 - q);
                            if (drop_zero_weights && value == T{0})
                                continue;
                            indices.push_back(static_cast<Index>((o * h + p) * w + q));
                            data.push_back(value);
                        }
                    }
                }
                indptr[(c * h + y) * w + x + 1] = indices.size();
            }
        }
    }
    return CsrMatrix<T>(static_cast<Index>(rows), static_cast<Index>(cols), std::move(indptr), std::move(indices),
                        std::move(data));
}

template <typename T>
std::vector<T> conv3x3_forward(const ConvSpec<T>& spec, std::span<const T> input) {
    const std::size_t ci = spec.in_channels, co = spec.out_channels;
    const std::size_t h = spec.height, w = spec.width;
    if (spec.weights.size() != co * ci * 9)
        throw ShapeError("conv3x3: weight count does not match the channel counts");
    if (input.size() != ci * h * w)
        throw ShapeError(fmt::format("conv3x3: input has {} values, expected {}", input.size(), ci * h * w));
    std::vector<T> out(co * h * w, T{0});
    for (std::size_t o = 0; o < co; ++o) {
        for (std::size_t p = 0; p < h; ++p) {
            for (std::size_t q = 0; q < w; ++q) {
                T acc{0};
                for (std::size_t c = 0; c < ci; ++c) {
                    for (std::size_t u = 0; u < 3; ++u) {
                        const std::int64_t y = static_cast<std::int64_t>(p + u) - 1;
                        if (y < 0 || y >= static_cast<std::int64_t>(h))
                            continue;
                        for (std::size_t v = 0; v < 3; ++v) {
                            const std::int64_t x = static_cast<std::int64_t>(q + v) - 1;
                            if (x < 0 || x >= static_cast<std::int64_t>(w))
                                continue;
                            acc += spec.weight(o, c, u, v) *
                                   input[(c * h + static_cast<std::size_t>(y)) * w + static_cast<std::size_t>(x)];
                        }
                    }
                }
                out[(o * h + p) * w + q] = acc;
            }
        }
    }
    return out;
}

#define SCANPROP_INSTANTIATE(T)                                           \
    template struct ConvSpec<T>;                                          \
    template CsrMatrix<T> conv3x3_tjac(const ConvSpec<T>&);               \
    template CsrMatrix<T> conv3x3_tjac_direct(const ConvSpec<T>&, bool);  \
    template std::vector<T> conv3x3_forward(const ConvSpec<T>&, std::span<const T>);
SCANPROP_INSTANTIATE(float)
SCANPROP_INSTANTIATE(double)
#undef SCANPROP_INSTANTIATE

}  // namespace scanprop::jacobians
