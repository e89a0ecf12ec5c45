// SPDX-License-Identifier: Apache-2.0
#include <limits>

#include <fmt/format.h>

#include "scanprop/error.hpp"
#include "scanprop/jacobians.hpp"

namespace scanprop::jacobians {

template <typename T>
CsrMatrix<T> relu_tjac(std::span<const T> x) {
    if (x.size() > std::numeric_limits<Index>::max())
        throw ShapeError("relu: input exceeds 32-bit indices");
    const auto d = static_cast<Index>(x.size());
    std::vector<T> data(d);
    for (Index i = 0; i < d; ++i)
        data[i] = x[i] > T{0} ? T{1} : T{0};
    return CsrMatrix<T>(std::make_shared<const sparse::SparsityPattern>(sparse::SparsityPattern::diagonal(d)),
                        std::move(data));
}

template <typename T>
std::vector<T> relu_forward(std::span<const T> x) {
    std::vector<T> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = x[i] > T{0} ? x[i] : T{0};
    return out;
}

namespace {

void check_geometry(const PoolSpec& s) {
    if (s.channels == 0 || s.height == 0 || s.width == 0 || s.window_h == 0 || s.window_w == 0)
        throw ShapeError("maxpool: empty geometry");
    if (s.height % s.window_h != 0 || s.width % s.window_w != 0)
        throw ShapeError(fmt::format("maxpool: {}x{} input is not divisible by the {}x{} window", s.height, s.width,
                                     s.window_h, s.window_w));
    if (s.input_size() > std::numeric_limits<Index>::max())
        throw ShapeError("maxpool: input exceeds 32-bit indices");
}

}  // namespace

template <typename T>
PoolForward<T> maxpool_forward(std::size_t channels, std::size_t height, std::size_t width, std::size_t window_h,
                               std::size_t window_w, std::span<const T> input) {
    PoolForward<T> result;
    PoolSpec& s = result.spec;
    s.channels = channels;
    s.height = height;
    s.width = width;
    s.window_h = window_h;
    s.window_w = window_w;
    check_geometry(s);
    if (input.size() != s.input_size())
        throw ShapeError(fmt::format("maxpool: input has {} values, expected {}", input.size(), s.input_size()));
    const std::size_t ho = s.out_height(), wo = s.out_width();
    result.output.resize(s.output_size());
    s.pool_indices.resize(s.output_size());
    for (std::size_t c = 0; c < channels; ++c) {
        const T* plane = input.data() + c * height * width;
        for (std::size_t p = 0; p < ho; ++p) {
            for (std::size_t q = 0; q < wo; ++q) {
                std::size_t best = p * window_h * width + q * window_w;
                for (std::size_t u = 0; u < window_h; ++u) {
                    for (std::size_t v = 0; v < window_w; ++v) {
                        const std::size_t idx = (p * window_h + u) * width + q * window_w + v;
                        if (plane[idx] > plane[best])
                            best = idx;
                    }
                }
                const std::size_t out = (c * ho + p) * wo + q;
                result.output[out] = plane[best];
                s.pool_indices[out] = static_cast<Index>(best);
            }
        }
    }
    return result;
}

template <typename T>
std::vector<T> maxpool_apply(const PoolSpec& spec, std::span<const T> input) {
    check_geometry(spec);
    if (input.size() != spec.input_size() || spec.pool_indices.size() != spec.output_size())
        throw ShapeError("maxpool: input or index count does not match the geometry");
    const std::size_t per_channel = spec.out_height() * spec.out_width();
    const std::size_t plane = spec.height * spec.width;
    std::vector<T> out(spec.output_size());
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = input[(k / per_channel) * plane + spec.pool_indices[k]];
    return out;
}

template <typename T>
CsrMatrix<T> maxpool_tjac(const PoolSpec& spec) {
    check_geometry(spec);
    const std::size_t ho = spec.out_height(), wo = spec.out_width();
    const std::size_t plane = spec.height * spec.width;
    const std::size_t rows = spec.input_size(), cols = spec.output_size();
    if (spec.pool_indices.size() != cols)
        throw ShapeError(fmt::format("maxpool: {} pool indices for {} outputs", spec.pool_indices.size(), cols));

    constexpr std::size_t unset = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> mapping(rows, unset);
    for (std::size_t c = 0; c < spec.channels; ++c) {
        for (std::size_t p = 0; p < ho; ++p) {
            for (std::size_t q = 0; q < wo; ++q) {
                const std::size_t out = (c * ho + p) * wo + q;
                const std::size_t idx = spec.pool_indices[out];
                if (idx >= plane)
                    throw PoolIndexError(fmt::format("pool index {} of output {} is outside the channel plane", idx, out));
                const std::size_t row = c * plane + idx;
                if (mapping[row] != unset)
                    throw PoolIndexError(fmt::format("input {} is pooled by outputs {} and {}", row, mapping[row], out));
                const std::size_t y = idx / spec.width, x = idx % spec.width;
                if (y / spec.window_h != p || x / spec.window_w != q)
                    throw PoolIndexError(fmt::format("pool index {} lies outside the window of output {}", idx, out));
                mapping[row] = out;
            }
        }
    }

    std::vector<Offset> indptr(rows + 1, 0);
    for (std::size_t r = 0; r < rows; ++r)
        indptr[r + 1] = indptr[r] + (mapping[r] != unset ? 1 : 0);
    std::vector<Index> indices;
    indices.reserve(cols);
    for (std::size_t r = 0; r < rows; ++r)
        if (mapping[r] != unset)
            indices.push_back(static_cast<Index>(mapping[r]));
    std::vector<T> data(indices.size(), T{1});
    return CsrMatrix<T>(static_cast<Index>(rows), static_cast<Index>(cols), std::move(indptr), std::move(indices),
                        std::move(data));
}

#define SCANPROP_INSTANTIATE(T)                                                                               \
    template CsrMatrix<T> relu_tjac(std::span<const T>);                                                      \
    template std::vector<T> relu_forward(std::span<const T>);                                                 \
    template PoolForward<T> maxpool_forward(std::size_t, std::size_t, std::size_t, std::size_t, std::size_t, \
                                            std::span<const T>);                                              \
    template std::vector<T> maxpool_apply(const PoolSpec&, std::span<const T>);                               \
    template CsrMatrix<T> maxpool_tjac(const PoolSpec&);
SCANPROP_INSTANTIATE(float)
SCANPROP_INSTANTIATE(double)
#undef SCANPROP_INSTANTIATE

}  // namespace scanprop::jacobians
