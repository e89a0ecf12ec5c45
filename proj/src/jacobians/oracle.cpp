// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "scanprop/error.hpp"
#include "scanprop/jacobians.hpp"

namespace scanprop::jacobians {

template <typename T>
void numeric_tjac_rows(const VectorMap<T>& f, std::span<const T> x, T eps, std::span<const std::size_t> inputs,
                       const std::function<void(std::size_t, std::span<const T>)>& sink) {
    std::vector<std::size_t> all;
    if (inputs.empty()) {
        all.resize(x.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        inputs = all;
    }
    std::vector<T> probe(x.begin(), x.end());
    std::vector<T> row;
    const T scale = T{1} / (T{2} * eps);
    for (std::size_t j : inputs) {
        if (j >= x.size())
            throw ShapeError(fmt::format("oracle input {} is out of range for dimension {}", j, x.size()));
        probe[j] = x[j] + eps;
        const std::vector<T> plus = f(probe);
        probe[j] = x[j] - eps;
        const std::vector<T> minus = f(probe);
        probe[j] = x[j];
        if (plus.size() != minus.size())
            throw ShapeError("oracle map changed its output size");
        row.resize(plus.size());
        for (std::size_t i = 0; i < plus.size(); ++i)
            row[i] = (plus[i] - minus[i]) * scale;
        sink(j, row);
    }
}

template <typename T>
DenseMatrix<T> numeric_tjac_oracle(const VectorMap<T>& f, std::span<const T> x, T eps) {
    const std::size_t m = f(x).size();
    DenseMatrix<T> out(x.size(), m);
    numeric_tjac_rows<T>(f, x, eps, {}, [&](std::size_t j, std::span<const T> row) {
        if (row.size() != m)
            throw ShapeError("oracle map changed its output size");
        std::copy(row.begin(), row.end(), out.row(j).begin());
    });
    return out;
}

#define SCANPROP_INSTANTIATE(T)                                                                      \
    template void numeric_tjac_rows(const VectorMap<T>&, std::span<const T>, T, std::span<const std::size_t>, \
                                    const std::function<void(std::size_t, std::span<const T>)>&);    \
    template DenseMatrix<T> numeric_tjac_oracle(const VectorMap<T>&, std::span<const T>, T);
SCANPROP_INSTANTIATE(float)
SCANPROP_INSTANTIATE(double)
#undef SCANPROP_INSTANTIATE

}  // namespace scanprop::jacobians
