// SPDX-License-Identifier: Apache-2.0
#include <algorithm>

#include "scanprop/analysis.hpp"
#include "scanprop/error.hpp"

namespace scanprop::analysis {

namespace {

// Number of (l, r) pairs at tree depth d for slots 0..n.
std::size_t pairs_at(std::size_t n, std::size_t d) {
    const std::size_t half = std::size_t{1} << d;
    if (n < half)
        return 0;
    return (n - half) / (half << 1) + 1;
}

}  // namespace

StepWork step_work_counts(std::size_t n, std::size_t p) {
    if (n == 0 || p == 0)
        throw ConfigError("step_work_counts needs n >= 1 and p >= 1");
    std::size_t depth = 0;
    while ((std::size_t{1} << depth) < n + 1)
        ++depth;
    StepWork sw;
    auto add_level = [&](std::size_t d) {
        const std::size_t pairs = pairs_at(n, d);
        sw.work += pairs;
        sw.steps += (pairs + p - 1) / p;
    };
    for (std::size_t d = 0; d + 1 < depth; ++d)
        add_level(d);
    for (std::size_t d = depth; d-- > 0;)
        add_level(d);
    return sw;
}

SpaceModel space_models(std::size_t n, std::size_t p, std::size_t layers, std::size_t stages, double m_jacob,
                        double m_x) {
    if (n == 0 || p == 0 || layers == 0 || stages == 0)
        throw ConfigError("space models need positive n, p, L and K");
    SpaceModel m;
    m.bppsa_per_worker = static_cast<double>(std::max<std::size_t>((n + p - 1) / p, 1)) * m_jacob;
    m.pipeline_per_device = (static_cast<double>(layers) / static_cast<double>(stages) + static_cast<double>(stages)) * m_x;
    return m;
}

}  // namespace scanprop::analysis
