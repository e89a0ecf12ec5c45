// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include <fmt/format.h>

#include "scanprop/error.hpp"
#include "scanprop/training.hpp"

namespace scanprop::training {

template <typename T>
Optimizer<T>::Optimizer(const OptimizerConfig& config, const ParamSet<T>& shape) : config_(config) {
    if (!(config.lr >= 0.0))
        throw ConfigError("learning rate must be non-negative");
    for (const auto& t : shape.tensors()) {
        first_.emplace_back(t.values.size(), T{0});
        if (config.kind == OptimizerKind::adam)
            second_.emplace_back(t.values.size(), T{0});
    }
}

template <typename T>
void Optimizer<T>::step(ParamSet<T>& params, const ParamSet<T>& grads) {
    auto& ps = params.tensors();
    const auto& gs = grads.tensors();
    if (ps.size() != first_.size() || gs.size() != first_.size())
        throw ShapeError("optimizer state does not mirror the parameters");
    for (std::size_t k = 0; k < ps.size(); ++k)
        if (ps[k].values.size() != first_[k].size() || gs[k].values.size() != first_[k].size())
            throw ShapeError(fmt::format("tensor {} changed shape", ps[k].name));
    ++steps_;
    const T lr = static_cast<T>(config_.lr);
    if (config_.kind == OptimizerKind::sgd) {
        const T mu = static_cast<T>(config_.momentum);
        for (std::size_t k = 0; k < ps.size(); ++k) {
            auto& buf = first_[k];
            for (std::size_t i = 0; i < buf.size(); ++i) {
                buf[i] = steps_ == 1 ? gs[k].values[i] : mu * buf[i] + gs[k].values[i];
                ps[k].values[i] -= lr * buf[i];
            }
        }
        return;
    }
    const T b1 = static_cast<T>(config_.beta1), b2 = static_cast<T>(config_.beta2);
    const T eps = static_cast<T>(config_.eps);
    const T c1 = T{1} - static_cast<T>(std::pow(config_.beta1, static_cast<double>(steps_)));
    const T c2 = T{1} - static_cast<T>(std::pow(config_.beta2, static_cast<double>(steps_)));
    for (std::size_t k = 0; k < ps.size(); ++k) {
        auto& m = first_[k];
        auto& v = second_[k];
        for (std::size_t i = 0; i < m.size(); ++i) {
            const T g = gs[k].values[i];
            m[i] = b1 * m[i] + (T{1} - b1) * g;
            v[i] = b2 * v[i] + (T{1} - b2) * g * g;
            const T m_hat = m[i] / c1;
            const T v_hat = v[i] / c2;
            ps[k].values[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace scanprop::training
