#include "csg/neural/adam.hpp"

#include <cmath>

#include "csg/core/errors.hpp"

namespace csg::neural {

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
    if (params.size() != grads.size() || state.m.size() != params.size())
        throw InputError("Adam state, parameters and gradients differ in length");
    for (std::size_t i = 0; i < grads.size(); ++i)
        if (!std::isfinite(grads[i])) throw TrainingError("non-finite gradient at parameter " + std::to_string(i));
    const AdamConfig& c = state.config;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(c.beta1, t);
    const double bc2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
        state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
}

}  // namespace csg::neural
