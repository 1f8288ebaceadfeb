#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace csg::neural {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig config;
    std::size_t step = 0;
    std::vector<double> m;
    std::vector<double> v;

    AdamState() = default;
    AdamState(std::size_t num_params, AdamConfig cfg) : config(cfg), m(num_params, 0.0), v(num_params, 0.0) {}
};

/// One bias-corrected Adam update. Throws TrainingError on a non-finite
/// gradient, leaving params and state untouched.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

}  // namespace csg::neural
