#pragma once

#include <cstdint>
#include <span>

#include "csg/core/matrix.hpp"

namespace csg::mmd {

/// A scenario set is a K x p matrix of atoms with implicit uniform weights.
using ScenarioSet = Matrix;

/// -||a - b||_2. Symmetric bit for bit.
double energy_kernel(std::span<const double> a, std::span<const double> b);

/// Per-sample loss (1/K^2) sum k(z_i, z_j) - (2/K) sum k(omega, z_i).
double mmd_loss(const ScenarioSet& scenarios, std::span<const double> omega);

/// d(mmd_loss)/d(scenarios); the gradient of ||v|| at v = 0 is taken as 0.
Matrix mmd_loss_grad(const ScenarioSet& scenarios, std::span<const double> omega);

/// Biased V-statistic estimate of the squared energy MMD between two
/// uniformly weighted samples. Symmetric bit for bit.
double mmd_sq(const ScenarioSet& a, const ScenarioSet& b);

/// d(mmd_sq(a, b))/d(a).
Matrix mmd_sq_grad(const ScenarioSet& a, const ScenarioSet& b);

struct ReductionResult {
    ScenarioSet atoms;
    double objective = 0.0;
};

/// Distributional scenario reduction: gradient descent on mmd_sq(atoms,
/// sample) from K distinct sample points picked by a seeded draw. Returns the
/// best iterate seen.
ReductionResult reduce_scenarios_mmd(const ScenarioSet& sample, std::size_t k, std::size_t steps, double lr,
                                     std::uint64_t seed);

}  // namespace csg::mmd
