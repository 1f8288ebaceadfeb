#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "csg/core/matrix.hpp"
#include "csg/neural/dense_net.hpp"
#include "csg/twostage/problem.hpp"

namespace csg::env {

using twostage::ProblemKind;

/// Frozen synthetic joint distribution of (context, outcome). Every member is
/// fixed at construction; sampling never mutates the environment.
struct SyntheticEnv {
    ProblemKind kind = ProblemKind::Newsvendor;
    std::uint64_t seed = 0;
    std::size_t context_dim = 0;
    std::size_t outcome_dim = 0;
    std::size_t support_size = 0;

    /// Newsvendor and CEP1: raw support generator. CVaR: conditional mean.
    neural::DenseNet generator;
    /// CVaR: conditional scale, floored at `sigma_floor` after the ReLU.
    neural::DenseNet sigma_net;
    /// Affine calibration applied to raw outputs, one entry per calibrated
    /// group (newsvendor: 1; CEP1: one per part; CVaR: mean then scale).
    std::vector<double> scale;
    std::vector<double> shift;
    double sigma_floor = 1e-3;
    /// CVaR residual pool, support_size x outcome_dim.
    Matrix residuals;

    /// MNV: lower Cholesky factor of the context covariance, loading matrix
    /// W (m x d) and the per-product noise standard deviation.
    Matrix context_chol;
    Matrix loading;
    std::vector<double> noise_sd;
    double mu_low = 5.0, mu_high = 15.0, sd_low = 5.0 / 3.0, sd_high = 2.5;
};

/// Overrides use keys `env.<field>`: support_size (CVaR, MNV), mean and sd
/// (newsvendor and CEP1 targets), snr (MNV), hidden (generator width).
SyntheticEnv make_env(ProblemKind kind, std::uint64_t seed, const std::map<std::string, std::string>& overrides = {});

struct JointSample {
    Matrix contexts;
    Matrix outcomes;
    std::size_t size() const noexcept { return contexts.rows(); }
    /// Equal row counts and finite entries.
    void validate() const;
};

/// n iid draws: x from the context law, then a uniform support point at x.
/// Draw i uses its own stream derived from (seed, i).
JointSample sample_joint(const SyntheticEnv& env, std::size_t n, std::uint64_t seed);

std::vector<double> sample_context(const SyntheticEnv& env, Rng& rng);

struct Support {
    Matrix points;
    std::vector<double> probs;
};

/// Full conditional support with uniform weights; deterministic in (env, x).
Support conditional_support(const SyntheticEnv& env, std::span<const double> x);

/// Probability-weighted mean of the conditional support.
std::vector<double> conditional_mean(const SyntheticEnv& env, std::span<const double> x);
std::vector<double> weighted_mean(const Support& support);

/// CVaR only: the residual implied by (x, omega) under the structural law.
std::vector<double> recover_residual(const SyntheticEnv& env, std::span<const double> x,
                                     std::span<const double> omega);

/// Text formats: header `d=<int>,p=<int>,n=<int>`, then one comma-separated
/// row per record (context, outcome and, for supports, the probability).
void write_dataset(std::ostream& out, const JointSample& sample);
JointSample read_dataset(std::istream& in);

struct SupportFile {
    std::vector<double> context;
    Support support;
};
void write_support(std::ostream& out, std::span<const double> x, const Support& support);
SupportFile read_support(std::istream& in);

}  // namespace csg::env
