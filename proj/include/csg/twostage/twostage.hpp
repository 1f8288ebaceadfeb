#pragma once

#include <span>
#include <vector>

#include "csg/core/matrix.hpp"
#include "csg/solver/solver.hpp"
#include "csg/twostage/problem.hpp"

namespace csg::twostage {

/// Extensive form over weighted scenarios; first-stage variables occupy
/// indices [0, first_stage_dim).
solver::MixedBinaryProgram build_saa(const ProblemSpec& spec, const Matrix& scenarios, std::span<const double> probs);

struct SaaSolution {
    FirstStage first_stage;
    double value = 0.0;
};

/// Surrogate SAA with uniform weights on the K scenario rows.
SaaSolution solve_zeta_saa(const ProblemSpec& spec, const Matrix& scenarios);

/// First-stage cost h(y).
double first_stage_cost(const ProblemSpec& spec, const FirstStage& y);

/// Scenario-dependent part of the 2SP objective, so that the objective is
/// h(y) + E[subproblem_cost(y, omega)]. Newsvendor and CEP1: Q(y, omega).
/// CVaR: -omega.y + lambda/(1 - alpha) * max(-omega.y - gamma, 0).
/// MNV: minus the recourse profit.
double subproblem_cost(const ProblemSpec& spec, const FirstStage& y, std::span<const double> omega);

struct OptSearchResult {
    double loss = 0.0;
    FirstStage first_stage;
    /// Surrogate SAA objective at the returned point, and the slack used.
    double saa_objective = 0.0;
    double epsilon = 0.0;
};

/// Tolerance on the optimality row for a given surrogate optimum.
double optimality_epsilon(double v_star);

/// Optimistic task loss: min h(y) + q(y, omega) over near-optimal solutions
/// of the surrogate SAA (objective <= v_star + epsilon). Retries once with a
/// tenfold epsilon before raising SolverError.
OptSearchResult opt_search(const ProblemSpec& spec, const Matrix& scenarios, double v_star,
                           std::span<const double> omega);

/// h(y) + sum_j probs_j * subproblem_cost(y, support_j).
double evaluate_true(const ProblemSpec& spec, const FirstStage& y, const Matrix& support,
                     std::span<const double> probs);

struct FullSolveBudget {
    std::size_t max_support = 1000;
    std::size_t max_binaries = 66;
};

/// Extensive form over the whole conditional support. Refuses with
/// BudgetError instead of truncating.
SaaSolution solve_full_2sp(const ProblemSpec& spec, const Matrix& support, std::span<const double> probs,
                           const FullSolveBudget& budget = {});

double newsvendor_fractile(const NewsvendorParams& params);

/// Smallest support point whose CDF reaches the critical fractile, clamped
/// to [0, u].
double newsvendor_closed_form(const NewsvendorParams& params, const Matrix& support, std::span<const double> probs);

}  // namespace csg::twostage
