#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "csg/core/errors.hpp"
#include "csg/twostage/twostage.hpp"
#include "models.hpp"

namespace csg::twostage {
namespace {

using detail::Model;

void check_scenarios(const ProblemSpec& spec, const Matrix& scenarios) {
    if (scenarios.rows() == 0) throw InputError("at least one scenario is required");
    if (scenarios.cols() != spec.scenario_dim())
        throw InputError("scenario dimension " + std::to_string(scenarios.cols()) + " does not match problem (" +
                         std::to_string(spec.scenario_dim()) + ")");
}

void check_probs(const Matrix& scenarios, std::span<const double> probs) {
    if (probs.size() != scenarios.rows()) throw InputError("one probability per scenario is required");
    double total = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) throw InputError("probabilities must be nonnegative");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InputError("probabilities must sum to 1");
}

FirstStage extract_first_stage(const solver::MixedBinaryProgram& mbp, const std::vector<std::size_t>& y,
                               const std::vector<double>& primal) {
    FirstStage out;
    for (std::size_t idx : y) {
        const auto& b = mbp.base.bounds[idx];
        out.y.push_back(std::clamp(primal[idx], b.lower, b.upper));
    }
    return out;
}

struct SaaProgram {
    ProgramBuilder builder;
    std::vector<std::size_t> y;
};

SaaProgram saa_program(const Model& model, const Matrix& scenarios, std::span<const double> probs) {
    SaaProgram prog;
    prog.y = model.add_first_stage_vars(prog.builder);
    model.add_first_stage_rows(prog.builder, prog.y);
    model.add_first_stage_cost(prog.builder, prog.y);
    for (std::size_t k = 0; k < scenarios.rows(); ++k)
        model.add_recourse(prog.builder, prog.y, scenarios.row(k), probs[k]);
    return prog;
}

std::vector<double> uniform_probs(std::size_t k) { return std::vector<double>(k, 1.0 / static_cast<double>(k)); }

SaaSolution solve_program(const SaaProgram& prog, const char* what) {
    const auto mbp = prog.builder.build();
    const auto res = solver::solve_mbp(mbp);
    if (res.status != solver::Status::Optimal)
        throw SolverError(std::string(what) + " is " + solver::status_name(res.status));
    return {extract_first_stage(mbp, prog.y, res.primal), res.objective};
}

}  // namespace

solver::MixedBinaryProgram build_saa(const ProblemSpec& spec, const Matrix& scenarios, std::span<const double> probs) {
    check_scenarios(spec, scenarios);
    check_probs(scenarios, probs);
    const auto model = detail::make_model(spec);
    return saa_program(*model, scenarios, probs).builder.build();
}

SaaSolution solve_zeta_saa(const ProblemSpec& spec, const Matrix& scenarios) {
    check_scenarios(spec, scenarios);
    const auto model = detail::make_model(spec);
    const auto probs = uniform_probs(scenarios.rows());
    return solve_program(saa_program(*model, scenarios, probs), "surrogate SAA");
}

double first_stage_cost(const ProblemSpec& spec, const FirstStage& y) {
    if (y.y.size() != spec.first_stage_dim()) throw InputError("first-stage vector has wrong length");
    return detail::make_model(spec)->first_stage_cost(y);
}

double subproblem_cost(const ProblemSpec& spec, const FirstStage& y, std::span<const double> omega) {
    if (y.y.size() != spec.first_stage_dim()) throw InputError("first-stage vector has wrong length");
    if (omega.size() != spec.scenario_dim()) throw InputError("outcome has wrong dimension");
    const auto model = detail::make_model(spec);
    ProgramBuilder b;
    const auto idx = model->add_first_stage_vars(b);
    for (std::size_t i = 0; i < idx.size(); ++i) b.set_bounds(idx[i], y.y[i], y.y[i]);
    model->add_recourse(b, idx, omega, 1.0);
    const auto res = solver::solve_mbp(b.build());
    if (res.status != solver::Status::Optimal)
        throw SolverError("recourse problem is " + solver::status_name(res.status));
    return res.objective;
}

double optimality_epsilon(double v_star) { return 1e-9 * std::max(1.0, std::abs(v_star)); }

OptSearchResult opt_search(const ProblemSpec& spec, const Matrix& scenarios, double v_star,
                           std::span<const double> omega) {
    check_scenarios(spec, scenarios);
    if (omega.size() != spec.scenario_dim()) throw InputError("outcome has wrong dimension");
    const auto model = detail::make_model(spec);
    const auto probs = uniform_probs(scenarios.rows());

    double eps = optimality_epsilon(v_star);
    for (int attempt = 0; attempt < 2; ++attempt, eps *= 10.0) {
        SaaProgram prog = saa_program(*model, scenarios, probs);
        const std::vector<double> saa_costs = prog.builder.costs();
        ProgramBuilder::Terms row;
        for (std::size_t j = 0; j < saa_costs.size(); ++j)
            if (saa_costs[j] != 0.0) row.emplace_back(j, saa_costs[j]);
        prog.builder.add_row(std::move(row), solver::Sense::LessEqual, v_star + eps);
        prog.builder.clear_costs();
        model->add_first_stage_cost(prog.builder, prog.y);
        model->add_recourse(prog.builder, prog.y, omega, 1.0);

        const auto mbp = prog.builder.build();
        const auto res = solver::solve_mbp(mbp);
        if (res.status == solver::Status::Infeasible) continue;
        if (res.status != solver::Status::Optimal)
            throw SolverError("optimistic search is " + solver::status_name(res.status));
        OptSearchResult out;
        out.loss = res.objective;
        out.first_stage = extract_first_stage(mbp, prog.y, res.primal);
        out.epsilon = eps;
        for (std::size_t j = 0; j < saa_costs.size(); ++j) out.saa_objective += saa_costs[j] * res.primal[j];
        return out;
    }
    throw SolverError("optimistic search infeasible at v* = " + std::to_string(v_star) + " even with epsilon " +
                      std::to_string(eps / 10.0));
}

double evaluate_true(const ProblemSpec& spec, const FirstStage& y, const Matrix& support,
                     std::span<const double> probs) {
    check_scenarios(spec, support);
    check_probs(support, probs);
    double total = first_stage_cost(spec, y);
    for (std::size_t j = 0; j < support.rows(); ++j) {
        if (probs[j] == 0.0) continue;
        total += probs[j] * subproblem_cost(spec, y, support.row(j));
    }
    return total;
}

SaaSolution solve_full_2sp(const ProblemSpec& spec, const Matrix& support, std::span<const double> probs,
                           const FullSolveBudget& budget) {
    check_scenarios(spec, support);
    check_probs(support, probs);
    if (support.rows() > budget.max_support)
        throw BudgetError("full 2SP over " + std::to_string(support.rows()) + " scenarios exceeds the budget of " +
                          std::to_string(budget.max_support));
    const auto model = detail::make_model(spec);
    const SaaProgram prog = saa_program(*model, support, probs);
    if (prog.builder.num_binaries() > budget.max_binaries)
        throw BudgetError("full 2SP has " + std::to_string(prog.builder.num_binaries()) +
                          " binaries, budget is " + std::to_string(budget.max_binaries));
    return solve_program(prog, "full 2SP");
}

double newsvendor_fractile(const NewsvendorParams& p) { return (p.q - p.c) / (p.q - p.r); }

double newsvendor_closed_form(const NewsvendorParams& params, const Matrix& support, std::span<const double> probs) {
    if (support.cols() != 1) throw InputError("newsvendor demand is one-dimensional");
    check_probs(support, probs);
    std::vector<std::size_t> order(support.rows());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return support(a, 0) < support(b, 0); });
    const double tau = newsvendor_fractile(params);
    double cdf = 0.0;
    double quantile = support(order.back(), 0);
    for (std::size_t idx : order) {
        cdf += probs[idx];
        if (cdf >= tau - 1e-12) {
            quantile = support(idx, 0);
            break;
        }
    }
    return std::clamp(quantile, 0.0, params.u);
}

}  // namespace csg::twostage
