// Depth-first branch-and-bound over binary variables. Nodes carry only the
// bound vector; each node re-solves the relaxation from scratch.
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "csg/core/errors.hpp"
#include "csg/solver/solver.hpp"

namespace csg::solver {
namespace {

constexpr double kIntegralityTol = 1e-6;
constexpr double kPruneTol = 1e-9;

}  // namespace

SolveResult solve_mbp(const MixedBinaryProgram& mbp, const SolverOptions& options) {
    mbp.validate();
    const LinearProgram& lp = mbp.base;
    if (mbp.binary_indices.empty()) return solve_lp_with_bounds(lp, lp.bounds, options);

    std::vector<std::size_t> binaries = mbp.binary_indices;
    std::sort(binaries.begin(), binaries.end());
    binaries.erase(std::unique(binaries.begin(), binaries.end()), binaries.end());

    SolveResult incumbent{Status::Infeasible, kInfinity, {}};
    std::vector<std::vector<Bounds>> stack{lp.bounds};
    std::size_t nodes = 0;
    bool unbounded_relaxation = false;

    while (!stack.empty()) {
        std::vector<Bounds> bounds = std::move(stack.back());
        stack.pop_back();
        if (++nodes > options.max_nodes)
            throw SolverError("branch-and-bound node limit reached (" + std::to_string(options.max_nodes) + ")");

        SolveResult relax = solve_lp_with_bounds(lp, bounds, options);
        if (relax.status == Status::Infeasible) continue;
        if (relax.status == Status::Unbounded) {
            unbounded_relaxation = true;
            continue;
        }
        if (incumbent.status == Status::Optimal && relax.objective >= incumbent.objective - kPruneTol) continue;

        std::size_t branch = lp.num_vars;
        double best_frac = kIntegralityTol;
        for (std::size_t j : binaries) {
            const double v = relax.primal[j];
            const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
            if (frac > best_frac) {
                best_frac = frac;
                branch = j;
            }
        }

        if (branch == lp.num_vars) {
            // Integral leaf: pin binaries to their rounded values so the
            // returned point is exactly 0/1.
            for (std::size_t j : binaries) {
                const double r = std::round(relax.primal[j]);
                bounds[j] = {r, r};
            }
            SolveResult leaf = solve_lp_with_bounds(lp, bounds, options);
            if (leaf.status != Status::Optimal) continue;
            if (incumbent.status != Status::Optimal || leaf.objective < incumbent.objective - kPruneTol)
                incumbent = std::move(leaf);
            continue;
        }

        const double v = relax.primal[branch];
        std::vector<Bounds> down = bounds, up = bounds;
        down[branch].upper = 0.0;
        up[branch].lower = 1.0;
        if (v - std::floor(v) >= 0.5) {
            stack.push_back(std::move(down));
            stack.push_back(std::move(up));
        } else {
            stack.push_back(std::move(up));
            stack.push_back(std::move(down));
        }
    }

    if (incumbent.status != Status::Optimal && unbounded_relaxation) return {Status::Unbounded, 0.0, {}};
    if (incumbent.status != Status::Optimal) return {Status::Infeasible, 0.0, {}};
    return incumbent;
}

}  // namespace csg::solver
