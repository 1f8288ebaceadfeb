#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace csg::solver {

/// Infinite bounds use this sentinel, never a large finite number.
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Sense { LessEqual, Equal, GreaterEqual };

struct Constraint {
    std::vector<double> coefficients;
    Sense sense = Sense::LessEqual;
    double rhs = 0.0;
};

struct Bounds {
    double lower = 0.0;
    double upper = kInfinity;
};

/// minimize objective . x subject to constraints and per-variable bounds.
struct LinearProgram {
    std::size_t num_vars = 0;
    std::vector<double> objective;
    std::vector<Constraint> constraints;
    std::vector<Bounds> bounds;

    /// Throws InputError on shape mismatch, non-finite coefficients or
    /// crossed bounds.
    void validate() const;
};

struct MixedBinaryProgram {
    LinearProgram base;
    std::vector<std::size_t> binary_indices;

    void validate() const;
};

enum class Status { Optimal, Infeasible, Unbounded };

struct SolveResult {
    Status status = Status::Infeasible;
    /// objective . primal, recomputed from the returned point.
    double objective = 0.0;
    std::vector<double> primal;
};

struct SolverOptions {
    /// 0 selects a size-dependent default.
    std::size_t max_iterations = 0;
    std::size_t max_nodes = 1'000'000;
};

SolveResult solve_lp(const LinearProgram& lp, const SolverOptions& options = {});

/// Same as solve_lp with the variable bounds replaced by `bounds`.
SolveResult solve_lp_with_bounds(const LinearProgram& lp, const std::vector<Bounds>& bounds,
                                 const SolverOptions& options = {});

SolveResult solve_mbp(const MixedBinaryProgram& mbp, const SolverOptions& options = {});

/// Largest violation of any row or bound at `x`.
double max_violation(const LinearProgram& lp, const std::vector<double>& x);

/// Human-readable dump: objective, one constraint per line as `coef*xN`
/// terms, then bounds and binaries.
std::string dump_lp(const LinearProgram& lp, const std::vector<std::size_t>& binaries = {});

std::string status_name(Status status);

}  // namespace csg::solver
