#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "csg/solver/solver.hpp"

namespace csg::twostage {

/// Accumulates variables, sparse rows and costs, then emits a dense program.
class ProgramBuilder {
public:
    using Terms = std::vector<std::pair<std::size_t, double>>;

    std::size_t add_var(double lower, double upper, double cost = 0.0, bool binary = false);
    void add_cost(std::size_t var, double cost) { costs_[var] += cost; }
    void add_row(Terms terms, solver::Sense sense, double rhs);
    void set_bounds(std::size_t var, double lower, double upper) { bounds_[var] = {lower, upper}; }

    std::size_t num_vars() const noexcept { return costs_.size(); }
    std::size_t num_rows() const noexcept { return rows_.size(); }
    std::size_t num_binaries() const noexcept { return binaries_.size(); }
    const std::vector<double>& costs() const noexcept { return costs_; }
    void clear_costs();

    solver::MixedBinaryProgram build() const;

private:
    struct Row {
        Terms terms;
        solver::Sense sense;
        double rhs;
    };
    std::vector<double> costs_;
    std::vector<solver::Bounds> bounds_;
    std::vector<std::size_t> binaries_;
    std::vector<Row> rows_;
};

}  // namespace csg::twostage
