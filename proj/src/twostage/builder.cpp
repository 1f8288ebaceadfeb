#include "csg/twostage/builder.hpp"

#include <algorithm>

#include "csg/core/errors.hpp"

namespace csg::twostage {

std::size_t ProgramBuilder::add_var(double lower, double upper, double cost, bool binary) {
    const std::size_t idx = costs_.size();
    costs_.push_back(cost);
    bounds_.push_back({lower, upper});
    if (binary) binaries_.push_back(idx);
    return idx;
}

void ProgramBuilder::add_row(Terms terms, solver::Sense sense, double rhs) {
    for (const auto& term : terms)
        if (term.first >= costs_.size()) throw InputError("row references an unknown variable");
    rows_.push_back({std::move(terms), sense, rhs});
}

void ProgramBuilder::clear_costs() { std::fill(costs_.begin(), costs_.end(), 0.0); }

solver::MixedBinaryProgram ProgramBuilder::build() const {
    solver::MixedBinaryProgram mbp;
    solver::LinearProgram& lp = mbp.base;
    lp.num_vars = costs_.size();
    lp.objective = costs_;
    lp.bounds = bounds_;
    lp.constraints.reserve(rows_.size());
    for (const Row& row : rows_) {
        solver::Constraint c{std::vector<double>(lp.num_vars, 0.0), row.sense, row.rhs};
        for (const auto& [var, coef] : row.terms) c.coefficients[var] += coef;
        lp.constraints.push_back(std::move(c));
    }
    mbp.binary_indices = binaries_;
    return mbp;
}

}  // namespace csg::twostage
