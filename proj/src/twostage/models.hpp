#pragma once

#include <memory>
#include <span>
#include <vector>

#include "csg/twostage/builder.hpp"
#include "csg/twostage/problem.hpp"

namespace csg::twostage::detail {

/// Per-problem formulation pieces shared by the extensive form, the
/// optimistic search program and the single-scenario subproblem.
class Model {
public:
    virtual ~Model() = default;
    /// Adds first-stage variables in FirstStage layout order.
    virtual std::vector<std::size_t> add_first_stage_vars(ProgramBuilder& b) const = 0;
    virtual void add_first_stage_rows(ProgramBuilder& b, const std::vector<std::size_t>& y) const = 0;
    virtual void add_first_stage_cost(ProgramBuilder& b, const std::vector<std::size_t>& y) const = 0;
    /// Adds one scenario's recourse block with every cost scaled by `weight`.
    virtual void add_recourse(ProgramBuilder& b, const std::vector<std::size_t>& y, std::span<const double> omega,
                              double weight) const = 0;
    virtual double first_stage_cost(const FirstStage& y) const = 0;
};

std::unique_ptr<Model> make_model(const ProblemSpec& spec);

}  // namespace csg::twostage::detail
