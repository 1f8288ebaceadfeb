#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "csg/core/errors.hpp"
#include "csg/core/format.hpp"
#include "csg/solver/solver.hpp"

namespace csg::solver {

void LinearProgram::validate() const {
    if (objective.size() != num_vars) throw InputError("objective length does not match num_vars");
    if (bounds.size() != num_vars) throw InputError("bounds length does not match num_vars");
    for (double c : objective)
        if (!std::isfinite(c)) throw InputError("non-finite objective coefficient");
    for (std::size_t j = 0; j < num_vars; ++j) {
        const Bounds& b = bounds[j];
        if (std::isnan(b.lower) || std::isnan(b.upper) || b.lower > b.upper || b.lower == kInfinity ||
            b.upper == -kInfinity)
            throw InputError("invalid bounds on variable x" + std::to_string(j));
    }
    for (std::size_t i = 0; i < constraints.size(); ++i) {
        const Constraint& row = constraints[i];
        if (row.coefficients.size() != num_vars)
            throw InputError("constraint " + std::to_string(i) + " has wrong length");
        if (!std::isfinite(row.rhs)) throw InputError("non-finite rhs in constraint " + std::to_string(i));
        for (double a : row.coefficients)
            if (!std::isfinite(a)) throw InputError("non-finite coefficient in constraint " + std::to_string(i));
    }
}

void MixedBinaryProgram::validate() const {
    base.validate();
    for (std::size_t j : binary_indices) {
        if (j >= base.num_vars) throw InputError("binary index out of range");
        const Bounds& b = base.bounds[j];
        if (b.lower < 0.0 || b.upper > 1.0) throw InputError("binary variable bounds exceed [0,1]");
    }
}

double max_violation(const LinearProgram& lp, const std::vector<double>& x) {
    double worst = 0.0;
    for (std::size_t j = 0; j < lp.num_vars; ++j) {
        worst = std::max(worst, lp.bounds[j].lower - x[j]);
        worst = std::max(worst, x[j] - lp.bounds[j].upper);
    }
    for (const Constraint& row : lp.constraints) {
        double lhs = 0.0;
        for (std::size_t j = 0; j < lp.num_vars; ++j) lhs += row.coefficients[j] * x[j];
        const double diff = lhs - row.rhs;
        switch (row.sense) {
            case Sense::LessEqual: worst = std::max(worst, diff); break;
            case Sense::GreaterEqual: worst = std::max(worst, -diff); break;
            case Sense::Equal: worst = std::max(worst, std::abs(diff)); break;
        }
    }
    return worst;
}

namespace {

void write_terms(std::ostringstream& out, const std::vector<double>& coefs) {
    bool first = true;
    for (std::size_t j = 0; j < coefs.size(); ++j) {
        if (coefs[j] == 0.0) continue;
        if (!first) out << " + ";
        out << format_double(coefs[j]) << "*x" << j;
        first = false;
    }
    if (first) out << "0";
}

}  // namespace

std::string dump_lp(const LinearProgram& lp, const std::vector<std::size_t>& binaries) {
    std::ostringstream out;
    out << "minimize ";
    write_terms(out, lp.objective);
    out << "\nsubject to\n";
    for (const Constraint& row : lp.constraints) {
        write_terms(out, row.coefficients);
        switch (row.sense) {
            case Sense::LessEqual: out << " <= "; break;
            case Sense::Equal: out << " = "; break;
            case Sense::GreaterEqual: out << " >= "; break;
        }
        out << format_double(row.rhs) << '\n';
    }
    out << "bounds\n";
    for (std::size_t j = 0; j < lp.num_vars; ++j)
        out << format_double(lp.bounds[j].lower) << " <= x" << j << " <= " << format_double(lp.bounds[j].upper)
            << '\n';
    if (!binaries.empty()) {
        out << "binary\n";
        for (std::size_t j : binaries) out << 'x' << j << '\n';
    }
    return out.str();
}

std::string status_name(Status status) {
    switch (status) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::Unbounded: return "unbounded";
    }
    return "unknown";
}

}  // namespace csg::solver
