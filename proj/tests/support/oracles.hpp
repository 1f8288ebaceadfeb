#pragma once

// Independent reference computations used by unit and acceptance tests.
// Nothing here calls into the library's solver or network code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "csg/solver/solver.hpp"

namespace oracle {

using csg::solver::LinearProgram;
using csg::solver::MixedBinaryProgram;
using csg::solver::Sense;

/// Solves a small dense square system by Gaussian elimination with partial
/// pivoting; nullopt when (numerically) singular.
inline std::optional<std::vector<double>> solve_square(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
        if (std::abs(a[p][c]) < 1e-10) return std::nullopt;
        std::swap(a[p], a[c]);
        std::swap(b[p], b[c]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
        x[i] = s / a[i][i];
    }
    return x;
}

inline bool feasible(const LinearProgram& lp, const std::vector<double>& x, double tol) {
    for (std::size_t j = 0; j < lp.num_vars; ++j)
        if (x[j] < lp.bounds[j].lower - tol || x[j] > lp.bounds[j].upper + tol) return false;
    for (const auto& row : lp.constraints) {
        double lhs = 0.0;
        for (std::size_t j = 0; j < lp.num_vars; ++j) lhs += row.coefficients[j] * x[j];
        if (row.sense == Sense::LessEqual && lhs > row.rhs + tol) return false;
        if (row.sense == Sense::GreaterEqual && lhs < row.rhs - tol) return false;
        if (row.sense == Sense::Equal && std::abs(lhs - row.rhs) > tol) return false;
    }
    return true;
}

/// Minimum objective over all basic points of a box-bounded LP: choose a
/// subset of rows to be tight (all equalities included), pin every other
/// variable outside the solved block at one of its bounds, and solve. Returns
/// nullopt when no basic point is feasible. Requires finite bounds.
inline std::optional<double> vertex_enumeration(const LinearProgram& lp, double tol = 1e-7) {
    const std::size_t n = lp.num_vars;
    const std::size_t m = lp.constraints.size();
    std::optional<double> best;
    std::vector<std::size_t> tight, free_vars;
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
        tight.clear();
        bool ok = true;
        for (std::size_t i = 0; i < m; ++i) {
            const auto& row = lp.constraints[i];
            const bool zero = std::all_of(row.coefficients.begin(), row.coefficients.end(),
                                          [](double a) { return a == 0.0; });
            const bool in = (mask >> i) & 1u;
            // All-zero rows are checked for feasibility only. Equality rows
            // left out of the tight set are still enforced by the final
            // feasibility check, so redundant equalities are allowed.
            if (zero && in) ok = false;
            if (in) tight.push_back(i);
        }
        if (!ok || tight.size() > n) continue;
        const std::size_t k = tight.size();
        // Choose which k variables are solved for; the rest sit at bounds.
        for (std::uint32_t vmask = 0; vmask < (1u << n); ++vmask) {
            if (static_cast<std::size_t>(__builtin_popcount(vmask)) != k) continue;
            free_vars.clear();
            for (std::size_t j = 0; j < n; ++j)
                if ((vmask >> j) & 1u) free_vars.push_back(j);
            const std::size_t pinned = n - k;
            for (std::uint32_t bmask = 0; bmask < (1u << pinned); ++bmask) {
                std::vector<double> x(n, 0.0);
                std::size_t bit = 0;
                for (std::size_t j = 0; j < n; ++j) {
                    if ((vmask >> j) & 1u) continue;
                    x[j] = ((bmask >> bit) & 1u) ? lp.bounds[j].upper : lp.bounds[j].lower;
                    ++bit;
                }
                if (k > 0) {
                    std::vector<std::vector<double>> a(k, std::vector<double>(k));
                    std::vector<double> b(k);
                    for (std::size_t r = 0; r < k; ++r) {
                        const auto& row = lp.constraints[tight[r]];
                        b[r] = row.rhs;
                        for (std::size_t j = 0; j < n; ++j)
                            if (!((vmask >> j) & 1u)) b[r] -= row.coefficients[j] * x[j];
                        for (std::size_t c = 0; c < k; ++c) a[r][c] = row.coefficients[free_vars[c]];
                    }
                    auto sol = solve_square(a, b);
                    if (!sol) continue;
                    for (std::size_t c = 0; c < k; ++c) x[free_vars[c]] = (*sol)[c];
                }
                if (!feasible(lp, x, tol)) continue;
                double obj = 0.0;
                for (std::size_t j = 0; j < n; ++j) obj += lp.objective[j] * x[j];
                if (!best || obj < *best) best = obj;
            }
        }
    }
    return best;
}

/// Substitutes fixed variables (lower == upper) into the rows.
inline LinearProgram drop_fixed(const LinearProgram& lp, double& constant) {
    constant = 0.0;
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < lp.num_vars; ++j) {
        if (lp.bounds[j].lower == lp.bounds[j].upper)
            constant += lp.objective[j] * lp.bounds[j].lower;
        else
            keep.push_back(j);
    }
    LinearProgram out;
    out.num_vars = keep.size();
    for (std::size_t j : keep) {
        out.objective.push_back(lp.objective[j]);
        out.bounds.push_back(lp.bounds[j]);
    }
    for (const auto& row : lp.constraints) {
        csg::solver::Constraint r{{}, row.sense, row.rhs};
        for (std::size_t j = 0; j < lp.num_vars; ++j)
            if (lp.bounds[j].lower == lp.bounds[j].upper) r.rhs -= row.coefficients[j] * lp.bounds[j].lower;
        for (std::size_t j : keep) r.coefficients.push_back(row.coefficients[j]);
        out.constraints.push_back(std::move(r));
    }
    return out;
}

/// Enumerates every 0/1 assignment of the binaries and solves the remaining
/// continuous LP by vertex enumeration.
inline std::optional<double> binary_enumeration(const MixedBinaryProgram& mbp) {
    const auto& bins = mbp.binary_indices;
    std::optional<double> best;
    for (std::uint32_t mask = 0; mask < (1u << bins.size()); ++mask) {
        LinearProgram fixed = mbp.base;
        for (std::size_t b = 0; b < bins.size(); ++b) {
            const double v = ((mask >> b) & 1u) ? 1.0 : 0.0;
            if (v < fixed.bounds[bins[b]].lower || v > fixed.bounds[bins[b]].upper) goto next;
            fixed.bounds[bins[b]] = {v, v};
        }
        {
            double constant = 0.0;
            const LinearProgram reduced = drop_fixed(fixed, constant);
            std::optional<double> value;
            if (reduced.num_vars == 0) {
                std::vector<double> none;
                if (feasible(reduced, none, 1e-7)) value = 0.0;
            } else {
                value = vertex_enumeration(reduced);
            }
            if (value && (!best || *value + constant < *best)) best = *value + constant;
        }
    next:;
    }
    return best;
}

struct RandomLpOptions {
    std::size_t max_vars = 8;
    std::size_t max_rows = 8;
};

/// Box-bounded random LP; about one in five instances has a row generated
/// without regard to feasibility.
inline LinearProgram random_lp(std::mt19937_64& rng, RandomLpOptions opt = {}) {
    std::uniform_int_distribution<std::size_t> nv(1, opt.max_vars), nr(1, opt.max_rows);
    std::uniform_real_distribution<double> coef(-3.0, 3.0), lo(-4.0, 0.0), width(0.5, 6.0), u01(0.0, 1.0);
    LinearProgram lp;
    lp.num_vars = nv(rng);
    const std::size_t rows = nr(rng);
    std::vector<double> anchor(lp.num_vars);
    for (std::size_t j = 0; j < lp.num_vars; ++j) {
        const double l = std::round(lo(rng) * 4.0) / 4.0;
        const double u = l + std::round(width(rng) * 4.0) / 4.0;
        lp.bounds.push_back({l, u});
        anchor[j] = l + u01(rng) * (u - l);
        lp.objective.push_back(std::round(coef(rng) * 8.0) / 8.0);
    }
    for (std::size_t i = 0; i < rows; ++i) {
        csg::solver::Constraint row;
        double at_anchor = 0.0;
        for (std::size_t j = 0; j < lp.num_vars; ++j) {
            const double a = u01(rng) < 0.2 ? 0.0 : std::round(coef(rng) * 4.0) / 4.0;
            row.coefficients.push_back(a);
            at_anchor += a * anchor[j];
        }
        const double pick = u01(rng);
        row.sense = pick < 0.45 ? Sense::LessEqual : (pick < 0.9 ? Sense::GreaterEqual : Sense::Equal);
        const bool honest = u01(rng) > 0.2;
        const double slack = u01(rng) * 2.0;
        if (row.sense == Sense::Equal)
            row.rhs = honest ? at_anchor : at_anchor + 1.0 + slack;
        else if (row.sense == Sense::LessEqual)
            row.rhs = honest ? at_anchor + slack : at_anchor - 3.0 - slack;
        else
            row.rhs = honest ? at_anchor - slack : at_anchor + 3.0 + slack;
        lp.constraints.push_back(std::move(row));
    }
    return lp;
}

/// Random mixed-binary program: up to `max_binaries` binaries plus up to
/// three bounded continuous variables.
inline MixedBinaryProgram random_mbp(std::mt19937_64& rng, std::size_t max_binaries = 10) {
    std::uniform_int_distribution<std::size_t> nb(1, max_binaries), nc(0, 3), nr(1, 6);
    std::uniform_real_distribution<double> coef(-3.0, 3.0), u01(0.0, 1.0);
    MixedBinaryProgram mbp;
    const std::size_t b = nb(rng), c = nc(rng), rows = nr(rng);
    LinearProgram& lp = mbp.base;
    lp.num_vars = b + c;
    std::vector<double> anchor(lp.num_vars);
    for (std::size_t j = 0; j < lp.num_vars; ++j) {
        if (j < b) {
            lp.bounds.push_back({0.0, 1.0});
            mbp.binary_indices.push_back(j);
            anchor[j] = u01(rng) < 0.5 ? 0.0 : 1.0;
        } else {
            lp.bounds.push_back({-1.0, 3.0});
            anchor[j] = -1.0 + 4.0 * u01(rng);
        }
        lp.objective.push_back(std::round(coef(rng) * 8.0) / 8.0);
    }
    for (std::size_t i = 0; i < rows; ++i) {
        csg::solver::Constraint row;
        double at_anchor = 0.0;
        for (std::size_t j = 0; j < lp.num_vars; ++j) {
            const double a = std::round(coef(rng) * 4.0) / 4.0;
            row.coefficients.push_back(a);
            at_anchor += a * anchor[j];
        }
        const bool le = u01(rng) < 0.5;
        row.sense = le ? Sense::LessEqual : Sense::GreaterEqual;
        const double slack = u01(rng) * 1.5;
        const bool honest = u01(rng) > 0.1;
        if (le)
            row.rhs = honest ? at_anchor + slack : at_anchor - 20.0;
        else
            row.rhs = honest ? at_anchor - slack : at_anchor + 20.0;
        lp.constraints.push_back(std::move(row));
    }
    return mbp;
}

}  // namespace oracle
