// Two-phase primal simplex on a dense tableau.
//
// Every variable is shifted or split to x' >= 0, rows are flipped to a
// nonnegative right-hand side, and each row receives a slack or an
// artificial so the initial basis is the identity. Pricing is Dantzig's
// rule; after a run of degenerate pivots it falls back to Bland's rule until
// the objective strictly improves, which rules out cycling.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "csg/core/errors.hpp"
#include "csg/simd/kernels.hpp"
#include "csg/solver/solver.hpp"

namespace csg::solver {
namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kDropTol = 1e-13;
constexpr std::size_t kDegenerateRun = 30;
constexpr std::size_t kNone = static_cast<std::size_t>(-1);

struct VarMap {
    double offset = 0.0;
    std::size_t pos = kNone;  // column with coefficient +sign
    double sign = 1.0;
    std::size_t neg = kNone;  // second column of a free variable
};

struct StdRow {
    std::vector<std::pair<std::size_t, double>> terms;
    Sense sense;
    double rhs;
};

class Tableau {
public:
    Tableau(std::size_t rows, std::size_t cols)
        : m_(rows), n_(cols), w_(cols + 1), a_(rows * (cols + 1), 0.0), d1_(cols + 1, 0.0),
          d2_(cols + 1, 0.0), basis_(rows, kNone), active_(rows, 1), barred_(cols, 0) {}

    double* row(std::size_t i) { return a_.data() + i * w_; }
    double& rhs(std::size_t i) { return a_[i * w_ + n_]; }

    std::vector<double>& phase1_costs() { return d1_; }
    std::vector<double>& phase2_costs() { return d2_; }
    std::vector<std::size_t>& basis() { return basis_; }
    std::vector<char>& barred() { return barred_; }
    std::vector<char>& active() { return active_; }
    std::size_t rows() const { return m_; }
    std::size_t cols() const { return n_; }

    void pivot(std::size_t r, std::size_t q, bool update_phase1) {
        const auto& k = simd::kernels();
        double* pr = row(r);
        const double inv = 1.0 / pr[q];
        k.scale(inv, pr, w_);
        pr[q] = 1.0;

        nz_.clear();
        for (std::size_t j = 0; j < w_; ++j)
            if (pr[j] != 0.0) nz_.push_back(j);
        const bool dense = nz_.size() * 2 > w_;

        auto eliminate = [&](double* target) {
            const double f = target[q];
            if (f == 0.0) return;
            if (dense) {
                k.axpy(-f, pr, target, w_);
            } else {
                for (std::size_t j : nz_) target[j] = target[j] + (-f) * pr[j];
            }
            for (std::size_t j : nz_)
                if (std::abs(target[j]) < kDropTol) target[j] = 0.0;
            target[q] = 0.0;
        };

        for (std::size_t i = 0; i < m_; ++i) {
            if (i == r || !active_[i]) continue;
            eliminate(row(i));
        }
        if (update_phase1) eliminate(d1_.data());
        eliminate(d2_.data());
        basis_[r] = q;
    }

private:
    std::size_t m_, n_, w_;
    std::vector<double> a_;
    std::vector<double> d1_, d2_;
    std::vector<std::size_t> basis_;
    std::vector<char> active_;
    std::vector<char> barred_;
    std::vector<std::size_t> nz_;
};

enum class PhaseResult { Optimal, Unbounded };

class SimplexRun {
public:
    SimplexRun(Tableau& t, std::size_t iteration_cap) : t_(t), cap_(iteration_cap) {}

    PhaseResult run(bool phase1) {
        std::vector<double>& d = phase1 ? t_.phase1_costs() : t_.phase2_costs();
        const std::size_t n = t_.cols();
        bool bland = false;
        std::size_t degenerate = 0;
        // Phase one: columns whose improving direction has only sub-tolerance
        // pivots are set aside until the next pivot changes the prices.
        std::vector<char> skipped(n, 0);
        bool any_skipped = false;
        while (true) {
            if (phase1 && -d[n] <= 0.0) return PhaseResult::Optimal;
            std::size_t q = kNone;
            double best = -kCostTol;
            for (std::size_t j = 0; j < n; ++j) {
                if (t_.barred()[j] || skipped[j] || d[j] >= best) continue;
                q = j;
                if (bland) break;
                best = d[j];
            }
            if (q == kNone) return PhaseResult::Optimal;

            std::size_t r = kNone;
            double best_ratio = 0.0;
            double best_piv = 0.0;
            for (std::size_t i = 0; i < t_.rows(); ++i) {
                if (!t_.active()[i]) continue;
                const double aiq = t_.row(i)[q];
                if (aiq <= kPivotTol) continue;
                const double ratio = std::max(t_.rhs(i), 0.0) / aiq;
                if (r == kNone) {
                    r = i, best_ratio = ratio, best_piv = aiq;
                    continue;
                }
                const double tie = 1e-12 * std::max(1.0, best_ratio);
                if (ratio < best_ratio - tie) {
                    r = i, best_ratio = ratio, best_piv = aiq;
                } else if (ratio <= best_ratio + tie) {
                    const bool prefer = bland ? t_.basis()[i] < t_.basis()[r]
                                              : (aiq > best_piv ||
                                                 (aiq == best_piv && t_.basis()[i] < t_.basis()[r]));
                    if (prefer) r = i, best_ratio = std::min(best_ratio, ratio), best_piv = aiq;
                }
            }
            if (r == kNone) {
                if (!phase1) return PhaseResult::Unbounded;
                skipped[q] = 1;
                any_skipped = true;
                continue;
            }
            if (++iterations_ > cap_)
                throw SolverError("simplex iteration limit reached (" + std::to_string(cap_) + ")");

            if (best_ratio == 0.0) {
                if (++degenerate >= kDegenerateRun) bland = true;
            } else {
                degenerate = 0;
                bland = false;
            }
            if (any_skipped) {
                std::fill(skipped.begin(), skipped.end(), 0);
                any_skipped = false;
            }
            const std::size_t leaving = t_.basis()[r];
            t_.pivot(r, q, phase1);
            if (phase1 && leaving >= first_artificial_) t_.barred()[leaving] = 1;
            for (std::size_t i = 0; i < t_.rows(); ++i)
                if (t_.active()[i] && t_.rhs(i) < 0.0 && t_.rhs(i) > -1e-11) t_.rhs(i) = 0.0;
        }
    }

    void set_first_artificial(std::size_t j) { first_artificial_ = j; }

private:
    Tableau& t_;
    std::size_t cap_;
    std::size_t iterations_ = 0;
    std::size_t first_artificial_ = kNone;
};

}  // namespace

SolveResult solve_lp_with_bounds(const LinearProgram& lp, const std::vector<Bounds>& bounds,
                                 const SolverOptions& options) {
    if (bounds.size() != lp.num_vars) throw InputError("bounds override has wrong length");
    for (const Bounds& b : bounds)
        if (std::isnan(b.lower) || std::isnan(b.upper)) throw InputError("NaN bound");

    SolveResult infeasible{Status::Infeasible, 0.0, {}};
    for (const Bounds& b : bounds)
        if (b.lower > b.upper) return infeasible;

    // Variable substitution.
    std::vector<VarMap> vars(lp.num_vars);
    std::size_t ns = 0;
    std::vector<StdRow> rows;
    for (std::size_t j = 0; j < lp.num_vars; ++j) {
        const Bounds& b = bounds[j];
        VarMap& v = vars[j];
        const bool lo = std::isfinite(b.lower);
        const bool hi = std::isfinite(b.upper);
        if (lo && hi && b.lower == b.upper) {
            v.offset = b.lower;
        } else if (lo) {
            v.offset = b.lower;
            v.pos = ns++;
            if (hi) rows.push_back({{{v.pos, 1.0}}, Sense::LessEqual, b.upper - b.lower});
        } else if (hi) {
            v.offset = b.upper;
            v.pos = ns++;
            v.sign = -1.0;
        } else {
            v.pos = ns++;
            v.neg = ns++;
        }
    }

    for (const Constraint& c : lp.constraints) {
        StdRow row{{}, c.sense, c.rhs};
        for (std::size_t j = 0; j < lp.num_vars; ++j) {
            const double a = c.coefficients[j];
            if (a == 0.0) continue;
            const VarMap& v = vars[j];
            row.rhs -= a * v.offset;
            if (v.pos != kNone) row.terms.emplace_back(v.pos, a * v.sign);
            if (v.neg != kNone) row.terms.emplace_back(v.neg, -a);
        }
        if (row.terms.empty()) {
            const double tol = 1e-9 * std::max(1.0, std::abs(c.rhs));
            const bool ok = (c.sense == Sense::LessEqual && row.rhs >= -tol) ||
                            (c.sense == Sense::GreaterEqual && row.rhs <= tol) ||
                            (c.sense == Sense::Equal && std::abs(row.rhs) <= tol);
            if (!ok) return infeasible;
            continue;
        }
        if (row.rhs < 0.0) {
            row.rhs = -row.rhs;
            for (auto& term : row.terms) term.second = -term.second;
            if (row.sense == Sense::LessEqual)
                row.sense = Sense::GreaterEqual;
            else if (row.sense == Sense::GreaterEqual)
                row.sense = Sense::LessEqual;
        }
        rows.push_back(std::move(row));
    }

    const std::size_t m = rows.size();
    std::size_t n_slack = 0, n_art = 0;
    for (const StdRow& row : rows) {
        if (row.sense != Sense::Equal) ++n_slack;
        if (row.sense != Sense::LessEqual) ++n_art;
    }
    const std::size_t first_art = ns + n_slack;
    const std::size_t n = first_art + n_art;
    Tableau t(m, n);

    std::size_t next_slack = ns, next_art = first_art;
    double rhs_scale = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
        const StdRow& src = rows[i];
        double* r = t.row(i);
        for (const auto& [col, val] : src.terms) r[col] += val;
        t.rhs(i) = src.rhs;
        rhs_scale = std::max(rhs_scale, src.rhs);
        switch (src.sense) {
            case Sense::LessEqual:
                r[next_slack] = 1.0;
                t.basis()[i] = next_slack++;
                break;
            case Sense::GreaterEqual:
                r[next_slack++] = -1.0;
                r[next_art] = 1.0;
                t.basis()[i] = next_art++;
                break;
            case Sense::Equal:
                r[next_art] = 1.0;
                t.basis()[i] = next_art++;
                break;
        }
    }

    // Phase-two costs over the shifted variables; the constant is re-added
    // when the objective is recomputed from the primal point.
    std::vector<double>& d2 = t.phase2_costs();
    for (std::size_t j = 0; j < lp.num_vars; ++j) {
        const VarMap& v = vars[j];
        if (v.pos != kNone) d2[v.pos] += lp.objective[j] * v.sign;
        if (v.neg != kNone) d2[v.neg] -= lp.objective[j];
    }

    const std::size_t cap = options.max_iterations != 0 ? options.max_iterations : 50 * (m + n) + 10000;
    SimplexRun runner(t, cap);
    runner.set_first_artificial(first_art);

    if (n_art > 0) {
        std::vector<double>& d1 = t.phase1_costs();
        for (std::size_t i = 0; i < m; ++i) {
            if (t.basis()[i] < first_art) continue;
            const double* r = t.row(i);
            for (std::size_t j = 0; j < first_art; ++j) d1[j] -= r[j];
            d1[n] -= r[n];
        }
        runner.run(true);
        const double infeasibility = -d1[n];
        if (infeasibility > 1e-9 * rhs_scale) return infeasible;

        for (std::size_t i = 0; i < m; ++i) {
            if (t.basis()[i] < first_art) continue;
            const double* r = t.row(i);
            std::size_t q = kNone;
            double mag = kPivotTol;
            for (std::size_t j = 0; j < first_art; ++j) {
                if (std::abs(r[j]) > mag) {
                    mag = std::abs(r[j]);
                    q = j;
                }
            }
            if (q == kNone) {
                t.active()[i] = 0;  // redundant row
            } else {
                t.rhs(i) = 0.0;
                t.pivot(i, q, false);
            }
        }
        for (std::size_t j = first_art; j < n; ++j) t.barred()[j] = 1;
        for (std::size_t i = 0; i < m; ++i)
            if (t.active()[i] && t.rhs(i) < 0.0) t.rhs(i) = 0.0;
    }

    if (runner.run(false) == PhaseResult::Unbounded) return {Status::Unbounded, 0.0, {}};

    std::vector<double> xs(ns, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        if (!t.active()[i]) continue;
        const std::size_t b = t.basis()[i];
        if (b < ns) xs[b] = std::max(t.rhs(i), 0.0);
    }
    SolveResult result{Status::Optimal, 0.0, std::vector<double>(lp.num_vars, 0.0)};
    for (std::size_t j = 0; j < lp.num_vars; ++j) {
        const VarMap& v = vars[j];
        double x = v.offset;
        if (v.pos != kNone) x += v.sign * xs[v.pos];
        if (v.neg != kNone) x -= xs[v.neg];
        result.primal[j] = std::clamp(x, bounds[j].lower, bounds[j].upper);
    }
    for (std::size_t j = 0; j < lp.num_vars; ++j) result.objective += lp.objective[j] * result.primal[j];
    return result;
}

SolveResult solve_lp(const LinearProgram& lp, const SolverOptions& options) {
    lp.validate();
    return solve_lp_with_bounds(lp, lp.bounds, options);
}

}  // namespace csg::solver
