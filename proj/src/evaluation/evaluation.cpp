#include "csg/evaluation/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <thread>

#include "csg/core/errors.hpp"
#include "csg/core/format.hpp"
#include "csg/solver/solver.hpp"

namespace csg::eval {

Prediction predict_and_solve(const training::TaskNet& net, const ProblemSpec& spec, std::span<const double> x) {
    Prediction p;
    p.scenarios = net.predict(x);
    p.first_stage = twostage::solve_zeta_saa(spec, p.scenarios).first_stage;
    return p;
}

FirstStage expected_value_from_support(const ProblemSpec& spec, const env::Support& support) {
    const auto mean = env::weighted_mean(support);
    return twostage::solve_zeta_saa(spec, Matrix(1, mean.size(), mean)).first_stage;
}

FirstStage expected_value_benchmark(const env::SyntheticEnv& env, const ProblemSpec& spec, std::span<const double> x) {
    return expected_value_from_support(spec, env::conditional_support(env, x));
}

std::vector<double> quantile_regression_benchmark(const env::JointSample& sample, double tau) {
    sample.validate();
    if (!(tau > 0.0 && tau < 1.0)) throw InputError("quantile level must lie in (0, 1)");
    if (sample.outcomes.cols() != 1) throw InputError("quantile regression needs a 1-D outcome");
    const std::size_t n = sample.size(), d = sample.contexts.cols(), nb = d + 1;
    if (n == 0) throw InputError("quantile regression needs data");

    // Variables: beta (free), u+ (n), u- (n).
    solver::LinearProgram lp;
    lp.num_vars = nb + 2 * n;
    lp.objective.assign(lp.num_vars, 0.0);
    lp.bounds.assign(lp.num_vars, {0.0, solver::kInfinity});
    for (std::size_t j = 0; j < nb; ++j) lp.bounds[j] = {-solver::kInfinity, solver::kInfinity};
    for (std::size_t i = 0; i < n; ++i) {
        lp.objective[nb + i] = tau;
        lp.objective[nb + n + i] = 1.0 - tau;
        solver::Constraint row{std::vector<double>(lp.num_vars, 0.0), solver::Sense::Equal, sample.outcomes(i, 0)};
        for (std::size_t j = 0; j < d; ++j) row.coefficients[j] = sample.contexts(i, j);
        row.coefficients[d] = 1.0;
        row.coefficients[nb + i] = 1.0;
        row.coefficients[nb + n + i] = -1.0;
        lp.constraints.push_back(std::move(row));
    }
    const auto res = solver::solve_lp(lp);
    if (res.status != solver::Status::Optimal)
        throw SolverError("quantile regression LP is " + solver::status_name(res.status));
    return {res.primal.begin(), res.primal.begin() + static_cast<std::ptrdiff_t>(nb)};
}

double pinball_loss(const env::JointSample& sample, std::span<const double> beta, double tau) {
    const std::size_t d = sample.contexts.cols();
    if (beta.size() != d + 1) throw InputError("coefficient vector has the wrong length");
    double total = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        double pred = beta[d];
        for (std::size_t j = 0; j < d; ++j) pred += beta[j] * sample.contexts(i, j);
        const double r = sample.outcomes(i, 0) - pred;
        total += r >= 0.0 ? tau * r : (tau - 1.0) * r;
    }
    return total;
}

FirstStage quantile_policy(const ProblemSpec& spec, std::span<const double> beta, std::span<const double> x) {
    if (spec.kind != twostage::ProblemKind::Newsvendor) throw InputError("the quantile policy is newsvendor-only");
    if (beta.size() != x.size() + 1) throw InputError("coefficient vector does not match the context");
    double y = beta[x.size()];
    for (std::size_t j = 0; j < x.size(); ++j) y += beta[j] * x[j];
    return {{std::clamp(y, 0.0, spec.newsvendor.u)}};
}

std::vector<Instance> make_instances(const env::SyntheticEnv& env, std::size_t n_eval, std::uint64_t seed) {
    std::vector<Instance> out;
    out.reserve(n_eval);
    for (std::size_t i = 0; i < n_eval; ++i) {
        Rng rng(derive_seed(seed, i));
        Instance inst;
        inst.context = env::sample_context(env, rng);
        inst.support = env::conditional_support(env, inst.context);
        out.push_back(std::move(inst));
    }
    return out;
}

double optimality_gap(double v_method, double v_2sp) {
    if (v_2sp == 0.0) return v_method == 0.0 ? 0.0 : std::copysign(INFINITY, v_method);
    return (v_method - v_2sp) / std::abs(v_2sp);
}

namespace {

using Clock = std::chrono::steady_clock;

double millis_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<EvalRecord> evaluate_instance(const ProblemSpec& spec, const Instance& inst, std::size_t index,
                                          const std::vector<Method>& methods, const EvalOptions& options) {
    const auto& pts = inst.support.points;
    const auto& probs = inst.support.probs;
    auto t0 = Clock::now();
    const auto full = twostage::solve_full_2sp(spec, pts, probs, options.budget);
    const double t_full = options.timing ? millis_since(t0) : 0.0;
    // Scored with the same evaluator as every method, so the oracle's gap is
    // exactly zero.
    const double v_2sp = twostage::evaluate_true(spec, full.first_stage, pts, probs);

    std::vector<EvalRecord> out;
    for (const auto& m : methods) {
        t0 = Clock::now();
        const FirstStage y = m.id == "oracle" ? full.first_stage : m.decide(inst);
        const double t_sur = options.timing ? millis_since(t0) : 0.0;
        const double v = m.id == "oracle" ? v_2sp : twostage::evaluate_true(spec, y, pts, probs);
        out.push_back({index, m.id, v, v_2sp, optimality_gap(v, v_2sp), t_sur, t_full});
    }
    return out;
}

}  // namespace

EvalResult evaluate_methods(const ProblemSpec& spec, const std::vector<Instance>& instances,
                            const std::vector<Method>& methods, const EvalOptions& options) {
    for (const auto& m : methods)
        if (m.id != "oracle" && !m.decide) throw InputError("method '" + m.id + "' has no decision rule");
    const std::size_t n = instances.size();
    std::vector<std::optional<std::vector<EvalRecord>>> rows(n);
    std::vector<std::string> errors(n);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr fatal;

    auto worker = [&] {
        for (std::size_t i = next++; i < n && !stop; i = next++) {
            try {
                rows[i] = evaluate_instance(spec, instances[i], i, methods, options);
            } catch (const SolverError& e) {
                errors[i] = e.what();
            } catch (const BudgetError&) {
                // Budgets refuse the whole evaluation rather than thinning it.
                if (!stop.exchange(true)) fatal = std::current_exception();
            } catch (...) {
                if (!stop.exchange(true)) fatal = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::min(std::max<std::size_t>(options.jobs, 1), std::max<std::size_t>(n, 1));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (fatal) std::rethrow_exception(fatal);

    EvalResult result;
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i]) {
            result.records.insert(result.records.end(), rows[i]->begin(), rows[i]->end());
        } else {
            result.failures.push_back("instance " + std::to_string(i) + ": " + errors[i]);
        }
    }
    return result;
}

EvalResult evaluate_methods(const env::SyntheticEnv& env, const ProblemSpec& spec, const std::vector<Method>& methods,
                            std::size_t n_eval, std::uint64_t seed, const EvalOptions& options) {
    return evaluate_methods(spec, make_instances(env, n_eval, seed), methods, options);
}

std::vector<std::pair<double, double>> gap_cdf(const std::vector<EvalRecord>& records, const std::string& method) {
    std::vector<double> gaps;
    for (const auto& r : records)
        if (r.method == method) gaps.push_back(r.gap);
    std::sort(gaps.begin(), gaps.end());
    std::vector<std::pair<double, double>> cdf;
    const double n = static_cast<double>(gaps.size());
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        if (i + 1 < gaps.size() && gaps[i + 1] == gaps[i]) continue;
        cdf.emplace_back(gaps[i], static_cast<double>(i + 1) / n);
    }
    return cdf;
}

std::vector<std::string> method_order(const std::vector<EvalRecord>& records) {
    std::vector<std::string> order;
    for (const auto& r : records)
        if (std::find(order.begin(), order.end(), r.method) == order.end()) order.push_back(r.method);
    return order;
}

std::map<std::string, double> win_table(const std::vector<EvalRecord>& records) {
    std::map<std::string, double> wins;
    std::map<std::size_t, std::vector<const EvalRecord*>> by_instance;
    for (const auto& r : records) {
        wins.emplace(r.method, 0.0);
        by_instance[r.instance].push_back(&r);
    }
    if (by_instance.empty()) return wins;
    for (const auto& [inst, recs] : by_instance) {
        double best = INFINITY;
        for (const auto* r : recs) best = std::min(best, r->v_method);
        const double tol = 1e-9 * std::max(1.0, std::abs(best));
        std::vector<const EvalRecord*> winners;
        for (const auto* r : recs)
            if (r->v_method <= best + tol) winners.push_back(r);
        for (const auto* r : winners) wins[r->method] += 1.0 / static_cast<double>(winners.size());
    }
    for (auto& [m, w] : wins) w /= static_cast<double>(by_instance.size());
    return wins;
}

double median(std::vector<double> values) {
    if (values.empty()) throw InputError("median of an empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<MethodSummary> summarize(const std::vector<EvalRecord>& records) {
    std::vector<MethodSummary> out;
    for (const auto& m : method_order(records)) {
        std::vector<double> gaps;
        for (const auto& r : records)
            if (r.method == m) gaps.push_back(r.gap);
        double sum = 0.0;
        for (double g : gaps) sum += g;
        out.push_back({m, gaps.size(), median(gaps), sum / static_cast<double>(gaps.size())});
    }
    return out;
}

void write_gaps_csv(std::ostream& out, const std::vector<EvalRecord>& records) {
    out << "instance,method,v_method,v_2sp,gap,t_surrogate_ms,t_full_ms\n";
    for (const auto& r : records)
        out << r.instance << ',' << r.method << ',' << format_double(r.v_method) << ',' << format_double(r.v_2sp)
            << ',' << format_double(r.gap) << ',' << format_double(r.t_surrogate_ms) << ','
            << format_double(r.t_full_ms) << '\n';
}

std::vector<EvalRecord> read_gaps_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != "instance,method,v_method,v_2sp,gap,t_surrogate_ms,t_full_ms")
        throw IoError("not a gaps.csv file");
    std::vector<EvalRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto f = split(trim(line), ',');
        if (f.size() != 7) throw IoError("gaps.csv line " + std::to_string(lineno) + " has the wrong field count");
        try {
            EvalRecord r;
            const long long inst = parse_int(f[0]);
            if (inst < 0) throw InputError("negative instance id");
            r.instance = static_cast<std::size_t>(inst);
            r.method = f[1];
            r.v_method = parse_double(f[2]);
            r.v_2sp = parse_double(f[3]);
            r.gap = parse_double(f[4]);
            r.t_surrogate_ms = parse_double(f[5]);
            r.t_full_ms = parse_double(f[6]);
            out.push_back(std::move(r));
        } catch (const InputError& e) {
            throw IoError("gaps.csv line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void write_cdf_csv(std::ostream& out, const std::vector<std::pair<double, double>>& cdf) {
    out << "gap,fraction\n";
    for (const auto& [g, f] : cdf) out << format_double(g) << ',' << format_double(f) << '\n';
}

void write_wins_csv(std::ostream& out, const std::map<std::string, double>& wins,
                    const std::vector<std::string>& order) {
    out << "method,fraction\n";
    for (const auto& m : order) {
        const auto it = wins.find(m);
        out << m << ',' << format_double(it == wins.end() ? 0.0 : it->second) << '\n';
    }
}

void write_cdf_svg(std::ostream& out, const std::vector<EvalRecord>& records) {
    // Gaps at or below the floor (including exact zeros) sit on the left edge.
    constexpr double kFloor = 1e-6;
    constexpr double W = 640, H = 400, L = 60, R = 150, T = 20, B = 50;
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
    double hi = 1.0;
    for (const auto& r : records)
        if (std::isfinite(r.gap)) hi = std::max(hi, r.gap);
    const double lx0 = std::log10(kFloor), lx1 = std::ceil(std::log10(hi));
    auto px = [&](double g) {
        const double lg = std::log10(std::max(g, kFloor));
        return L + (W - L - R) * (std::min(lg, lx1) - lx0) / (lx1 - lx0);
    };
    auto py = [&](double f) { return T + (H - T - B) * (1.0 - f); };
    char buf[128];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
                  L, T, W - L - R, H - T - B);
    out << buf;
    for (double e = lx0; e <= lx1; e += 1.0) {
        std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%g\" text-anchor=\"middle\">1e%d</text>\n", px(std::pow(10.0, e)),
                      H - B + 15, static_cast<int>(e));
        out << buf;
    }
    for (int i = 0; i <= 4; ++i) {
        std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%.2f\" text-anchor=\"end\">%.2f</text>\n", L - 5,
                      py(i / 4.0) + 4, i / 4.0);
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">optimality gap</text>\n",
                  L + (W - L - R) / 2, H - 10);
    out << buf;
    const auto order = method_order(records);
    for (std::size_t m = 0; m < order.size(); ++m) {
        const auto cdf = gap_cdf(records, order[m]);
        const char* color = colors[m % 8];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        double prev = 0.0;
        for (const auto& [g, f] : cdf) {
            if (!std::isfinite(g)) continue;
            std::snprintf(buf, sizeof buf, "%.2f,%.2f %.2f,%.2f ", px(g), py(prev), px(g), py(f));
            out << buf;
            prev = f;
        }
        std::snprintf(buf, sizeof buf, "%.2f,%.2f", px(std::pow(10.0, lx1)), py(prev));
        out << buf << "\"/>\n";
        std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" fill=\"%s\">%s</text>\n", W - R + 10,
                      T + 15 + 15 * static_cast<double>(m), color, order[m].c_str());
        out << buf;
    }
    out << "</svg>\n";
}

}  // namespace csg::eval
