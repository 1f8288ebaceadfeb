#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "csg/environments/environment.hpp"
#include "csg/training/models.hpp"
#include "csg/twostage/twostage.hpp"

namespace csg::eval {

using twostage::FirstStage;
using twostage::ProblemSpec;

struct Prediction {
    FirstStage first_stage;
    Matrix scenarios;
};

/// Scenarios from the task-net, then the surrogate SAA on them.
Prediction predict_and_solve(const training::TaskNet& net, const ProblemSpec& spec, std::span<const double> x);

/// Surrogate SAA on the single scenario E[omega | x].
FirstStage expected_value_benchmark(const env::SyntheticEnv& env, const ProblemSpec& spec, std::span<const double> x);
FirstStage expected_value_from_support(const ProblemSpec& spec, const env::Support& support);

/// Pinball-loss linear quantile regression of a 1-D outcome on the contexts
/// plus an intercept (last coefficient), solved as an LP.
std::vector<double> quantile_regression_benchmark(const env::JointSample& sample, double tau);
/// Pinball loss sum_i rho_tau(omega_i - beta . [x_i, 1]).
double pinball_loss(const env::JointSample& sample, std::span<const double> beta, double tau);
/// Newsvendor policy clamp(beta . [x, 1], 0, u).
FirstStage quantile_policy(const ProblemSpec& spec, std::span<const double> beta, std::span<const double> x);

struct Instance {
    std::vector<double> context;
    env::Support support;
};

/// n_eval validation contexts and their enumerated supports.
std::vector<Instance> make_instances(const env::SyntheticEnv& env, std::size_t n_eval, std::uint64_t seed);

/// A decision rule evaluated on every instance. "oracle" is reserved for the
/// full-support solution itself.
struct Method {
    std::string id;
    std::function<FirstStage(const Instance&)> decide;
};

struct EvalRecord {
    std::size_t instance = 0;
    std::string method;
    double v_method = 0.0;
    double v_2sp = 0.0;
    double gap = 0.0;
    double t_surrogate_ms = 0.0;
    double t_full_ms = 0.0;
};

/// (v_method - v_2sp) / |v_2sp|; 0 when both are zero and +inf when only
/// v_2sp is.
double optimality_gap(double v_method, double v_2sp);

struct EvalOptions {
    std::size_t jobs = 1;
    /// Wall times are stored as 0 unless requested, so reports stay
    /// byte-identical across runs.
    bool timing = false;
    twostage::FullSolveBudget budget;
};

struct EvalResult {
    /// Instance-major, methods in the given order.
    std::vector<EvalRecord> records;
    /// Instances excluded because some solve failed, with the reason.
    std::vector<std::string> failures;
};

/// Full-support optimum per instance plus every method's true cost. An
/// instance with any failing solve is excluded from the records.
EvalResult evaluate_methods(const ProblemSpec& spec, const std::vector<Instance>& instances,
                            const std::vector<Method>& methods, const EvalOptions& options = {});
EvalResult evaluate_methods(const env::SyntheticEnv& env, const ProblemSpec& spec, const std::vector<Method>& methods,
                            std::size_t n_eval, std::uint64_t seed, const EvalOptions& options = {});

/// Empirical CDF points (gap, fraction of records with gap <= it), one per
/// distinct gap in increasing order.
std::vector<std::pair<double, double>> gap_cdf(const std::vector<EvalRecord>& records, const std::string& method);

/// Per method, the fraction of instances on which it attains the lowest
/// v_method. Values within 1e-9 relative are ties and share the instance.
std::map<std::string, double> win_table(const std::vector<EvalRecord>& records);

double median(std::vector<double> values);

struct MethodSummary {
    std::string method;
    std::size_t instances = 0;
    double median_gap = 0.0;
    double mean_gap = 0.0;
};

/// Methods in order of first appearance.
std::vector<MethodSummary> summarize(const std::vector<EvalRecord>& records);
std::vector<std::string> method_order(const std::vector<EvalRecord>& records);

void write_gaps_csv(std::ostream& out, const std::vector<EvalRecord>& records);
std::vector<EvalRecord> read_gaps_csv(std::istream& in);
void write_cdf_csv(std::ostream& out, const std::vector<std::pair<double, double>>& cdf);
void write_wins_csv(std::ostream& out, const std::map<std::string, double>& wins,
                    const std::vector<std::string>& order);
/// Self-contained SVG of the gap CDFs on a log-x axis.
void write_cdf_svg(std::ostream& out, const std::vector<EvalRecord>& records);

}  // namespace csg::eval
