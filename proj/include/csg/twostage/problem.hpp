#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "csg/core/matrix.hpp"

namespace csg::twostage {

enum class ProblemKind { Newsvendor, CEP1, CVaR, MNV };

std::string problem_name(ProblemKind kind);
ProblemKind parse_problem_kind(const std::string& name);

struct NewsvendorParams {
    double c = 1.0;   // unit cost
    double q = 1.05;  // price
    double r = 0.1;   // salvage
    double u = 60.0;  // purchase cap
    void validate() const;
};

struct CEP1Params {
    std::vector<double> c{2.5, 3.75, 5.0, 3.0};
    std::vector<double> t{0.08, 0.04, 0.03, 0.01};
    std::vector<double> h{500.0, 500.0, 500.0, 500.0};
    std::vector<double> u{2000.0, 2000.0, 3000.0, 3000.0};
    std::vector<double> p{400.0, 400.0, 400.0};
    double T = 100.0;
    Matrix a{{0.6, 0.6, 0.9, 0.8}, {0.1, 0.9, 0.6, 0.8}, {2.6, 3.4, 3.4, 0.9}};
    /// Only two rows of hourly costs are published; row 3 defaults to their
    /// elementwise mean.
    Matrix g{{1.5, 2.3, 2.0, 3.6}, {0.05, 0.2, 0.5, 0.8}, {0.775, 1.25, 1.25, 2.2}};
    static constexpr std::size_t machines = 4;
    static constexpr std::size_t parts = 3;
    void validate() const;
};

struct CVaRParams {
    std::size_t n_assets = 10;
    std::size_t k_assets = 5;
    double lambda_risk = 10.0;
    double alpha = 0.9;
    void validate() const;
};

struct MNVParams {
    std::size_t m = 6;
    std::vector<double> v{46.111, 44.691, 46.448, 48.406, 44.476, 44.476};
    std::vector<double> c{18.980, 25.618, 24.163, 26.217, 17.974, 26.418};
    std::vector<double> g{9.830, 5.094, 5.067, 5.293, 5.723, 7.292};
    /// sub_rate(i, j): fraction of unmet demand for j that item i can serve.
    Matrix sub_rate{{0.0, 0.087, 0.184, 0.042, 0.088, 0.110}, {0.137, 0.0, 0.060, 0.154, 0.178, 0.014},
                    {0.182, 0.051, 0.0, 0.285, 0.290, 0.243}, {0.091, 0.029, 0.205, 0.0, 0.037, 0.149},
                    {0.010, 0.273, 0.078, 0.199, 0.0, 0.156}, {0.164, 0.055, 0.291, 0.233, 0.282, 0.0}};
    double capacity = 70.0;
    double product_limit = 3.0;
    double big_m = 70.0;
    void validate() const;
};

/// One benchmark problem. Only the parameter block matching `kind` is used.
struct ProblemSpec {
    ProblemKind kind = ProblemKind::Newsvendor;
    NewsvendorParams newsvendor;
    CEP1Params cep1;
    CVaRParams cvar;
    MNVParams mnv;

    static ProblemSpec make(ProblemKind kind);

    std::size_t scenario_dim() const;
    std::size_t first_stage_dim() const;
    /// Demand problems have nonnegative outcomes.
    bool nonnegative_outcomes() const { return kind != ProblemKind::CVaR; }
    void validate() const;

    /// Applies `<problem>.<field> = value` entries; vectors are comma
    /// separated and matrices use `;` between rows. Unknown keys under this
    /// problem's prefix are input errors; other keys are ignored.
    void apply_overrides(const std::map<std::string, std::string>& config);
};

/// First-stage vector laid out per kind: newsvendor (y); CEP1 (y_cap, y_op);
/// CVaR (y, gamma, t); MNV (y, t).
struct FirstStage {
    std::vector<double> y;
    friend bool operator==(const FirstStage&, const FirstStage&) = default;
};

}  // namespace csg::twostage
