#include "models.hpp"

#include "csg/core/errors.hpp"
#include "csg/solver/solver.hpp"

namespace csg::twostage::detail {
namespace {

using solver::kInfinity;
using solver::Sense;
using Ids = std::vector<std::size_t>;

class NewsvendorModel final : public Model {
public:
    explicit NewsvendorModel(const NewsvendorParams& p) : p_(p) {}

    Ids add_first_stage_vars(ProgramBuilder& b) const override { return {b.add_var(0.0, p_.u)}; }
    void add_first_stage_rows(ProgramBuilder&, const Ids&) const override {}
    void add_first_stage_cost(ProgramBuilder& b, const Ids& y) const override { b.add_cost(y[0], p_.c); }

    void add_recourse(ProgramBuilder& b, const Ids& y, std::span<const double> omega, double weight) const override {
        const std::size_t z = b.add_var(0.0, kInfinity, -p_.q * weight);
        const std::size_t w = b.add_var(0.0, kInfinity, -p_.r * weight);
        b.add_row({{z, 1.0}}, Sense::LessEqual, omega[0]);
        b.add_row({{z, 1.0}, {w, 1.0}, {y[0], -1.0}}, Sense::LessEqual, 0.0);
    }

    double first_stage_cost(const FirstStage& y) const override { return p_.c * y.y[0]; }

private:
    NewsvendorParams p_;
};

class CEP1Model final : public Model {
public:
    explicit CEP1Model(const CEP1Params& p) : p_(p) {}
    static constexpr std::size_t n = CEP1Params::machines;
    static constexpr std::size_t m = CEP1Params::parts;

    Ids add_first_stage_vars(ProgramBuilder& b) const override {
        Ids y;
        for (std::size_t j = 0; j < n; ++j) y.push_back(b.add_var(0.0, kInfinity));
        for (std::size_t j = 0; j < n; ++j) y.push_back(b.add_var(0.0, p_.u[j]));
        return y;
    }

    void add_first_stage_rows(ProgramBuilder& b, const Ids& y) const override {
        for (std::size_t j = 0; j < n; ++j) b.add_row({{y[j], -1.0}, {y[n + j], 1.0}}, Sense::LessEqual, p_.h[j]);
        ProgramBuilder::Terms maint;
        for (std::size_t j = 0; j < n; ++j) maint.emplace_back(y[n + j], p_.t[j]);
        b.add_row(std::move(maint), Sense::LessEqual, p_.T);
    }

    void add_first_stage_cost(ProgramBuilder& b, const Ids& y) const override {
        for (std::size_t j = 0; j < n; ++j) b.add_cost(y[j], p_.c[j]);
    }

    void add_recourse(ProgramBuilder& b, const Ids& y, std::span<const double> omega, double weight) const override {
        std::size_t z[m][n];
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) z[i][j] = b.add_var(0.0, kInfinity, p_.g(i, j) * weight);
        std::size_t s[m];
        for (std::size_t i = 0; i < m; ++i) s[i] = b.add_var(0.0, kInfinity, p_.p[i] * weight);
        for (std::size_t i = 0; i < m; ++i) {
            ProgramBuilder::Terms row;
            for (std::size_t j = 0; j < n; ++j) row.emplace_back(z[i][j], p_.a(i, j));
            row.emplace_back(s[i], 1.0);
            b.add_row(std::move(row), Sense::GreaterEqual, omega[i]);
        }
        for (std::size_t j = 0; j < n; ++j) {
            ProgramBuilder::Terms row;
            for (std::size_t i = 0; i < m; ++i) row.emplace_back(z[i][j], 1.0);
            row.emplace_back(y[n + j], -1.0);
            b.add_row(std::move(row), Sense::LessEqual, 0.0);
        }
    }

    double first_stage_cost(const FirstStage& y) const override {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += p_.c[j] * y.y[j];
        return s;
    }

private:
    CEP1Params p_;
};

class CVaRModel final : public Model {
public:
    explicit CVaRModel(const CVaRParams& p) : p_(p) {}

    Ids add_first_stage_vars(ProgramBuilder& b) const override {
        Ids y;
        for (std::size_t i = 0; i < p_.n_assets; ++i) y.push_back(b.add_var(0.0, kInfinity));
        y.push_back(b.add_var(-kInfinity, kInfinity));  // gamma
        for (std::size_t i = 0; i < p_.n_assets; ++i) y.push_back(b.add_var(0.0, 1.0, 0.0, true));
        return y;
    }

    void add_first_stage_rows(ProgramBuilder& b, const Ids& y) const override {
        const std::size_t n = p_.n_assets;
        ProgramBuilder::Terms budget, card;
        for (std::size_t i = 0; i < n; ++i) {
            budget.emplace_back(y[i], 1.0);
            card.emplace_back(y[n + 1 + i], 1.0);
            b.add_row({{y[i], 1.0}, {y[n + 1 + i], -1.0}}, Sense::LessEqual, 0.0);
        }
        b.add_row(std::move(budget), Sense::Equal, 1.0);
        b.add_row(std::move(card), Sense::LessEqual, static_cast<double>(p_.k_assets));
    }

    void add_first_stage_cost(ProgramBuilder& b, const Ids& y) const override {
        b.add_cost(y[p_.n_assets], p_.lambda_risk);
    }

    void add_recourse(ProgramBuilder& b, const Ids& y, std::span<const double> omega, double weight) const override {
        const std::size_t n = p_.n_assets;
        for (std::size_t i = 0; i < n; ++i) b.add_cost(y[i], -omega[i] * weight);
        const std::size_t z = b.add_var(0.0, kInfinity, p_.lambda_risk / (1.0 - p_.alpha) * weight);
        // z >= -omega.y - gamma
        ProgramBuilder::Terms row{{z, 1.0}, {y[n], 1.0}};
        for (std::size_t i = 0; i < n; ++i) row.emplace_back(y[i], omega[i]);
        b.add_row(std::move(row), Sense::GreaterEqual, 0.0);
    }

    double first_stage_cost(const FirstStage& y) const override { return p_.lambda_risk * y.y[p_.n_assets]; }

private:
    CVaRParams p_;
};

/// Profit maximization written as cost minimization: c.y minus the recourse
/// profit.
class MNVModel final : public Model {
public:
    explicit MNVModel(const MNVParams& p) : p_(p) {}

    Ids add_first_stage_vars(ProgramBuilder& b) const override {
        Ids y;
        for (std::size_t i = 0; i < p_.m; ++i) y.push_back(b.add_var(0.0, kInfinity));
        for (std::size_t i = 0; i < p_.m; ++i) y.push_back(b.add_var(0.0, 1.0, 0.0, true));
        return y;
    }

    void add_first_stage_rows(ProgramBuilder& b, const Ids& y) const override {
        const std::size_t m = p_.m;
        ProgramBuilder::Terms cap, lim;
        for (std::size_t i = 0; i < m; ++i) {
            cap.emplace_back(y[i], 1.0);
            lim.emplace_back(y[m + i], 1.0);
            b.add_row({{y[i], 1.0}, {y[m + i], -p_.big_m}}, Sense::LessEqual, 0.0);
        }
        b.add_row(std::move(cap), Sense::LessEqual, p_.capacity);
        b.add_row(std::move(lim), Sense::LessEqual, p_.product_limit);
    }

    void add_first_stage_cost(ProgramBuilder& b, const Ids& y) const override {
        for (std::size_t i = 0; i < p_.m; ++i) b.add_cost(y[i], p_.c[i]);
    }

    void add_recourse(ProgramBuilder& b, const Ids& y, std::span<const double> omega, double weight) const override {
        const std::size_t m = p_.m;
        const double big_m = p_.big_m;
        constexpr std::size_t none = static_cast<std::size_t>(-1);
        std::vector<std::size_t> s(m), zbar(m), w(m), zhat(m);
        std::vector<std::vector<std::size_t>> z(m, std::vector<std::size_t>(m, none));
        for (std::size_t i = 0; i < m; ++i) s[i] = b.add_var(0.0, kInfinity, -p_.v[i] * weight);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                if (i != j) z[i][j] = b.add_var(0.0, kInfinity);
        for (std::size_t i = 0; i < m; ++i) zbar[i] = b.add_var(0.0, kInfinity, -p_.v[i] * weight);
        for (std::size_t i = 0; i < m; ++i) w[i] = b.add_var(0.0, kInfinity, -p_.g[i] * weight);
        for (std::size_t j = 0; j < m; ++j) zhat[j] = b.add_var(0.0, 1.0, 0.0, true);

        for (std::size_t i = 0; i < m; ++i) {
            // s_i + sum_{j != i} z_ji <= omega_i
            ProgramBuilder::Terms row{{s[i], 1.0}};
            for (std::size_t j = 0; j < m; ++j)
                if (j != i) row.emplace_back(z[j][i], 1.0);
            b.add_row(std::move(row), Sense::LessEqual, omega[i]);
        }
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                if (i == j) continue;
                // z_ij <= a_ij (omega_j - s_j)
                const double a = p_.sub_rate(i, j);
                b.add_row({{z[i][j], 1.0}, {s[j], a}}, Sense::LessEqual, a * omega[j]);
            }
        for (std::size_t i = 0; i < m; ++i) {
            ProgramBuilder::Terms row{{zbar[i], 1.0}};
            for (std::size_t j = 0; j < m; ++j)
                if (j != i) row.emplace_back(z[i][j], -1.0);
            b.add_row(std::move(row), Sense::Equal, 0.0);
        }
        for (std::size_t j = 0; j < m; ++j) {
            // M (zhat_j - 1) <= s_j - y_j
            b.add_row({{zhat[j], big_m}, {s[j], -1.0}, {y[j], 1.0}}, Sense::LessEqual, big_m);
        }
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                if (i == j) continue;
                b.add_row({{z[i][j], 1.0}, {zhat[j], -big_m}}, Sense::LessEqual, 0.0);
            }
        for (std::size_t i = 0; i < m; ++i) {
            // w_i = y_i - s_i - zbar_i
            b.add_row({{w[i], 1.0}, {y[i], -1.0}, {s[i], 1.0}, {zbar[i], 1.0}}, Sense::Equal, 0.0);
        }
    }

    double first_stage_cost(const FirstStage& y) const override {
        double s = 0.0;
        for (std::size_t i = 0; i < p_.m; ++i) s += p_.c[i] * y.y[i];
        return s;
    }

private:
    MNVParams p_;
};

}  // namespace

std::unique_ptr<Model> make_model(const ProblemSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case ProblemKind::Newsvendor: return std::make_unique<NewsvendorModel>(spec.newsvendor);
        case ProblemKind::CEP1: return std::make_unique<CEP1Model>(spec.cep1);
        case ProblemKind::CVaR: return std::make_unique<CVaRModel>(spec.cvar);
        case ProblemKind::MNV: return std::make_unique<MNVModel>(spec.mnv);
    }
    throw InputError("unknown problem kind");
}

}  // namespace csg::twostage::detail
