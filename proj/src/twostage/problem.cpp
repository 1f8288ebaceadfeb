#include "csg/twostage/problem.hpp"

#include <cmath>
#include <span>

#include "csg/core/errors.hpp"
#include "csg/core/format.hpp"

namespace csg::twostage {

std::string problem_name(ProblemKind kind) {
    switch (kind) {
        case ProblemKind::Newsvendor: return "newsvendor";
        case ProblemKind::CEP1: return "cep1";
        case ProblemKind::CVaR: return "cvar";
        case ProblemKind::MNV: return "mnv";
    }
    return "unknown";
}

ProblemKind parse_problem_kind(const std::string& name) {
    if (name == "newsvendor") return ProblemKind::Newsvendor;
    if (name == "cep1") return ProblemKind::CEP1;
    if (name == "cvar") return ProblemKind::CVaR;
    if (name == "mnv") return ProblemKind::MNV;
    throw InputError("unknown problem kind: " + name);
}

void NewsvendorParams::validate() const {
    if (!(r < c && c < q)) throw InputError("newsvendor requires r < c < q");
    if (!(u > 0.0)) throw InputError("newsvendor requires u > 0");
}

namespace {

void require_size(const std::vector<double>& v, std::size_t n, const char* name) {
    if (v.size() != n) throw InputError(std::string(name) + " must have " + std::to_string(n) + " entries");
}

void require_nonnegative(std::span<const double> v, const char* name) {
    for (double x : v)
        if (!(x >= 0.0) || !std::isfinite(x)) throw InputError(std::string(name) + " must be finite and nonnegative");
}

}  // namespace

void CEP1Params::validate() const {
    require_size(c, machines, "cep1.c");
    require_size(t, machines, "cep1.t");
    require_size(h, machines, "cep1.h");
    require_size(u, machines, "cep1.u");
    require_size(p, parts, "cep1.p");
    if (a.rows() != parts || a.cols() != machines) throw InputError("cep1.a must be 3 x 4");
    if (g.rows() != parts || g.cols() != machines) throw InputError("cep1.g must be 3 x 4");
    for (const auto* v : {&c, &t, &h, &u, &p}) require_nonnegative(*v, "cep1 parameters");
    require_nonnegative(a.data(), "cep1.a");
    require_nonnegative(g.data(), "cep1.g");
    if (!(T >= 0.0)) throw InputError("cep1.T must be nonnegative");
}

void CVaRParams::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("cvar.alpha must lie in (0, 1)");
    if (k_assets > n_assets || n_assets == 0) throw InputError("cvar requires 0 < k_assets <= n_assets");
    if (!(lambda_risk > 0.0)) throw InputError("cvar.lambda_risk must be positive");
}

void MNVParams::validate() const {
    require_size(v, m, "mnv.v");
    require_size(c, m, "mnv.c");
    require_size(g, m, "mnv.g");
    if (sub_rate.rows() != m || sub_rate.cols() != m) throw InputError("mnv.sub_rate must be m x m");
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double a = sub_rate(i, j);
            if (i == j && a != 0.0) throw InputError("mnv.sub_rate must have a zero diagonal");
            if (!(a >= 0.0 && a < 1.0)) throw InputError("mnv.sub_rate entries must lie in [0, 1)");
        }
    if (!(capacity > 0.0) || !(product_limit >= 0.0) || !(big_m > 0.0))
        throw InputError("mnv capacity, product limit and big-M must be positive");
}

ProblemSpec ProblemSpec::make(ProblemKind kind) {
    ProblemSpec spec;
    spec.kind = kind;
    return spec;
}

std::size_t ProblemSpec::scenario_dim() const {
    switch (kind) {
        case ProblemKind::Newsvendor: return 1;
        case ProblemKind::CEP1: return CEP1Params::parts;
        case ProblemKind::CVaR: return cvar.n_assets;
        case ProblemKind::MNV: return mnv.m;
    }
    return 0;
}

std::size_t ProblemSpec::first_stage_dim() const {
    switch (kind) {
        case ProblemKind::Newsvendor: return 1;
        case ProblemKind::CEP1: return 2 * CEP1Params::machines;
        case ProblemKind::CVaR: return 2 * cvar.n_assets + 1;
        case ProblemKind::MNV: return 2 * mnv.m;
    }
    return 0;
}

void ProblemSpec::validate() const {
    switch (kind) {
        case ProblemKind::Newsvendor: newsvendor.validate(); break;
        case ProblemKind::CEP1: cep1.validate(); break;
        case ProblemKind::CVaR: cvar.validate(); break;
        case ProblemKind::MNV: mnv.validate(); break;
    }
}

namespace {

std::vector<double> parse_vector(const std::string& text) {
    std::vector<double> out;
    for (const auto& field : split(text, ',')) out.push_back(parse_double(field));
    return out;
}

Matrix parse_matrix(const std::string& text) {
    Matrix out(0, 0);
    for (const auto& row : split(text, ';')) out.append_row(parse_vector(row));
    return out;
}

std::size_t parse_count(const std::string& text) {
    const long long v = parse_int(text);
    if (v < 0) throw InputError("expected a nonnegative count: " + text);
    return static_cast<std::size_t>(v);
}

}  // namespace

void ProblemSpec::apply_overrides(const std::map<std::string, std::string>& config) {
    const std::string prefix = problem_name(kind) + ".";
    for (const auto& [key, value] : config) {
        if (key.rfind(prefix, 0) != 0) continue;
        const std::string field = key.substr(prefix.size());
        bool known = true;
        switch (kind) {
            case ProblemKind::Newsvendor:
                if (field == "c") newsvendor.c = parse_double(value);
                else if (field == "q") newsvendor.q = parse_double(value);
                else if (field == "r") newsvendor.r = parse_double(value);
                else if (field == "u") newsvendor.u = parse_double(value);
                else known = false;
                break;
            case ProblemKind::CEP1:
                if (field == "c") cep1.c = parse_vector(value);
                else if (field == "t") cep1.t = parse_vector(value);
                else if (field == "h") cep1.h = parse_vector(value);
                else if (field == "u") cep1.u = parse_vector(value);
                else if (field == "p") cep1.p = parse_vector(value);
                else if (field == "T") cep1.T = parse_double(value);
                else if (field == "a") cep1.a = parse_matrix(value);
                else if (field == "g") cep1.g = parse_matrix(value);
                else known = false;
                break;
            case ProblemKind::CVaR:
                if (field == "n_assets") cvar.n_assets = parse_count(value);
                else if (field == "k_assets") cvar.k_assets = parse_count(value);
                else if (field == "lambda_risk") cvar.lambda_risk = parse_double(value);
                else if (field == "alpha") cvar.alpha = parse_double(value);
                else known = false;
                break;
            case ProblemKind::MNV:
                if (field == "m") mnv.m = parse_count(value);
                else if (field == "v") mnv.v = parse_vector(value);
                else if (field == "c") mnv.c = parse_vector(value);
                else if (field == "g") mnv.g = parse_vector(value);
                else if (field == "sub_rate") mnv.sub_rate = parse_matrix(value);
                else if (field == "capacity") mnv.capacity = parse_double(value);
                else if (field == "product_limit") mnv.product_limit = parse_double(value);
                else if (field == "big_m") mnv.big_m = parse_double(value);
                else known = false;
                break;
        }
        if (!known) throw InputError("unknown problem parameter: " + key);
    }
    validate();
}

}  // namespace csg::twostage
