#include "csg/environments/environment.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>

#include "csg/core/errors.hpp"
#include "csg/core/format.hpp"
#include "csg/core/random.hpp"

namespace csg::env {

namespace {

// Stream tags for the sub-seeds of one environment.
enum : std::uint64_t { kGenerator = 1, kSigma, kPilot, kResiduals, kLoading, kSupport };

constexpr std::size_t kPilotDraws = 10000;

struct Settings {
    std::size_t hidden = 32;
    std::size_t support_size = 0;
    double mean = 0.0;
    double sd = 0.0;
    double snr = 0.5;
};

Settings read_settings(ProblemKind kind, const std::map<std::string, std::string>& overrides) {
    Settings s;
    switch (kind) {
        case ProblemKind::Newsvendor: s = {32, 200, 15.1, 0.25, 0.5}; break;
        case ProblemKind::CEP1: s = {32, 216, 1500.0, 1024.7, 0.5}; break;
        case ProblemKind::CVaR: s = {32, 200, 0.0, 0.0, 0.5}; break;
        case ProblemKind::MNV: s = {32, 80, 0.0, 0.0, 0.5}; break;
    }
    for (const auto& [key, value] : overrides) {
        if (key.rfind("env.", 0) != 0) continue;
        const std::string field = key.substr(4);
        if (field == "hidden") {
            s.hidden = static_cast<std::size_t>(parse_int(value));
        } else if (field == "support_size" && (kind == ProblemKind::CVaR || kind == ProblemKind::MNV)) {
            s.support_size = static_cast<std::size_t>(parse_int(value));
        } else if (field == "mean" && (kind == ProblemKind::Newsvendor || kind == ProblemKind::CEP1)) {
            s.mean = parse_double(value);
        } else if (field == "sd" && (kind == ProblemKind::Newsvendor || kind == ProblemKind::CEP1)) {
            s.sd = parse_double(value);
        } else if (field == "snr" && kind == ProblemKind::MNV) {
            s.snr = parse_double(value);
        } else {
            throw InputError("unknown or inapplicable environment key '" + key + "'");
        }
    }
    if (s.hidden == 0 || s.support_size == 0) throw InputError("environment sizes must be positive");
    if (!(s.sd > 0.0) && (kind == ProblemKind::Newsvendor || kind == ProblemKind::CEP1))
        throw InputError("environment sd must be positive");
    if (!(s.snr > 0.0)) throw InputError("signal-to-noise ratio must be positive");
    return s;
}

neural::DenseNet make_generator(std::size_t in, std::size_t hidden, std::size_t out, std::uint64_t seed) {
    neural::DenseNet net({in, hidden, hidden, out});
    Rng rng(seed);
    // Framework-default initialisation: weights and biases uniform in
    // +-1/sqrt(fan_in).
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        const std::size_t in = net.layer_dims()[l], out = net.layer_dims()[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        for (std::size_t i = 0; i < out * in; ++i) net.weights(l)[i] = bound * (2.0 * uniform01(rng) - 1.0);
        for (std::size_t i = 0; i < out; ++i) net.bias(l)[i] = bound * (2.0 * uniform01(rng) - 1.0);
    }
    return net;
}

std::vector<double> standard_normal_vector(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = standard_normal(rng);
    return v;
}

struct Moments {
    double mean = 0.0;
    double sd = 0.0;
};

// Pooled moments of groups of raw generator outputs over a pilot sample of
// standard normal contexts. group_of(j) maps output j to its group.
template <typename GroupOf>
std::vector<Moments> pilot_moments(const neural::DenseNet& net, std::size_t groups, GroupOf group_of,
                                   std::uint64_t seed) {
    std::vector<double> count(groups, 0.0), mean(groups, 0.0), m2(groups, 0.0);
    Rng rng(seed);
    for (std::size_t i = 0; i < kPilotDraws; ++i) {
        const auto raw = net.forward(standard_normal_vector(net.input_dim(), rng));
        for (std::size_t j = 0; j < raw.size(); ++j) {
            const std::size_t g = group_of(j);
            count[g] += 1.0;
            const double delta = raw[j] - mean[g];
            mean[g] += delta / count[g];
            m2[g] += delta * (raw[j] - mean[g]);
        }
    }
    std::vector<Moments> out(groups);
    for (std::size_t g = 0; g < groups; ++g) {
        out[g] = {mean[g], std::sqrt(m2[g] / count[g])};
        if (!(out[g].sd > 0.0)) throw InputError("degenerate generator network; try another seed");
    }
    return out;
}

void calibrate(SyntheticEnv& env, const std::vector<Moments>& raw, double target_mean, double target_sd) {
    for (const auto& m : raw) {
        const double a = target_sd / m.sd;
        env.scale.push_back(a);
        env.shift.push_back(target_mean - a * m.mean);
    }
}

std::vector<double> cvar_mean(const SyntheticEnv& env, std::span<const double> x) {
    auto mu = env.generator.forward(x);
    for (double& v : mu) v = env.scale[0] * v + env.shift[0];
    return mu;
}

std::vector<double> cvar_scale(const SyntheticEnv& env, std::span<const double> x) {
    auto sd = env.sigma_net.forward(x);
    for (double& v : sd) v = std::max(env.scale[1] * v + env.shift[1], 0.0) + env.sigma_floor;
    return sd;
}

void check_context(const SyntheticEnv& env, std::span<const double> x) {
    if (x.size() != env.context_dim)
        throw InputError("context has length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(env.context_dim));
}

}  // namespace

SyntheticEnv make_env(ProblemKind kind, std::uint64_t seed, const std::map<std::string, std::string>& overrides) {
    const Settings s = read_settings(kind, overrides);
    SyntheticEnv env;
    env.kind = kind;
    env.seed = seed;
    env.support_size = s.support_size;
    switch (kind) {
        case ProblemKind::Newsvendor: {
            env.context_dim = 2;
            env.outcome_dim = 1;
            env.generator = make_generator(2, s.hidden, env.support_size, derive_seed(seed, kGenerator));
            const auto m = pilot_moments(env.generator, 1, [](std::size_t) { return 0; }, derive_seed(seed, kPilot));
            calibrate(env, m, s.mean, s.sd);
            break;
        }
        case ProblemKind::CEP1: {
            env.context_dim = 4;
            env.outcome_dim = 3;
            // Raw output is a 6 x 3 grid; column i holds the 6 points of part i.
            env.generator = make_generator(4, s.hidden, 18, derive_seed(seed, kGenerator));
            const auto m = pilot_moments(env.generator, 3, [](std::size_t j) { return j % 3; },
                                         derive_seed(seed, kPilot));
            calibrate(env, m, s.mean, s.sd);
            break;
        }
        case ProblemKind::CVaR: {
            env.context_dim = 8;
            env.outcome_dim = 10;
            env.generator = make_generator(8, s.hidden, 10, derive_seed(seed, kGenerator));
            env.sigma_net = make_generator(8, s.hidden, 10, derive_seed(seed, kSigma));
            const auto zero = [](std::size_t) { return 0; };
            calibrate(env, pilot_moments(env.generator, 1, zero, derive_seed(seed, kPilot)), 5e-4, 1e-3);
            calibrate(env, pilot_moments(env.sigma_net, 1, zero, derive_seed(seed, kPilot)), 0.015, 0.005);
            // Heavy-tailed residuals with one common factor, unit variance.
            Rng rng(derive_seed(seed, kResiduals));
            std::student_t_distribution<double> t5(5.0);
            const double unit = std::sqrt(3.0 / 5.0);
            env.residuals = Matrix(env.support_size, env.outcome_dim);
            for (std::size_t i = 0; i < env.support_size; ++i) {
                const double common = unit * t5(rng);
                for (std::size_t j = 0; j < env.outcome_dim; ++j)
                    env.residuals(i, j) = std::sqrt(0.5) * common + std::sqrt(0.5) * unit * t5(rng);
            }
            break;
        }
        case ProblemKind::MNV: {
            env.context_dim = 10;
            env.outcome_dim = 6;
            // Sigma_ij = 0.8^|i-j| is AR(1); its Cholesky factor is closed form.
            const double rho = 0.8, tail = std::sqrt(1.0 - rho * rho);
            env.context_chol = Matrix(10, 10, 0.0);
            for (std::size_t i = 0; i < 10; ++i)
                for (std::size_t j = 0; j <= i; ++j)
                    env.context_chol(i, j) = std::pow(rho, static_cast<double>(i - j)) * (j == 0 ? 1.0 : tail);
            Rng rng(derive_seed(seed, kLoading));
            env.loading = Matrix(6, 10);
            for (double& w : env.loading.data()) w = standard_normal(rng);
            for (std::size_t i = 0; i < 6; ++i) {
                // Var(w_i . x) = |L^T w_i|^2.
                double var = 0.0;
                for (std::size_t k = 0; k < 10; ++k) {
                    double s_k = 0.0;
                    for (std::size_t r = k; r < 10; ++r) s_k += env.loading(i, r) * env.context_chol(r, k);
                    var += s_k * s_k;
                }
                env.noise_sd.push_back(std::sqrt(var / s.snr));
            }
            break;
        }
    }
    return env;
}

void JointSample::validate() const {
    if (contexts.rows() != outcomes.rows()) throw InputError("contexts and outcomes differ in row count");
    for (double v : contexts.data())
        if (!std::isfinite(v)) throw InputError("non-finite context value");
    for (double v : outcomes.data())
        if (!std::isfinite(v)) throw InputError("non-finite outcome value");
}

std::vector<double> sample_context(const SyntheticEnv& env, Rng& rng) {
    auto z = standard_normal_vector(env.context_dim, rng);
    if (env.kind != ProblemKind::MNV) return z;
    std::vector<double> x(env.context_dim, 0.0);
    for (std::size_t i = 0; i < env.context_dim; ++i)
        for (std::size_t j = 0; j <= i; ++j) x[i] += env.context_chol(i, j) * z[j];
    return x;
}

JointSample sample_joint(const SyntheticEnv& env, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw InputError("sample size must be at least 1");
    JointSample out{Matrix(n, env.context_dim), Matrix(n, env.outcome_dim)};
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(derive_seed(seed, i));
        const auto x = sample_context(env, rng);
        const auto support = conditional_support(env, x);
        const auto pick = support.points.row(uniform_index(rng, support.points.rows()));
        std::copy(x.begin(), x.end(), out.contexts.row(i).begin());
        std::copy(pick.begin(), pick.end(), out.outcomes.row(i).begin());
    }
    return out;
}

Support conditional_support(const SyntheticEnv& env, std::span<const double> x) {
    check_context(env, x);
    Support out;
    switch (env.kind) {
        case ProblemKind::Newsvendor: {
            const auto raw = env.generator.forward(x);
            out.points = Matrix(raw.size(), 1);
            for (std::size_t k = 0; k < raw.size(); ++k)
                out.points(k, 0) = std::max(env.scale[0] * raw[k] + env.shift[0], 0.0);
            break;
        }
        case ProblemKind::CEP1: {
            const auto raw = env.generator.forward(x);
            double marg[3][6];
            for (std::size_t k = 0; k < 6; ++k)
                for (std::size_t i = 0; i < 3; ++i)
                    marg[i][k] = std::max(env.scale[i] * raw[k * 3 + i] + env.shift[i], 0.0);
            out.points = Matrix(216, 3);
            for (std::size_t a = 0; a < 6; ++a)
                for (std::size_t b = 0; b < 6; ++b)
                    for (std::size_t c = 0; c < 6; ++c) {
                        auto row = out.points.row(a * 36 + b * 6 + c);
                        row[0] = marg[0][a];
                        row[1] = marg[1][b];
                        row[2] = marg[2][c];
                    }
            break;
        }
        case ProblemKind::CVaR: {
            const auto mu = cvar_mean(env, x);
            const auto sd = cvar_scale(env, x);
            out.points = Matrix(env.support_size, env.outcome_dim);
            for (std::size_t i = 0; i < env.support_size; ++i)
                for (std::size_t j = 0; j < env.outcome_dim; ++j)
                    out.points(i, j) = mu[j] + sd[j] * env.residuals(i, j);
            break;
        }
        case ProblemKind::MNV: {
            Rng rng(hash_values(derive_seed(env.seed, kSupport), x));
            out.points = Matrix(env.support_size, env.outcome_dim);
            std::vector<double> signal(env.outcome_dim, 0.0);
            for (std::size_t i = 0; i < env.outcome_dim; ++i)
                for (std::size_t j = 0; j < env.context_dim; ++j) signal[i] += env.loading(i, j) * x[j];
            for (std::size_t s = 0; s < env.support_size; ++s)
                for (std::size_t i = 0; i < env.outcome_dim; ++i) {
                    // sign(0) is taken as +1.
                    const bool high = signal[i] + env.noise_sd[i] * standard_normal(rng) >= 0.0;
                    const double mu = high ? env.mu_high : env.mu_low;
                    const double sd = high ? env.sd_high : env.sd_low;
                    out.points(s, i) = std::max(mu + sd * standard_normal(rng), 0.0);
                }
            break;
        }
    }
    out.probs.assign(out.points.rows(), 1.0 / static_cast<double>(out.points.rows()));
    return out;
}

std::vector<double> weighted_mean(const Support& support) {
    std::vector<double> mean(support.points.cols(), 0.0);
    for (std::size_t k = 0; k < support.points.rows(); ++k)
        for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += support.probs[k] * support.points(k, j);
    return mean;
}

std::vector<double> conditional_mean(const SyntheticEnv& env, std::span<const double> x) {
    return weighted_mean(conditional_support(env, x));
}

std::vector<double> recover_residual(const SyntheticEnv& env, std::span<const double> x,
                                     std::span<const double> omega) {
    if (env.kind != ProblemKind::CVaR) throw InputError("residuals exist only for the CVaR environment");
    check_context(env, x);
    if (omega.size() != env.outcome_dim) throw InputError("outcome has the wrong length");
    const auto mu = cvar_mean(env, x);
    const auto sd = cvar_scale(env, x);
    std::vector<double> eps(omega.size());
    for (std::size_t j = 0; j < eps.size(); ++j) eps[j] = (omega[j] - mu[j]) / sd[j];
    return eps;
}

namespace {

void write_header(std::ostream& out, std::size_t d, std::size_t p, std::size_t n) {
    out << "d=" << d << ",p=" << p << ",n=" << n << '\n';
}

void write_row(std::ostream& out, std::initializer_list<std::span<const double>> parts) {
    bool first = true;
    for (auto part : parts)
        for (double v : part) {
            if (!first) out << ',';
            out << format_double(v);
            first = false;
        }
    out << '\n';
}

struct Header {
    std::size_t d = 0, p = 0, n = 0;
};

Header read_header(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("missing header line");
    const auto fields = split(trim(line), ',');
    if (fields.size() != 3) throw IoError("malformed header '" + line + "'");
    Header h;
    const char* names[3] = {"d=", "p=", "n="};
    std::size_t* slots[3] = {&h.d, &h.p, &h.n};
    for (int i = 0; i < 3; ++i) {
        if (fields[static_cast<std::size_t>(i)].rfind(names[i], 0) != 0) throw IoError("malformed header '" + line + "'");
        try {
            const long long v = parse_int(fields[static_cast<std::size_t>(i)].substr(2));
            if (v < 0) throw IoError("negative size in header");
            *slots[i] = static_cast<std::size_t>(v);
        } catch (const InputError&) {
            throw IoError("malformed header '" + line + "'");
        }
    }
    return h;
}

std::vector<double> read_row(std::istream& in, std::size_t width, std::size_t index) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("file ends before row " + std::to_string(index + 1));
    const auto fields = split(trim(line), ',');
    if (fields.size() != width)
        throw IoError("row " + std::to_string(index + 1) + " has " + std::to_string(fields.size()) +
                      " fields, expected " + std::to_string(width));
    std::vector<double> row(width);
    try {
        for (std::size_t j = 0; j < width; ++j) row[j] = parse_double(fields[j]);
    } catch (const InputError& e) {
        throw IoError("row " + std::to_string(index + 1) + ": " + e.what());
    }
    return row;
}

}  // namespace

void write_dataset(std::ostream& out, const JointSample& sample) {
    write_header(out, sample.contexts.cols(), sample.outcomes.cols(), sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) write_row(out, {sample.contexts.row(i), sample.outcomes.row(i)});
}

JointSample read_dataset(std::istream& in) {
    const Header h = read_header(in);
    JointSample s{Matrix(h.n, h.d), Matrix(h.n, h.p)};
    for (std::size_t i = 0; i < h.n; ++i) {
        const auto row = read_row(in, h.d + h.p, i);
        std::copy(row.begin(), row.begin() + static_cast<long>(h.d), s.contexts.row(i).begin());
        std::copy(row.begin() + static_cast<long>(h.d), row.end(), s.outcomes.row(i).begin());
    }
    try {
        s.validate();
    } catch (const InputError& e) {
        throw IoError(e.what());
    }
    return s;
}

void write_support(std::ostream& out, std::span<const double> x, const Support& support) {
    write_header(out, x.size(), support.points.cols(), support.points.rows());
    for (std::size_t k = 0; k < support.points.rows(); ++k) {
        const double p = support.probs[k];
        write_row(out, {x, support.points.row(k), std::span<const double>(&p, 1)});
    }
}

SupportFile read_support(std::istream& in) {
    const Header h = read_header(in);
    if (h.n == 0) throw IoError("support file has no points");
    SupportFile f;
    f.support.points = Matrix(h.n, h.p);
    f.support.probs.resize(h.n);
    for (std::size_t k = 0; k < h.n; ++k) {
        const auto row = read_row(in, h.d + h.p + 1, k);
        if (k == 0) {
            f.context.assign(row.begin(), row.begin() + static_cast<long>(h.d));
        } else if (!std::equal(f.context.begin(), f.context.end(), row.begin())) {
            throw IoError("support rows disagree on the context");
        }
        std::copy(row.begin() + static_cast<long>(h.d), row.end() - 1, f.support.points.row(k).begin());
        f.support.probs[k] = row.back();
        if (!(f.support.probs[k] >= 0.0)) throw IoError("negative probability in support file");
    }
    return f;
}

}  // namespace csg::env
