#include "csg/training/models.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "csg/core/errors.hpp"
#include "csg/core/format.hpp"

namespace csg::training {

namespace {

void write_vector(std::ostream& out, const char* tag, const std::vector<double>& v) {
    out << tag;
    for (double x : v) out << ' ' << format_double(x);
    out << '\n';
}

std::vector<double> read_vector(std::istream& in, const std::string& tag, std::size_t n) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("missing '" + tag + "' line");
    std::istringstream fields(line);
    std::string word;
    fields >> word;
    if (word != tag) throw InputError("expected '" + tag + "' line, found '" + line + "'");
    std::vector<double> v;
    while (fields >> word) v.push_back(parse_double(word));
    if (v.size() != n) throw InputError("'" + tag + "' line has the wrong length");
    return v;
}

// Any parse or validation failure while reading a model file is an IO error.
template <typename F>
auto reading(const char* what, F&& body) {
    try {
        return body();
    } catch (const InputError& e) {
        throw IoError(std::string("malformed ") + what + ": " + e.what());
    }
}

}  // namespace

void column_moments(const Matrix& m, std::vector<double>& mean, std::vector<double>& scale) {
    const std::size_t n = m.rows(), p = m.cols();
    mean.assign(p, 0.0);
    scale.assign(p, 1.0);
    if (n == 0) return;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) mean[j] += m(i, j);
    for (double& v : mean) v /= static_cast<double>(n);
    for (std::size_t j = 0; j < p; ++j) {
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) ss += (m(i, j) - mean[j]) * (m(i, j) - mean[j]);
        const double sd = std::sqrt(ss / static_cast<double>(n));
        scale[j] = sd > 1e-12 * std::max(1.0, std::abs(mean[j])) ? sd : 1.0;
    }
}

void TaskNet::validate() const {
    if (k == 0 || p == 0) throw InputError("task-net needs k >= 1 and p >= 1");
    if (net.num_layers() == 0 || net.output_dim() != k * p)
        throw InputError("task-net head must emit k * p values");
    if (net.output_activation() != neural::Activation::Linear) throw InputError("task-net head must be linear");
    if (shift.size() != p || scale.size() != p) throw InputError("task-net output map has the wrong length");
}

Matrix TaskNet::predict(std::span<const double> x) const {
    Tape tape;
    return predict(x, tape);
}

Matrix TaskNet::predict(std::span<const double> x, Tape& tape) const {
    const auto raw = net.forward(x, tape.net);
    tape.pre.resize(raw.size());
    Matrix out(k, p);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            const double v = shift[j] + scale[j] * raw[i * p + j];
            tape.pre[i * p + j] = v;
            out(i, j) = relu_output ? std::max(v, 0.0) : v;
        }
    return out;
}

void TaskNet::backward(const Tape& tape, const Matrix& upstream, std::span<double> param_grad) const {
    if (upstream.rows() != k || upstream.cols() != p) throw InputError("scenario gradient has the wrong shape");
    std::vector<double> d_raw(k * p);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            const bool open = !relu_output || tape.pre[i * p + j] > 0.0;
            d_raw[i * p + j] = open ? upstream(i, j) * scale[j] : 0.0;
        }
    net.backward(tape.net, d_raw, param_grad);
}

TaskNet make_task_net(std::size_t context_dim, std::size_t k, const std::vector<std::size_t>& hidden,
                      const Matrix& outcomes, bool relu_output, Rng& rng) {
    if (outcomes.rows() == 0) throw InputError("task-net calibration needs outcomes");
    TaskNet t;
    t.k = k;
    t.p = outcomes.cols();
    t.relu_output = relu_output;
    std::vector<std::size_t> dims{context_dim};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(k * t.p);
    t.net = neural::DenseNet(dims);
    t.net.init_he_uniform(rng);
    column_moments(outcomes, t.shift, t.scale);
    t.validate();
    return t;
}

void LossModel::validate() const {
    net.validate();
    if (in_shift.size() != net.scenario_dim() || in_scale.size() != net.scenario_dim())
        throw InputError("loss model normalisation has the wrong length");
    if (!(target_scale > 0.0)) throw InputError("loss model target scale must be positive");
}

namespace {

Matrix normalise(const LossModel& m, const Matrix& scenarios) {
    if (scenarios.cols() != m.scenario_dim()) throw InputError("scenario dimension does not match the loss model");
    Matrix z(scenarios.rows(), scenarios.cols());
    for (std::size_t i = 0; i < z.rows(); ++i)
        for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) = (scenarios(i, j) - m.in_shift[j]) / m.in_scale[j];
    return z;
}

std::vector<double> normalise(const LossModel& m, std::span<const double> omega) {
    if (omega.size() != m.scenario_dim()) throw InputError("outcome dimension does not match the loss model");
    std::vector<double> w(omega.size());
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = (omega[j] - m.in_shift[j]) / m.in_scale[j];
    return w;
}

}  // namespace

double LossModel::predict(const Matrix& scenarios, std::span<const double> omega) const {
    return target_mean + target_scale * neural::forward_lossnet(net, normalise(*this, scenarios), normalise(*this, omega));
}

double LossModel::predict_grad(const Matrix& scenarios, std::span<const double> omega, Matrix& d_scenarios) const {
    neural::LossNetTape tape;
    const double out = neural::forward_lossnet(net, normalise(*this, scenarios), normalise(*this, omega), tape);
    neural::backward_lossnet(net, tape, target_scale, {{}, &d_scenarios, nullptr});
    for (std::size_t i = 0; i < d_scenarios.rows(); ++i)
        for (std::size_t j = 0; j < d_scenarios.cols(); ++j) d_scenarios(i, j) /= in_scale[j];
    return target_mean + target_scale * out;
}

void write_task_net(std::ostream& out, const TaskNet& net) {
    net.validate();
    out << "tasknet " << net.k << ' ' << net.p << ' ' << (net.relu_output ? "relu" : "linear") << '\n';
    write_vector(out, "shift", net.shift);
    write_vector(out, "scale", net.scale);
    neural::write_mlp(out, net.net);
}

TaskNet read_task_net(std::istream& in) {
    return reading("tasknet file", [&] {
        std::string line;
        if (!std::getline(in, line)) throw InputError("missing tasknet header");
        std::istringstream header(line);
        std::string tag, act;
        long long k = 0, p = 0;
        if (!(header >> tag >> k >> p >> act) || tag != "tasknet" || k < 1 || p < 1 ||
            (act != "relu" && act != "linear"))
            throw InputError("malformed tasknet header '" + line + "'");
        TaskNet t;
        t.k = static_cast<std::size_t>(k);
        t.p = static_cast<std::size_t>(p);
        t.relu_output = act == "relu";
        t.shift = read_vector(in, "shift", t.p);
        t.scale = read_vector(in, "scale", t.p);
        t.net = neural::read_mlp(in);
        t.validate();
        return t;
    });
}

void write_loss_model(std::ostream& out, const LossModel& model) {
    model.validate();
    out << "lossmodel " << format_double(model.target_mean) << ' ' << format_double(model.target_scale) << '\n';
    write_vector(out, "shift", model.in_shift);
    write_vector(out, "scale", model.in_scale);
    neural::write_set_encoder(out, model.net);
}

LossModel read_loss_model(std::istream& in) {
    return reading("lossmodel file", [&] {
        std::string line;
        if (!std::getline(in, line)) throw InputError("missing lossmodel header");
        std::istringstream header(line);
        std::string tag, mean, scale;
        if (!(header >> tag >> mean >> scale) || tag != "lossmodel")
            throw InputError("malformed lossmodel header '" + line + "'");
        LossModel m;
        m.target_mean = parse_double(mean);
        m.target_scale = parse_double(scale);
        // The set encoder follows the normalisation lines; its width is only
        // known after reading it, so the vectors are parsed loosely first.
        std::string shift_line, scale_line;
        if (!std::getline(in, shift_line) || !std::getline(in, scale_line)) throw InputError("truncated lossmodel");
        m.net = neural::read_set_encoder(in);
        std::istringstream a(shift_line + '\n'), b(scale_line + '\n');
        m.in_shift = read_vector(a, "shift", m.net.scenario_dim());
        m.in_scale = read_vector(b, "scale", m.net.scenario_dim());
        m.validate();
        return m;
    });
}

}  // namespace csg::training
