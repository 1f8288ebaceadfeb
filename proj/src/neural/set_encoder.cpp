#include "csg/neural/set_encoder.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <string>

#include "csg/core/errors.hpp"

namespace csg::neural {

void SetEncoderNet::validate() const {
    if (psi2.input_dim() != 2 * psi1.output_dim())
        throw InputError("psi2 must take the concatenation of two latent codes");
    if (psi2.output_dim() != 1) throw InputError("psi2 must produce a scalar");
}

SetEncoderNet make_set_encoder(const SetEncoderShape& shape, Rng& rng) {
    std::vector<std::size_t> d1{shape.scenario_dim};
    d1.insert(d1.end(), shape.psi1_hidden.begin(), shape.psi1_hidden.end());
    d1.push_back(shape.latent_dim);
    std::vector<std::size_t> d2{2 * shape.latent_dim};
    d2.insert(d2.end(), shape.psi2_hidden.begin(), shape.psi2_hidden.end());
    d2.push_back(1);
    SetEncoderNet net{DenseNet(d1, Activation::Linear), DenseNet(d2, Activation::Linear)};
    net.psi1.init_he_uniform(rng);
    net.psi2.init_he_uniform(rng);
    return net;
}

double forward_lossnet(const SetEncoderNet& net, const Matrix& scenarios, std::span<const double> omega,
                       LossNetTape& tape) {
    const std::size_t k = scenarios.rows();
    if (k == 0) throw InputError("loss-net needs at least one scenario");
    if (scenarios.cols() != net.scenario_dim() || omega.size() != net.scenario_dim())
        throw InputError("scenario dimension does not match the loss-net");
    const std::size_t latent = net.latent_dim();
    std::vector<double> head_in(2 * latent, 0.0);
    tape.scenarios.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        const auto code = net.psi1.forward(scenarios.row(i), tape.scenarios[i]);
        for (std::size_t j = 0; j < latent; ++j) head_in[j] += code[j];
    }
    for (std::size_t j = 0; j < latent; ++j) head_in[j] /= static_cast<double>(k);
    const auto code_omega = net.psi1.forward(omega, tape.omega);
    std::copy(code_omega.begin(), code_omega.end(), head_in.begin() + static_cast<std::ptrdiff_t>(latent));
    return net.psi2.forward(head_in, tape.head)[0];
}

double forward_lossnet(const SetEncoderNet& net, const Matrix& scenarios, std::span<const double> omega) {
    LossNetTape tape;
    return forward_lossnet(net, scenarios, omega, tape);
}

void backward_lossnet(const SetEncoderNet& net, const LossNetTape& tape, double upstream, LossNetGrad grad) {
    const bool want_params = !grad.params.empty();
    if (want_params && grad.params.size() != net.num_params())
        throw InputError("loss-net gradient has wrong length");
    const std::size_t k = tape.scenarios.size();
    const std::size_t latent = net.latent_dim();
    auto g1 = want_params ? grad.params.subspan(0, net.psi1.num_params()) : std::span<double>{};
    auto g2 = want_params ? grad.params.subspan(net.psi1.num_params()) : std::span<double>{};
    const double up[1] = {upstream};
    const auto d_head = net.psi2.backward(tape.head, up, g2);

    std::vector<double> d_code(latent);
    for (std::size_t j = 0; j < latent; ++j) d_code[j] = d_head[j] / static_cast<double>(k);
    if (grad.scenarios) *grad.scenarios = Matrix(k, net.scenario_dim());
    for (std::size_t i = 0; i < k; ++i) {
        const auto dz = net.psi1.backward(tape.scenarios[i], d_code, g1);
        if (grad.scenarios) std::copy(dz.begin(), dz.end(), grad.scenarios->row(i).begin());
    }
    std::vector<double> d_omega_code(d_head.begin() + static_cast<std::ptrdiff_t>(latent), d_head.end());
    const auto dw = net.psi1.backward(tape.omega, d_omega_code, g1);
    if (grad.omega) *grad.omega = dw;
}

std::vector<double> flatten_params(const SetEncoderNet& net) {
    std::vector<double> out(net.psi1.params().begin(), net.psi1.params().end());
    out.insert(out.end(), net.psi2.params().begin(), net.psi2.params().end());
    return out;
}

void assign_params(SetEncoderNet& net, std::span<const double> params) {
    if (params.size() != net.num_params()) throw InputError("parameter vector has wrong length");
    const std::size_t n1 = net.psi1.num_params();
    std::copy(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(n1), net.psi1.params().begin());
    std::copy(params.begin() + static_cast<std::ptrdiff_t>(n1), params.end(), net.psi2.params().begin());
}

void write_set_encoder(std::ostream& out, const SetEncoderNet& net) {
    out << "setenc\n";
    write_mlp(out, net.psi1);
    write_mlp(out, net.psi2);
}

SetEncoderNet read_set_encoder(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "setenc") throw IoError("expected a setenc header");
    SetEncoderNet net{read_mlp(in), read_mlp(in)};
    net.validate();
    return net;
}

}  // namespace csg::neural
