#include "csg/neural/dense_net.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "csg/core/errors.hpp"
#include "csg/core/format.hpp"
#include "csg/simd/kernels.hpp"

namespace csg::neural {

std::string activation_name(Activation a) { return a == Activation::Relu ? "relu" : "linear"; }

Activation parse_activation(const std::string& name) {
    if (name == "relu") return Activation::Relu;
    if (name == "linear") return Activation::Linear;
    throw InputError("unknown activation: " + name);
}

DenseNet::DenseNet(std::vector<std::size_t> layer_dims, Activation output)
    : dims_(std::move(layer_dims)), output_(output) {
    if (dims_.size() < 2) throw InputError("a network needs at least input and output widths");
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
        if (dims_[l] == 0 || dims_[l + 1] == 0) throw InputError("layer widths must be positive");
        offsets_.push_back(total);
        total += dims_[l + 1] * dims_[l] + dims_[l + 1];
    }
    params_.assign(total, 0.0);
}

void DenseNet::init_he_uniform(Rng& rng) {
    for (std::size_t l = 0; l < num_layers(); ++l) {
        const double limit = std::sqrt(6.0 / static_cast<double>(dims_[l]));
        double* w = weights(l);
        for (std::size_t i = 0; i < dims_[l + 1] * dims_[l]; ++i) w[i] = (2.0 * uniform01(rng) - 1.0) * limit;
        std::fill(bias(l), bias(l) + dims_[l + 1], 0.0);
    }
}

std::vector<double> DenseNet::forward(std::span<const double> input) const {
    if (input.size() != input_dim())
        throw InputError("network input has length " + std::to_string(input.size()) + ", expected " +
                         std::to_string(input_dim()));
    std::vector<double> cur(input.begin(), input.end()), next;
    for (std::size_t l = 0; l < num_layers(); ++l) {
        next.resize(dims_[l + 1]);
        simd::gemv(weights(l), cur.data(), bias(l), next.data(), dims_[l + 1], dims_[l]);
        const bool relu = l + 1 < num_layers() || output_ == Activation::Relu;
        if (relu)
            for (double& v : next) v = v > 0.0 ? v : 0.0;
        cur.swap(next);
    }
    return cur;
}

std::vector<double> DenseNet::forward(std::span<const double> input, Tape& tape) const {
    if (input.size() != input_dim())
        throw InputError("network input has length " + std::to_string(input.size()) + ", expected " +
                         std::to_string(input_dim()));
    tape.values.resize(dims_.size());
    tape.values[0].assign(input.begin(), input.end());
    for (std::size_t l = 0; l < num_layers(); ++l) {
        std::vector<double>& out = tape.values[l + 1];
        out.resize(dims_[l + 1]);
        simd::gemv(weights(l), tape.values[l].data(), bias(l), out.data(), dims_[l + 1], dims_[l]);
        const bool relu = l + 1 < num_layers() || output_ == Activation::Relu;
        if (relu)
            for (double& v : out) v = v > 0.0 ? v : 0.0;
    }
    return tape.values.back();
}

std::vector<double> DenseNet::backward(const Tape& tape, std::span<const double> upstream,
                                       std::span<double> param_grad) const {
    if (tape.values.size() != dims_.size()) throw InputError("tape does not belong to this network");
    if (upstream.size() != output_dim()) throw InputError("upstream gradient has wrong length");
    const bool want_params = !param_grad.empty();
    if (want_params && param_grad.size() != params_.size())
        throw InputError("parameter gradient has wrong length");
    std::vector<double> delta(upstream.begin(), upstream.end()), prev;
    for (std::size_t l = num_layers(); l-- > 0;) {
        const std::size_t in = dims_[l], out = dims_[l + 1];
        const bool relu = l + 1 < num_layers() || output_ == Activation::Relu;
        if (relu)
            for (std::size_t i = 0; i < out; ++i)
                if (!(tape.values[l + 1][i] > 0.0)) delta[i] = 0.0;
        double* gw = want_params ? param_grad.data() + offsets_[l] : nullptr;
        double* gb = want_params ? gw + out * in : nullptr;
        const double* w = weights(l);
        const double* x = tape.values[l].data();
        prev.assign(in, 0.0);
        for (std::size_t i = 0; i < out; ++i) {
            if (delta[i] == 0.0) continue;
            if (want_params) {
                simd::axpy(delta[i], x, gw + i * in, in);
                gb[i] += delta[i];
            }
            simd::axpy(delta[i], w + i * in, prev.data(), in);
        }
        delta.swap(prev);
    }
    return delta;
}

std::vector<double> forward_mlp(const DenseNet& net, std::span<const double> input) { return net.forward(input); }

void write_mlp(std::ostream& out, const DenseNet& net) {
    out << "mlp " << net.num_layers();
    for (std::size_t d : net.layer_dims()) out << ' ' << d;
    out << ' ' << activation_name(net.output_activation()) << '\n';
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        const std::size_t in = net.layer_dims()[l], outw = net.layer_dims()[l + 1];
        const double* w = net.weights(l);
        for (std::size_t i = 0; i < outw; ++i) {
            for (std::size_t j = 0; j < in; ++j) out << (j ? " " : "") << format_double(w[i * in + j]);
            out << '\n';
        }
        const double* b = net.bias(l);
        for (std::size_t i = 0; i < outw; ++i) out << (i ? " " : "") << format_double(b[i]);
        out << '\n';
    }
}

namespace {

std::vector<double> read_values(std::istream& in, std::size_t expected) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("model file truncated");
    std::istringstream fields(line);
    std::vector<double> values;
    std::string token;
    while (fields >> token) values.push_back(parse_double(token));
    if (values.size() != expected)
        throw IoError("model line has " + std::to_string(values.size()) + " values, expected " +
                         std::to_string(expected));
    return values;
}

}  // namespace

DenseNet read_mlp(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("model file is empty");
    std::istringstream header(line);
    std::string tag;
    std::size_t layers = 0;
    header >> tag >> layers;
    if (tag != "mlp" || !header || layers == 0) throw IoError("bad mlp header: " + line);
    std::vector<std::size_t> dims(layers + 1);
    for (std::size_t& d : dims)
        if (!(header >> d)) throw IoError("bad mlp header: " + line);
    std::string act;
    if (!(header >> act)) throw IoError("mlp header lacks an output activation");
    DenseNet net(dims, parse_activation(act));
    for (std::size_t l = 0; l < layers; ++l) {
        double* w = net.weights(l);
        for (std::size_t i = 0; i < dims[l + 1]; ++i) {
            const auto row = read_values(in, dims[l]);
            std::copy(row.begin(), row.end(), w + i * dims[l]);
        }
        const auto b = read_values(in, dims[l + 1]);
        std::copy(b.begin(), b.end(), net.bias(l));
    }
    return net;
}

}  // namespace csg::neural
