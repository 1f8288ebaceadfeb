#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "csg/core/random.hpp"

namespace csg::neural {

enum class Activation { Linear, Relu };

std::string activation_name(Activation a);
Activation parse_activation(const std::string& name);

/// Fully connected network with ReLU hidden layers. All weights and biases
/// live in one flat parameter vector: for each layer the out x in weight
/// matrix (row-major) followed by its bias.
class DenseNet {
public:
    /// Intermediate values recorded by a forward pass; `values[0]` is the
    /// input and `values[l + 1]` the post-activation output of layer l.
    struct Tape {
        std::vector<std::vector<double>> values;
    };

    DenseNet() = default;
    DenseNet(std::vector<std::size_t> layer_dims, Activation output = Activation::Linear);

    const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }
    std::size_t num_layers() const noexcept { return dims_.empty() ? 0 : dims_.size() - 1; }
    std::size_t input_dim() const noexcept { return dims_.front(); }
    std::size_t output_dim() const noexcept { return dims_.back(); }
    Activation output_activation() const noexcept { return output_; }
    void set_output_activation(Activation a) noexcept { output_ = a; }

    std::span<double> params() noexcept { return params_; }
    std::span<const double> params() const noexcept { return params_; }
    std::size_t num_params() const noexcept { return params_.size(); }

    double* weights(std::size_t layer) noexcept { return params_.data() + offsets_[layer]; }
    const double* weights(std::size_t layer) const noexcept { return params_.data() + offsets_[layer]; }
    double* bias(std::size_t layer) noexcept { return weights(layer) + dims_[layer + 1] * dims_[layer]; }
    const double* bias(std::size_t layer) const noexcept {
        return weights(layer) + dims_[layer + 1] * dims_[layer];
    }

    /// He-uniform weights, zero biases.
    void init_he_uniform(Rng& rng);

    std::vector<double> forward(std::span<const double> input) const;
    std::vector<double> forward(std::span<const double> input, Tape& tape) const;

    /// Adds d(loss)/d(params) into `param_grad` (skipped when it is empty)
    /// and returns d(loss)/d(input).
    /// The ReLU derivative at exactly zero is taken as zero.
    std::vector<double> backward(const Tape& tape, std::span<const double> upstream,
                                 std::span<double> param_grad) const;

    friend bool operator==(const DenseNet&, const DenseNet&) = default;

private:
    std::vector<std::size_t> dims_;
    std::vector<std::size_t> offsets_;
    std::vector<double> params_;
    Activation output_ = Activation::Linear;
};

std::vector<double> forward_mlp(const DenseNet& net, std::span<const double> input);

void write_mlp(std::ostream& out, const DenseNet& net);
DenseNet read_mlp(std::istream& in);

}  // namespace csg::neural
