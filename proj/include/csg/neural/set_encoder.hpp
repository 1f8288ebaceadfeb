#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "csg/core/matrix.hpp"
#include "csg/neural/dense_net.hpp"

namespace csg::neural {

/// Permutation-invariant loss network: psi2(mean_k psi1(zeta_k), psi1(omega)).
struct SetEncoderNet {
    DenseNet psi1;
    DenseNet psi2;

    std::size_t scenario_dim() const noexcept { return psi1.input_dim(); }
    std::size_t latent_dim() const noexcept { return psi1.output_dim(); }
    std::size_t num_params() const noexcept { return psi1.num_params() + psi2.num_params(); }

    /// Throws InputError unless psi2 consumes 2 * latent and emits a scalar.
    void validate() const;

    friend bool operator==(const SetEncoderNet&, const SetEncoderNet&) = default;
};

struct SetEncoderShape {
    std::size_t scenario_dim = 1;
    std::size_t latent_dim = 64;
    std::vector<std::size_t> psi1_hidden{64};
    std::vector<std::size_t> psi2_hidden{64};
};

SetEncoderNet make_set_encoder(const SetEncoderShape& shape, Rng& rng);

struct LossNetTape {
    std::vector<DenseNet::Tape> scenarios;
    DenseNet::Tape omega;
    DenseNet::Tape head;
};

double forward_lossnet(const SetEncoderNet& net, const Matrix& scenarios, std::span<const double> omega);
double forward_lossnet(const SetEncoderNet& net, const Matrix& scenarios, std::span<const double> omega,
                       LossNetTape& tape);

struct LossNetGrad {
    /// psi1 parameters followed by psi2 parameters; accumulated into. Empty
    /// to skip parameter gradients.
    std::span<double> params;
    /// Optional K x p gradient with respect to the scenarios (overwritten).
    Matrix* scenarios = nullptr;
    /// Optional gradient with respect to omega (overwritten).
    std::vector<double>* omega = nullptr;
};

void backward_lossnet(const SetEncoderNet& net, const LossNetTape& tape, double upstream, LossNetGrad grad);

/// Flat views over both sub-networks' parameters, psi1 first.
std::vector<double> flatten_params(const SetEncoderNet& net);
void assign_params(SetEncoderNet& net, std::span<const double> params);

void write_set_encoder(std::ostream& out, const SetEncoderNet& net);
SetEncoderNet read_set_encoder(std::istream& in);

}  // namespace csg::neural
