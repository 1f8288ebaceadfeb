#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "csg/core/matrix.hpp"
#include "csg/neural/dense_net.hpp"
#include "csg/neural/set_encoder.hpp"

namespace csg::training {

/// Task-net f: context -> K x p scenarios. The MLP has a linear head whose
/// K*p outputs are mapped per outcome dimension through shift + scale * raw
/// (so training starts at the outcome scale) and then, for demand problems,
/// clamped by a ReLU.
struct TaskNet {
    neural::DenseNet net;
    std::size_t k = 1;
    std::size_t p = 1;
    std::vector<double> shift;
    std::vector<double> scale;
    bool relu_output = false;

    struct Tape {
        neural::DenseNet::Tape net;
        std::vector<double> pre;  // shift + scale * raw, before the clamp
    };

    std::size_t context_dim() const noexcept { return net.input_dim(); }
    Matrix predict(std::span<const double> x) const;
    Matrix predict(std::span<const double> x, Tape& tape) const;
    /// Adds d(loss)/d(params) into `param_grad` given d(loss)/d(scenarios).
    void backward(const Tape& tape, const Matrix& upstream, std::span<double> param_grad) const;
    void validate() const;

    friend bool operator==(const TaskNet&, const TaskNet&) = default;
};

/// He-initialised task-net whose output map is calibrated to the per-dimension
/// mean and standard deviation of `outcomes`.
TaskNet make_task_net(std::size_t context_dim, std::size_t k, const std::vector<std::size_t>& hidden,
                      const Matrix& outcomes, bool relu_output, Rng& rng);

/// Loss-net E_psi with input and target normalisation: scenarios and omega
/// are standardised per dimension before the set encoder, and its output is
/// mapped back through target_mean + target_scale * out.
struct LossModel {
    neural::SetEncoderNet net;
    std::vector<double> in_shift;
    std::vector<double> in_scale;
    double target_mean = 0.0;
    double target_scale = 1.0;

    std::size_t scenario_dim() const noexcept { return in_shift.size(); }
    double predict(const Matrix& scenarios, std::span<const double> omega) const;
    /// Prediction plus its gradient with respect to the scenarios.
    double predict_grad(const Matrix& scenarios, std::span<const double> omega, Matrix& d_scenarios) const;
    void validate() const;

    friend bool operator==(const LossModel&, const LossModel&) = default;
};

void write_task_net(std::ostream& out, const TaskNet& net);
TaskNet read_task_net(std::istream& in);
void write_loss_model(std::ostream& out, const LossModel& model);
LossModel read_loss_model(std::istream& in);

/// Per-column mean and standard deviation; a zero spread maps to scale 1.
void column_moments(const Matrix& m, std::vector<double>& mean, std::vector<double>& scale);

}  // namespace csg::training
