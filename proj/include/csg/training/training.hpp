#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "csg/environments/environment.hpp"
#include "csg/training/models.hpp"
#include "csg/twostage/problem.hpp"

namespace csg::training {

struct TrainConfig {
    std::size_t k = 1;
    /// Absolute MMD weight, or the relative weight (lambda = lambda *
    /// L_MMD of the distributional net) when `lambda_relative` is set.
    double lambda = 1.0;
    bool lambda_relative = false;
    std::size_t epochs = 300;
    std::size_t batch_size = 32;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    double holdout = 0.2;
    std::size_t patience = 20;
    std::size_t rounds = 3;         // dynamic iterations T
    std::size_t replay_window = 3;  // dynamic generations kept besides the MMD one
    bool standardize_targets = true;
    std::vector<std::size_t> task_hidden{64, 64};
    std::size_t latent = 64;
    std::vector<std::size_t> psi1_hidden{64};
    std::vector<std::size_t> psi2_hidden{64};
    std::size_t lossnet_epochs = 300;
    double lossnet_lr = 1e-3;
    std::size_t jobs = 1;

    void validate() const;
    std::map<std::string, std::string> to_map() const;
    /// Reads the keys written by to_map; unknown keys are ignored so a run
    /// config can carry other sections.
    static TrainConfig from_map(const std::map<std::string, std::string>& values);
};

/// Per-fit diagnostics.
struct FitReport {
    std::size_t epochs_run = 0;
    std::size_t best_epoch = 0;
    double best_score = 0.0;   // holdout score (training score without a holdout)
    double final_train = 0.0;  // training objective of the returned snapshot
};

/// Distributional generator: Adam on the mean per-sample MMD loss. Returns
/// the best-holdout snapshot.
TaskNet train_dcsg(const env::JointSample& sample, const TrainConfig& cfg, bool relu_output,
                   FitReport* report = nullptr);

/// Mean per-sample MMD loss of the net over the sample.
double empirical_mmd(const TaskNet& net, const env::JointSample& sample);

struct LossRecord {
    Matrix scenarios;
    std::vector<double> omega;
    double loss = 0.0;
    std::size_t generation = 0;
};

struct LossDataset {
    std::vector<LossRecord> records;
    std::size_t failures = 0;
    std::vector<std::string> failure_messages;
};

/// Optimistic task losses of the net's scenarios on every sample; solver
/// failures skip the row and are counted. Evaluations run on `jobs` threads
/// and are merged in sample order.
LossDataset build_loss_dataset(const twostage::ProblemSpec& spec, const env::JointSample& sample, const TaskNet& net,
                               std::size_t generation, std::size_t jobs = 1);

/// MSE fit of a loss model (at least 10 records). Targets are standardised
/// when cfg.standardize_targets; report scores are in raw units. With `warm`
/// the fit continues from that model's weights and keeps its normalisation.
LossModel train_lossnet(const LossDataset& data, const TrainConfig& cfg, FitReport* report = nullptr,
                        const LossModel* warm = nullptr);

struct CompositeTerms {
    double loss_term = 0.0;  // mean loss-net prediction
    double mmd_term = 0.0;   // mean MMD loss
    double total = 0.0;      // loss_term + lambda * mmd_term
};

CompositeTerms composite_objective(const TaskNet& net, const LossModel& lossnet, const env::JointSample& sample,
                                   double lambda);
/// Gradient of composite_objective(...).total with respect to the task-net
/// parameters, with the loss model frozen.
std::vector<double> composite_gradient(const TaskNet& net, const LossModel& lossnet, const env::JointSample& sample,
                                       double lambda);

/// Adam on the composite objective through the frozen loss model, starting
/// from `init`.
TaskNet train_static(const env::JointSample& sample, const LossModel& lossnet, const TaskNet& init, double lambda,
                     const TrainConfig& cfg, FitReport* report = nullptr);

/// Absolute MMD weight for a config given the distributional net.
double resolve_lambda(const TrainConfig& cfg, const TaskNet& mmd_net, const env::JointSample& sample);

struct PipelineResult {
    TaskNet mmd;
    TaskNet task;
    LossModel lossnet;
    double lambda = 0.0;
    /// Generation tags present in the final replay buffer.
    std::vector<std::size_t> generations;
    std::size_t buffer_size = 0;
    std::size_t failures = 0;
    std::vector<std::string> warnings;
};

/// Static pipeline (rounds = 0) or the dynamic refinement loop. Round t
/// regenerates losses with the current net, keeps the MMD generation plus
/// the last `replay_window` dynamic generations, refits the loss model and
/// continues training the net from its current weights.
PipelineResult train_dynamic(const twostage::ProblemSpec& spec, const env::JointSample& sample,
                             const TrainConfig& cfg, std::optional<TaskNet> mmd_net = std::nullopt);

struct SearchDimension {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    bool log_scale = false;
    bool integer = false;
};

using HyperParams = std::map<std::string, double>;

struct SearchResult {
    HyperParams best;
    double best_score = 0.0;
    std::vector<std::pair<HyperParams, double>> trials;
};

/// Seeded random search; the lowest score wins and ties keep the earlier draw.
SearchResult hyperparam_search(const std::vector<SearchDimension>& space,
                               const std::function<double(const HyperParams&)>& score, std::size_t budget,
                               std::uint64_t seed);

}  // namespace csg::training
