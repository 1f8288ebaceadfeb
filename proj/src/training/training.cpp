#include "csg/training/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "csg/core/errors.hpp"
#include "csg/core/format.hpp"
#include "csg/core/random.hpp"
#include "csg/mmd/mmd.hpp"
#include "csg/neural/adam.hpp"
#include "csg/twostage/twostage.hpp"

namespace csg::training {

namespace {

// Seed streams used below.
enum : std::uint64_t { kInit = 11, kSplit, kShuffle, kLossInit, kLossSplit, kLossShuffle, kRound = 1000 };

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> hold;
};

// Seeded holdout split. Tiny samples train on everything and select on the
// training score.
Split split_holdout(std::size_t n, double fraction, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::size_t n_hold = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 0.5));
    if (n < 5) n_hold = 0;
    Split s;
    s.hold.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_hold));
    s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_hold), idx.end());
    std::sort(s.hold.begin(), s.hold.end());
    return s;
}

struct FitSettings {
    std::size_t epochs;
    std::size_t batch_size;
    double lr;
    std::size_t patience;
    std::uint64_t shuffle_seed;
    const char* what;
};

// Minibatch Adam with best-snapshot selection and early stopping. The
// initial parameters count as epoch 0, so a fit never returns something that
// scores worse than its starting point. sample_grad adds one sample's
// gradient into grad and returns its loss; score returns a mean loss over
// the given indices.
template <typename SampleGrad, typename Score, typename Sync>
FitReport fit_adam(std::span<double> params, const Split& split, const FitSettings& fs, SampleGrad sample_grad,
                   Score score, Sync sync) {
    const auto& select = split.hold.empty() ? split.train : split.hold;
    auto checked_score = [&](std::size_t epoch) {
        const double s = score(select);
        if (!std::isfinite(s))
            throw TrainingError(std::string(fs.what) + " diverged: non-finite selection score at epoch " +
                                std::to_string(epoch));
        return s;
    };

    FitReport report;
    std::vector<double> best(params.begin(), params.end());
    report.best_score = checked_score(0);
    neural::AdamState adam(params.size(), {fs.lr});
    std::vector<double> grad(params.size());
    std::vector<std::size_t> order = split.train;
    Rng rng(fs.shuffle_seed);
    std::size_t since_best = 0;

    for (std::size_t epoch = 1; epoch <= fs.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += fs.batch_size) {
            const std::size_t end = std::min(order.size(), start + fs.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            double loss = 0.0;
            for (std::size_t b = start; b < end; ++b) loss += sample_grad(order[b], std::span<double>(grad));
            if (!std::isfinite(loss))
                throw TrainingError(std::string(fs.what) + " diverged: non-finite loss at epoch " +
                                    std::to_string(epoch) + ", batch starting at " + std::to_string(start));
            const double inv = 1.0 / static_cast<double>(end - start);
            for (double& g : grad) g *= inv;
            neural::adam_step(adam, params, grad);
            sync();
        }
        report.epochs_run = epoch;
        const double s = checked_score(epoch);
        if (s < report.best_score) {
            report.best_score = s;
            report.best_epoch = epoch;
            std::copy(params.begin(), params.end(), best.begin());
            since_best = 0;
        } else if (++since_best >= fs.patience) {
            break;
        }
    }
    std::copy(best.begin(), best.end(), params.begin());
    sync();
    report.final_train = score(split.train);
    return report;
}

void check_sample(const env::JointSample& sample) {
    sample.validate();
    if (sample.size() == 0) throw InputError("training sample is empty");
}

std::string join_sizes(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> out;
    for (const auto& part : split(text, ',')) {
        const long long v = parse_int(trim(part));
        if (v < 1) throw InputError("layer widths must be positive");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

bool parse_bool(const std::string& text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw InputError("expected a boolean, found '" + text + "'");
}

}  // namespace

void TrainConfig::validate() const {
    if (k < 1) throw InputError("K must be at least 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InputError("lambda must be finite and nonnegative");
    if (!(holdout > 0.0 && holdout < 1.0)) throw InputError("holdout fraction must lie in (0, 1)");
    if (replay_window < 1) throw InputError("replay window must be at least 1");
    if (batch_size < 1) throw InputError("batch size must be at least 1");
    if (!(lr > 0.0) || !(lossnet_lr > 0.0)) throw InputError("learning rates must be positive");
    if (patience < 1) throw InputError("patience must be at least 1");
    if (latent < 1) throw InputError("latent width must be at least 1");
    if (jobs < 1) throw InputError("jobs must be at least 1");
}

std::map<std::string, std::string> TrainConfig::to_map() const {
    return {
        {"k", std::to_string(k)},
        {"lambda", format_double(lambda)},
        {"lambda_relative", lambda_relative ? "true" : "false"},
        {"epochs", std::to_string(epochs)},
        {"batch_size", std::to_string(batch_size)},
        {"lr", format_double(lr)},
        {"seed", std::to_string(seed)},
        {"holdout", format_double(holdout)},
        {"patience", std::to_string(patience)},
        {"rounds", std::to_string(rounds)},
        {"replay_window", std::to_string(replay_window)},
        {"standardize_targets", standardize_targets ? "true" : "false"},
        {"task_hidden", join_sizes(task_hidden)},
        {"latent", std::to_string(latent)},
        {"psi1_hidden", join_sizes(psi1_hidden)},
        {"psi2_hidden", join_sizes(psi2_hidden)},
        {"lossnet_epochs", std::to_string(lossnet_epochs)},
        {"lossnet_lr", format_double(lossnet_lr)},
    };
}

TrainConfig TrainConfig::from_map(const std::map<std::string, std::string>& values) {
    TrainConfig c;
    auto get = [&](const char* key) -> const std::string* {
        const auto it = values.find(key);
        return it == values.end() ? nullptr : &it->second;
    };
    auto size = [](const std::string& s) {
        const long long v = parse_int(s);
        if (v < 0) throw InputError("expected a nonnegative integer, found '" + s + "'");
        return static_cast<std::size_t>(v);
    };
    if (auto v = get("k")) c.k = size(*v);
    if (auto v = get("lambda")) c.lambda = parse_double(*v);
    if (auto v = get("lambda_relative")) c.lambda_relative = parse_bool(*v);
    if (auto v = get("epochs")) c.epochs = size(*v);
    if (auto v = get("batch_size")) c.batch_size = size(*v);
    if (auto v = get("lr")) c.lr = parse_double(*v);
    if (auto v = get("seed")) c.seed = size(*v);
    if (auto v = get("holdout")) c.holdout = parse_double(*v);
    if (auto v = get("patience")) c.patience = size(*v);
    if (auto v = get("rounds")) c.rounds = size(*v);
    if (auto v = get("replay_window")) c.replay_window = size(*v);
    if (auto v = get("standardize_targets")) c.standardize_targets = parse_bool(*v);
    if (auto v = get("task_hidden")) c.task_hidden = parse_sizes(*v);
    if (auto v = get("latent")) c.latent = size(*v);
    if (auto v = get("psi1_hidden")) c.psi1_hidden = parse_sizes(*v);
    if (auto v = get("psi2_hidden")) c.psi2_hidden = parse_sizes(*v);
    if (auto v = get("lossnet_epochs")) c.lossnet_epochs = size(*v);
    if (auto v = get("lossnet_lr")) c.lossnet_lr = parse_double(*v);
    if (auto v = get("jobs")) c.jobs = size(*v);
    c.validate();
    return c;
}

TaskNet train_dcsg(const env::JointSample& sample, const TrainConfig& cfg, bool relu_output, FitReport* report) {
    cfg.validate();
    check_sample(sample);
    Rng init(derive_seed(cfg.seed, kInit));
    TaskNet net = make_task_net(sample.contexts.cols(), cfg.k, cfg.task_hidden, sample.outcomes, relu_output, init);

    auto sample_grad = [&](std::size_t i, std::span<double> grad) {
        TaskNet::Tape tape;
        const Matrix z = net.predict(sample.contexts.row(i), tape);
        const auto omega = sample.outcomes.row(i);
        net.backward(tape, mmd::mmd_loss_grad(z, omega), grad);
        return mmd::mmd_loss(z, omega);
    };
    auto score = [&](const std::vector<std::size_t>& idx) {
        double s = 0.0;
        for (std::size_t i : idx) s += mmd::mmd_loss(net.predict(sample.contexts.row(i)), sample.outcomes.row(i));
        return s / static_cast<double>(idx.size());
    };
    const Split split = split_holdout(sample.size(), cfg.holdout, derive_seed(cfg.seed, kSplit));
    const FitReport r = fit_adam(net.net.params(), split,
                                 {cfg.epochs, cfg.batch_size, cfg.lr, cfg.patience, derive_seed(cfg.seed, kShuffle),
                                  "distributional training"},
                                 sample_grad, score, [] {});
    if (report) *report = r;
    return net;
}

double empirical_mmd(const TaskNet& net, const env::JointSample& sample) {
    check_sample(sample);
    double s = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i)
        s += mmd::mmd_loss(net.predict(sample.contexts.row(i)), sample.outcomes.row(i));
    return s / static_cast<double>(sample.size());
}

LossDataset build_loss_dataset(const twostage::ProblemSpec& spec, const env::JointSample& sample, const TaskNet& net,
                               std::size_t generation, std::size_t jobs) {
    check_sample(sample);
    if (sample.outcomes.cols() != spec.scenario_dim()) throw InputError("sample outcome dimension does not match problem");
    const std::size_t n = sample.size();
    std::vector<std::optional<LossRecord>> rows(n);
    std::vector<std::string> errors(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr fatal;
    std::atomic<bool> stop{false};

    auto worker = [&] {
        for (std::size_t i = next++; i < n && !stop; i = next++) {
            try {
                LossRecord rec;
                rec.scenarios = net.predict(sample.contexts.row(i));
                rec.omega.assign(sample.outcomes.row(i).begin(), sample.outcomes.row(i).end());
                rec.generation = generation;
                const auto saa = twostage::solve_zeta_saa(spec, rec.scenarios);
                rec.loss = twostage::opt_search(spec, rec.scenarios, saa.value, rec.omega).loss;
                if (!std::isfinite(rec.loss)) throw SolverError("non-finite optimistic loss");
                rows[i] = std::move(rec);
            } catch (const SolverError& e) {
                errors[i] = e.what();
            } catch (...) {
                // Anything else is a bug or bad input; stop every worker.
                if (!stop.exchange(true)) fatal = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::min(std::max<std::size_t>(jobs, 1), n);
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (fatal) std::rethrow_exception(fatal);

    LossDataset out;
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i]) {
            out.records.push_back(std::move(*rows[i]));
        } else {
            ++out.failures;
            out.failure_messages.push_back("sample " + std::to_string(i) + ": " + errors[i]);
        }
    }
    return out;
}

LossModel train_lossnet(const LossDataset& data, const TrainConfig& cfg, FitReport* report, const LossModel* warm) {
    cfg.validate();
    const auto& recs = data.records;
    if (recs.size() < 10) throw InputError("loss-net training needs at least 10 records");
    const std::size_t p = recs.front().omega.size();
    for (const auto& r : recs)
        if (r.omega.size() != p || r.scenarios.cols() != p || r.scenarios.rows() == 0 || !std::isfinite(r.loss))
            throw InputError("inconsistent loss records");

    LossModel model;
    if (warm) {
        warm->validate();
        if (warm->scenario_dim() != p) throw InputError("warm-start loss model has a different outcome dimension");
        model = *warm;
    } else {
        Matrix omegas(0, 0);
        for (const auto& r : recs) omegas.append_row(r.omega);
        column_moments(omegas, model.in_shift, model.in_scale);
        if (cfg.standardize_targets) {
            Matrix targets(recs.size(), 1);
            for (std::size_t i = 0; i < recs.size(); ++i) targets(i, 0) = recs[i].loss;
            std::vector<double> m, s;
            column_moments(targets, m, s);
            model.target_mean = m[0];
            model.target_scale = s[0];
        }
        Rng init(derive_seed(cfg.seed, kLossInit));
        model.net = neural::make_set_encoder({p, cfg.latent, cfg.psi1_hidden, cfg.psi2_hidden}, init);
        // A zero output layer starts every prediction at the target mean, so a
        // constant target is already fitted exactly and never drifts.
        auto& head = model.net.psi2;
        const std::size_t last = head.num_layers() - 1;
        const auto& dims = head.layer_dims();
        std::fill_n(head.weights(last), dims[last] * dims[last + 1], 0.0);
        std::fill_n(head.bias(last), dims[last + 1], 0.0);
    }

    // Normalised inputs and targets, computed once.
    std::vector<Matrix> z(recs.size());
    std::vector<std::vector<double>> w(recs.size());
    std::vector<double> t(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        z[i] = recs[i].scenarios;
        for (std::size_t r = 0; r < z[i].rows(); ++r)
            for (std::size_t j = 0; j < p; ++j) z[i](r, j) = (z[i](r, j) - model.in_shift[j]) / model.in_scale[j];
        w[i] = recs[i].omega;
        for (std::size_t j = 0; j < p; ++j) w[i][j] = (w[i][j] - model.in_shift[j]) / model.in_scale[j];
        t[i] = (recs[i].loss - model.target_mean) / model.target_scale;
    }

    std::vector<double> params = neural::flatten_params(model.net);
    auto sample_grad = [&](std::size_t i, std::span<double> grad) {
        neural::LossNetTape tape;
        const double e = neural::forward_lossnet(model.net, z[i], w[i], tape) - t[i];
        neural::backward_lossnet(model.net, tape, 2.0 * e, {grad, nullptr, nullptr});
        return e * e;
    };
    auto score = [&](const std::vector<std::size_t>& idx) {
        double s = 0.0;
        for (std::size_t i : idx) {
            const double e = neural::forward_lossnet(model.net, z[i], w[i]) - t[i];
            s += e * e;
        }
        return s / static_cast<double>(idx.size()) * model.target_scale * model.target_scale;
    };
    const Split split = split_holdout(recs.size(), cfg.holdout, derive_seed(cfg.seed, kLossSplit));
    const FitReport r = fit_adam(std::span<double>(params), split,
                                 {cfg.lossnet_epochs, cfg.batch_size, cfg.lossnet_lr, cfg.patience,
                                  derive_seed(cfg.seed, kLossShuffle), "loss-net training"},
                                 sample_grad, score, [&] { neural::assign_params(model.net, params); });
    if (report) *report = r;
    return model;
}

CompositeTerms composite_objective(const TaskNet& net, const LossModel& lossnet, const env::JointSample& sample,
                                   double lambda) {
    check_sample(sample);
    CompositeTerms c;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const Matrix z = net.predict(sample.contexts.row(i));
        c.loss_term += lossnet.predict(z, sample.outcomes.row(i));
        c.mmd_term += mmd::mmd_loss(z, sample.outcomes.row(i));
    }
    c.loss_term /= static_cast<double>(sample.size());
    c.mmd_term /= static_cast<double>(sample.size());
    c.total = c.loss_term + lambda * c.mmd_term;
    return c;
}

namespace {

// Composite loss of one sample; fills dz with its gradient in the scenarios
// when requested.
double composite_sample(const TaskNet& net, const LossModel& lossnet, std::span<const double> x,
                        std::span<const double> omega, double lambda, TaskNet::Tape& tape, Matrix* dz) {
    const Matrix z = net.predict(x, tape);
    const double mmd_term = mmd::mmd_loss(z, omega);
    if (!dz) return lossnet.predict(z, omega) + lambda * mmd_term;
    const double loss_term = lossnet.predict_grad(z, omega, *dz);
    if (lambda != 0.0) {
        const Matrix g = mmd::mmd_loss_grad(z, omega);
        for (std::size_t j = 0; j < g.data().size(); ++j) dz->data()[j] += lambda * g.data()[j];
    }
    return loss_term + lambda * mmd_term;
}

}  // namespace

std::vector<double> composite_gradient(const TaskNet& net, const LossModel& lossnet, const env::JointSample& sample,
                                       double lambda) {
    check_sample(sample);
    std::vector<double> grad(net.net.num_params(), 0.0);
    for (std::size_t i = 0; i < sample.size(); ++i) {
        TaskNet::Tape tape;
        Matrix dz;
        composite_sample(net, lossnet, sample.contexts.row(i), sample.outcomes.row(i), lambda, tape, &dz);
        net.backward(tape, dz, grad);
    }
    for (double& g : grad) g /= static_cast<double>(sample.size());
    return grad;
}

TaskNet train_static(const env::JointSample& sample, const LossModel& lossnet, const TaskNet& init, double lambda,
                     const TrainConfig& cfg, FitReport* report) {
    cfg.validate();
    check_sample(sample);
    init.validate();
    lossnet.validate();
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InputError("lambda must be finite and nonnegative");
    if (init.p != lossnet.scenario_dim()) throw InputError("task-net and loss-net disagree on the outcome dimension");
    TaskNet net = init;

    auto objective = [&](std::size_t i, Matrix& dz, TaskNet::Tape& tape, bool want_grad) {
        return composite_sample(net, lossnet, sample.contexts.row(i), sample.outcomes.row(i), lambda, tape,
                                want_grad ? &dz : nullptr);
    };
    auto sample_grad = [&](std::size_t i, std::span<double> grad) {
        TaskNet::Tape tape;
        Matrix dz;
        const double v = objective(i, dz, tape, true);
        net.backward(tape, dz, grad);
        return v;
    };
    auto score = [&](const std::vector<std::size_t>& idx) {
        double s = 0.0;
        TaskNet::Tape tape;
        Matrix dz;
        for (std::size_t i : idx) s += objective(i, dz, tape, false);
        return s / static_cast<double>(idx.size());
    };
    const Split split = split_holdout(sample.size(), cfg.holdout, derive_seed(cfg.seed, kSplit));
    const FitReport r = fit_adam(net.net.params(), split,
                                 {cfg.epochs, cfg.batch_size, cfg.lr, cfg.patience,
                                  derive_seed(cfg.seed, kShuffle + 100), "task-net training"},
                                 sample_grad, score, [] {});
    if (report) *report = r;
    return net;
}

double resolve_lambda(const TrainConfig& cfg, const TaskNet& mmd_net, const env::JointSample& sample) {
    return cfg.lambda_relative ? cfg.lambda * empirical_mmd(mmd_net, sample) : cfg.lambda;
}

namespace {

LossDataset merge(const std::vector<LossDataset>& generations) {
    LossDataset all;
    for (const auto& g : generations) {
        all.records.insert(all.records.end(), g.records.begin(), g.records.end());
        all.failures += g.failures;
    }
    return all;
}

}  // namespace

PipelineResult train_dynamic(const twostage::ProblemSpec& spec, const env::JointSample& sample,
                             const TrainConfig& cfg, std::optional<TaskNet> mmd_net) {
    cfg.validate();
    check_sample(sample);
    PipelineResult out;
    out.mmd = mmd_net ? std::move(*mmd_net) : train_dcsg(sample, cfg, spec.nonnegative_outcomes());
    if (out.mmd.k != cfg.k) throw InputError("distributional net has a different K than the config");
    out.lambda = resolve_lambda(cfg, out.mmd, sample);

    std::vector<LossDataset> buffer;
    buffer.push_back(build_loss_dataset(spec, sample, out.mmd, 0, cfg.jobs));
    out.failures = buffer.back().failures;
    out.lossnet = train_lossnet(buffer.back(), cfg);
    out.task = train_static(sample, out.lossnet, out.mmd, out.lambda, cfg);

    for (std::size_t round = 1; round <= cfg.rounds; ++round) {
        TrainConfig rc = cfg;
        rc.seed = derive_seed(cfg.seed, kRound + round);
        try {
            LossDataset gen = build_loss_dataset(spec, sample, out.task, round, cfg.jobs);
            const std::size_t failures = gen.failures;
            std::vector<LossDataset> next = buffer;
            next.push_back(std::move(gen));
            // The MMD generation always stays; dynamic ones form a window.
            if (next.size() > cfg.replay_window + 1)
                next.erase(next.begin() + 1, next.end() - static_cast<std::ptrdiff_t>(cfg.replay_window));
            LossModel lossnet = train_lossnet(merge(next), rc, nullptr, &out.lossnet);
            TaskNet task = train_static(sample, lossnet, out.task, out.lambda, rc);
            buffer = std::move(next);
            out.lossnet = std::move(lossnet);
            out.task = std::move(task);
            out.failures += failures;
        } catch (const TrainingError& e) {
            out.warnings.push_back("round " + std::to_string(round) + " aborted: " + e.what());
            break;
        } catch (const SolverError& e) {
            out.warnings.push_back("round " + std::to_string(round) + " aborted: " + e.what());
            break;
        }
    }
    for (const auto& g : buffer)
        if (!g.records.empty()) out.generations.push_back(g.records.front().generation);
    out.buffer_size = buffer.size();
    return out;
}

SearchResult hyperparam_search(const std::vector<SearchDimension>& space,
                               const std::function<double(const HyperParams&)>& score, std::size_t budget,
                               std::uint64_t seed) {
    if (budget < 1) throw InputError("search budget must be at least 1");
    for (const auto& d : space) {
        if (!(d.lo <= d.hi)) throw InputError("search dimension '" + d.name + "' has lo > hi");
        if (d.log_scale && !(d.lo > 0.0)) throw InputError("log-scale dimension '" + d.name + "' needs lo > 0");
    }
    Rng rng(seed);
    SearchResult result;
    for (std::size_t b = 0; b < budget; ++b) {
        HyperParams draw;
        for (const auto& d : space) {
            const double u = uniform01(rng);
            double v;
            if (d.integer) {
                const double span = std::floor(d.hi) - std::ceil(d.lo) + 1.0;
                v = std::min(std::ceil(d.lo) + std::floor(u * span), std::floor(d.hi));
            } else if (d.log_scale) {
                v = std::exp(std::log(d.lo) + u * (std::log(d.hi) - std::log(d.lo)));
            } else {
                v = d.lo + u * (d.hi - d.lo);
            }
            draw[d.name] = v;
        }
        const double s = score(draw);
        if (b == 0 || s < result.best_score) {
            result.best_score = s;
            result.best = draw;
        }
        result.trials.emplace_back(std::move(draw), s);
    }
    return result;
}

}  // namespace csg::training
