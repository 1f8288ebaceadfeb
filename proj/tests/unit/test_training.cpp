#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "csg/core/errors.hpp"
#include "csg/core/random.hpp"
#include "csg/mmd/mmd.hpp"
#include "csg/training/training.hpp"
#include "csg/twostage/twostage.hpp"

using namespace csg;
using namespace csg::training;

namespace {

TrainConfig small_config(std::size_t k = 1) {
    TrainConfig cfg;
    cfg.k = k;
    cfg.task_hidden = {16, 16};
    cfg.latent = 16;
    cfg.psi1_hidden = {16};
    cfg.psi2_hidden = {16};
    cfg.epochs = 60;
    cfg.lossnet_epochs = 60;
    cfg.seed = 3;
    return cfg;
}

// omega = g(x) with no noise.
env::JointSample deterministic_sample(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    env::JointSample s{Matrix(n, 2), Matrix(n, 1)};
    for (std::size_t i = 0; i < n; ++i) {
        s.contexts(i, 0) = standard_normal(rng);
        s.contexts(i, 1) = standard_normal(rng);
        s.outcomes(i, 0) = 3.0 + std::sin(s.contexts(i, 0)) + 0.5 * s.contexts(i, 1);
    }
    return s;
}

double nv_loss(const twostage::NewsvendorParams& p, double y, double w) {
    return p.c * y - p.q * std::min(y, w) - p.r * std::max(y - w, 0.0);
}

LossModel random_loss_model(std::size_t p, std::uint64_t seed) {
    Rng rng(seed);
    LossModel m;
    m.net = neural::make_set_encoder({p, 8, {8}, {8}}, rng);
    m.in_shift.assign(p, 0.5);
    m.in_scale.assign(p, 2.0);
    m.target_mean = 1.0;
    m.target_scale = 3.0;
    return m;
}

LossDataset nv_dataset(std::size_t n, std::uint64_t sample_seed, const TaskNet& net) {
    const auto spec = twostage::ProblemSpec::make(twostage::ProblemKind::Newsvendor);
    const auto e = env::make_env(twostage::ProblemKind::Newsvendor, 1);
    return build_loss_dataset(spec, env::sample_joint(e, n, sample_seed), net, 0);
}

}  // namespace

TEST_CASE("single-sample overfit") {
    env::JointSample s{Matrix{{0.3, -0.2}}, Matrix{{7.0}}};
    TrainConfig cfg = small_config();
    cfg.epochs = 3000;
    cfg.patience = 3000;
    const TaskNet net = train_dcsg(s, cfg, false);
    const Matrix z = net.predict(s.contexts.row(0));
    CHECK(std::abs(z(0, 0) - 7.0) <= 1e-2);
}

TEST_CASE("both atoms approach a deterministic outcome") {
    const auto s = deterministic_sample(200, 1);
    TrainConfig cfg = small_config(2);
    cfg.epochs = 0;
    const TaskNet init = train_dcsg(s, cfg, false);
    cfg.epochs = 400;
    cfg.patience = 400;
    cfg.lr = 3e-3;
    FitReport rep;
    const TaskNet net = train_dcsg(s, cfg, false, &rep);
    const double before = empirical_mmd(init, s);
    const double after = empirical_mmd(net, s);
    MESSAGE("initial " << before << " final " << after);
    CHECK(after <= 0.1 * before);
    CHECK(rep.final_train == doctest::Approx(after).epsilon(0.5));
}

TEST_CASE("fixed seed gives identical weights") {
    const auto s = deterministic_sample(50, 2);
    const TrainConfig cfg = small_config(3);
    CHECK(train_dcsg(s, cfg, false) == train_dcsg(s, cfg, false));
    TrainConfig other = cfg;
    other.seed = 4;
    CHECK_FALSE(train_dcsg(s, other, false) == train_dcsg(s, cfg, false));
}

TEST_CASE("non-finite losses surface as training errors") {
    env::JointSample s{Matrix{{0.0}, {1.0}}, Matrix{{1e308}, {-1e308}}};
    CHECK_THROWS_AS(train_dcsg(s, small_config(), false), TrainingError);
}

TEST_CASE("config validation and round trip") {
    TrainConfig cfg = small_config(4);
    cfg.lambda = 0.125;
    cfg.lambda_relative = true;
    cfg.rounds = 7;
    const TrainConfig back = TrainConfig::from_map(cfg.to_map());
    CHECK(back.to_map() == cfg.to_map());
    auto bad = cfg.to_map();
    bad["k"] = "0";
    CHECK_THROWS_AS(TrainConfig::from_map(bad), InputError);
    bad = cfg.to_map();
    bad["holdout"] = "1";
    CHECK_THROWS_AS(TrainConfig::from_map(bad), InputError);
    bad = cfg.to_map();
    bad["lambda"] = "-1";
    CHECK_THROWS_AS(TrainConfig::from_map(bad), InputError);
    bad = cfg.to_map();
    bad["replay_window"] = "0";
    CHECK_THROWS_AS(TrainConfig::from_map(bad), InputError);
}

TEST_CASE("newsvendor loss records match the closed form") {
    const auto spec = twostage::ProblemSpec::make(twostage::ProblemKind::Newsvendor);
    const auto e = env::make_env(twostage::ProblemKind::Newsvendor, 1);
    const auto s = env::sample_joint(e, 60, 2);
    const TaskNet net = train_dcsg(s, small_config(), true);
    const auto data = build_loss_dataset(spec, s, net, 5);
    REQUIRE(data.records.size() == s.size());
    CHECK(data.failures == 0);
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        const auto& r = data.records[i];
        CHECK(r.generation == 5);
        CHECK(r.omega[0] == s.outcomes(i, 0));
        CHECK(std::abs(r.loss - nv_loss(spec.newsvendor, r.scenarios(0, 0), r.omega[0])) <= 1e-6);
    }
}

TEST_CASE("loss records never exceed the incumbent's true cost") {
    for (auto kind : {twostage::ProblemKind::Newsvendor, twostage::ProblemKind::CEP1}) {
        const auto spec = twostage::ProblemSpec::make(kind);
        const auto e = env::make_env(kind, 2);
        const auto s = env::sample_joint(e, 12, 3);
        TrainConfig cfg = small_config(2);
        cfg.epochs = 5;
        const TaskNet net = train_dcsg(s, cfg, true);
        const auto data = build_loss_dataset(spec, s, net, 0);
        REQUIRE(data.records.size() == s.size());
        for (const auto& r : data.records) {
            const auto saa = twostage::solve_zeta_saa(spec, r.scenarios);
            const double incumbent =
                twostage::first_stage_cost(spec, saa.first_stage) + twostage::subproblem_cost(spec, saa.first_stage, r.omega);
            CHECK(r.loss <= incumbent + 1e-6 * std::max(1.0, std::abs(incumbent)));
        }
    }
}

TEST_CASE("threaded loss generation matches the serial order") {
    const auto spec = twostage::ProblemSpec::make(twostage::ProblemKind::CEP1);
    const auto e = env::make_env(twostage::ProblemKind::CEP1, 4);
    const auto s = env::sample_joint(e, 16, 5);
    TrainConfig cfg = small_config();
    cfg.epochs = 3;
    const TaskNet net = train_dcsg(s, cfg, true);
    const auto a = build_loss_dataset(spec, s, net, 0, 1);
    const auto b = build_loss_dataset(spec, s, net, 0, 3);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].loss == b.records[i].loss);
        CHECK(a.records[i].omega == b.records[i].omega);
    }
}

TEST_CASE("loss-net learns a constant target") {
    Rng rng(8);
    LossDataset data;
    for (int i = 0; i < 60; ++i) {
        LossRecord r;
        r.scenarios = Matrix(3, 2);
        for (double& v : r.scenarios.data()) v = standard_normal(rng);
        r.omega = {standard_normal(rng), standard_normal(rng)};
        r.loss = 3.5;
        data.records.push_back(r);
    }
    TrainConfig cfg = small_config(3);
    FitReport rep;
    const LossModel m = train_lossnet(data, cfg, &rep);
    MESSAGE("holdout MSE " << rep.best_score);
    CHECK(rep.best_score <= 1e-6);
    CHECK(m.predict(data.records[0].scenarios, data.records[0].omega) == doctest::Approx(3.5).epsilon(1e-3));
}

TEST_CASE("loss-net fits newsvendor losses out of sample") {
    const auto e = env::make_env(twostage::ProblemKind::Newsvendor, 1);
    const auto s = env::sample_joint(e, 500, 2);
    TrainConfig cfg;
    cfg.epochs = 40;
    cfg.seed = 5;
    const TaskNet net = train_dcsg(s, cfg, true);
    const auto train = nv_dataset(500, 2, net);
    const auto test = nv_dataset(300, 77, net);
    const LossModel m = train_lossnet(train, cfg);
    double mean = 0.0;
    for (const auto& r : test.records) mean += r.loss;
    mean /= static_cast<double>(test.records.size());
    double sse = 0.0, sst = 0.0;
    for (const auto& r : test.records) {
        const double e2 = m.predict(r.scenarios, r.omega) - r.loss;
        sse += e2 * e2;
        sst += (r.loss - mean) * (r.loss - mean);
    }
    const double r2 = 1.0 - sse / sst;
    MESSAGE("out-of-sample R^2 " << r2);
    CHECK(r2 >= 0.8);
}

TEST_CASE("loss-net is invariant to scenario order") {
    const LossModel m = random_loss_model(3, 9);
    std::mt19937_64 gen(10);
    std::normal_distribution<double> normal;
    for (int probe = 0; probe < 100; ++probe) {
        Matrix z(5, 3);
        for (double& v : z.data()) v = normal(gen);
        const std::vector<double> w{normal(gen), normal(gen), normal(gen)};
        std::vector<std::size_t> perm(5);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), gen);
        Matrix zp(5, 3);
        for (std::size_t r = 0; r < 5; ++r)
            for (std::size_t j = 0; j < 3; ++j) zp(r, j) = z(perm[r], j);
        CHECK(std::abs(m.predict(z, w) - m.predict(zp, w)) <= 1e-6);
    }
}

TEST_CASE("composite objective decomposes into its two terms") {
    const auto s = deterministic_sample(30, 11);
    TrainConfig cfg = small_config(2);
    cfg.epochs = 2;
    const TaskNet net = train_dcsg(s, cfg, false);
    const LossModel m = random_loss_model(1, 12);
    const double lambda = 0.7;
    const auto c = composite_objective(net, m, s, lambda);
    double loss = 0.0, mmd = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const Matrix z = net.predict(s.contexts.row(i));
        loss += m.predict(z, s.outcomes.row(i));
        mmd += mmd::mmd_loss(z, s.outcomes.row(i));
    }
    CHECK(std::abs(c.loss_term - loss / 30.0) <= 1e-9);
    CHECK(std::abs(c.mmd_term - mmd / 30.0) <= 1e-9);
    CHECK(std::abs(c.total - (c.loss_term + lambda * c.mmd_term)) <= 1e-9);
}

TEST_CASE("composite gradient matches finite differences") {
    const auto s = deterministic_sample(20, 13);
    TrainConfig cfg = small_config(2);
    cfg.epochs = 2;
    TaskNet net = train_dcsg(s, cfg, false);
    const LossModel m = random_loss_model(1, 14);
    const double lambda = 0.3;
    const auto grad = composite_gradient(net, m, s, lambda);
    REQUIRE(grad.size() == net.net.num_params());
    std::mt19937_64 gen(15);
    int checked = 0;
    for (int probe = 0; probe < 40; ++probe) {
        const std::size_t j = gen() % grad.size();
        const double h = 1e-6, saved = net.net.params()[j];
        net.net.params()[j] = saved + h;
        const double up = composite_objective(net, m, s, lambda).total;
        net.net.params()[j] = saved - h;
        const double down = composite_objective(net, m, s, lambda).total;
        net.net.params()[j] = saved;
        const double fd = (up - down) / (2.0 * h);
        const double rel = std::abs(fd - grad[j]) / std::max({std::abs(fd), std::abs(grad[j]), 1e-6});
        CAPTURE(j);
        CHECK(rel <= 1e-3);
        ++checked;
    }
    CHECK(checked == 40);
}

TEST_CASE("huge lambda keeps the distributional fit") {
    const auto spec = twostage::ProblemSpec::make(twostage::ProblemKind::Newsvendor);
    const auto e = env::make_env(twostage::ProblemKind::Newsvendor, 1);
    const auto s = env::sample_joint(e, 120, 2);
    TrainConfig cfg = small_config(2);
    const TaskNet mmd_net = train_dcsg(s, cfg, true);
    const LossModel m = train_lossnet(build_loss_dataset(spec, s, mmd_net, 0), cfg);
    const double base = empirical_mmd(mmd_net, s);
    const TaskNet big = train_static(s, m, mmd_net, 1e9, cfg);
    CHECK(std::abs(empirical_mmd(big, s) - base) <= 0.05 * base);

    // Without the regulariser nothing bounds the distributional loss; the
    // value is only recorded.
    const TaskNet free = train_static(s, m, mmd_net, 0.0, cfg);
    const double unregularised = empirical_mmd(free, s);
    MESSAGE("lambda 0: empirical MMD " << unregularised << " vs distributional " << base);
    CHECK(std::isfinite(unregularised));
    CHECK(train_static(s, m, mmd_net, 0.0, cfg) == free);
}

TEST_CASE("relative lambda scales by the distributional loss") {
    const auto s = deterministic_sample(40, 16);
    TrainConfig cfg = small_config();
    cfg.epochs = 3;
    const TaskNet net = train_dcsg(s, cfg, false);
    cfg.lambda = 0.01;
    CHECK(resolve_lambda(cfg, net, s) == 0.01);
    cfg.lambda_relative = true;
    CHECK(resolve_lambda(cfg, net, s) == doctest::Approx(0.01 * empirical_mmd(net, s)).epsilon(1e-12));
}

TEST_CASE("zero rounds reproduce the static pipeline") {
    const auto spec = twostage::ProblemSpec::make(twostage::ProblemKind::Newsvendor);
    const auto e = env::make_env(twostage::ProblemKind::Newsvendor, 1);
    const auto s = env::sample_joint(e, 40, 2);
    TrainConfig cfg = small_config();
    cfg.rounds = 0;
    const TaskNet mmd_net = train_dcsg(s, cfg, true);
    const auto result = train_dynamic(spec, s, cfg, mmd_net);
    const LossModel m = train_lossnet(build_loss_dataset(spec, s, mmd_net, 0), cfg);
    const TaskNet manual = train_static(s, m, mmd_net, resolve_lambda(cfg, mmd_net, s), cfg);
    CHECK(result.task == manual);
    CHECK(result.lossnet == m);
    CHECK(result.mmd == mmd_net);
    CHECK(result.generations == std::vector<std::size_t>{0});
}

TEST_CASE("replay buffer keeps the distributional generation plus a window") {
    const auto spec = twostage::ProblemSpec::make(twostage::ProblemKind::Newsvendor);
    const auto e = env::make_env(twostage::ProblemKind::Newsvendor, 1);
    const auto s = env::sample_joint(e, 30, 2);
    TrainConfig cfg = small_config();
    cfg.epochs = 10;
    cfg.lossnet_epochs = 10;
    cfg.rounds = 4;
    cfg.replay_window = 3;
    const auto result = train_dynamic(spec, s, cfg);
    CHECK(result.warnings.empty());
    CHECK(result.buffer_size == 4);
    CHECK(result.generations == std::vector<std::size_t>{0, 2, 3, 4});

    cfg.replay_window = 1;
    cfg.rounds = 2;
    CHECK(train_dynamic(spec, s, cfg).generations == std::vector<std::size_t>{0, 2});
}

TEST_CASE("random search") {
    const std::vector<SearchDimension> space{{"x", 0.0, 1.0}, {"y", 0.0, 1.0}};
    auto dist = [](const HyperParams& h) { return std::hypot(h.at("x") - 0.3, h.at("y") - 0.7); };

    const auto one = hyperparam_search(space, dist, 1, 5);
    REQUIRE(one.trials.size() == 1);
    CHECK(one.best == one.trials[0].first);
    CHECK(one.best_score == one.trials[0].second);

    // 10th percentile of the score over the unit square, by a fine grid.
    std::vector<double> grid;
    for (int i = 0; i < 200; ++i)
        for (int j = 0; j < 200; ++j) grid.push_back(std::hypot((i + 0.5) / 200 - 0.3, (j + 0.5) / 200 - 0.7));
    std::nth_element(grid.begin(), grid.begin() + grid.size() / 10, grid.end());
    const double p10 = grid[grid.size() / 10];
    const auto res = hyperparam_search(space, dist, 100, 6);
    CHECK(res.trials.size() == 100);
    CHECK(res.best_score <= p10);
    for (const auto& [h, v] : res.trials) CHECK(res.best_score <= v);

    const auto again = hyperparam_search(space, dist, 100, 6);
    CHECK(again.best == res.best);
    CHECK(again.trials == res.trials);
}

TEST_CASE("random search ties keep the first draw and respect dimension types") {
    const std::vector<SearchDimension> space{{"lr", 1e-4, 1e-1, true, false}, {"width", 8, 64, false, true}};
    const auto res = hyperparam_search(space, [](const HyperParams&) { return 1.0; }, 20, 7);
    CHECK(res.best == res.trials[0].first);
    for (const auto& [h, v] : res.trials) {
        CHECK(h.at("lr") >= 1e-4);
        CHECK(h.at("lr") <= 1e-1);
        CHECK(h.at("width") == std::floor(h.at("width")));
        CHECK(h.at("width") >= 8);
        CHECK(h.at("width") <= 64);
    }
    CHECK_THROWS_AS(hyperparam_search(space, [](const HyperParams&) { return 0.0; }, 0, 1), InputError);
}

TEST_CASE("model files round trip exactly") {
    const auto s = deterministic_sample(20, 17);
    TrainConfig cfg = small_config(3);
    cfg.epochs = 3;
    const TaskNet net = train_dcsg(s, cfg, true);
    std::stringstream a;
    write_task_net(a, net);
    CHECK(read_task_net(a) == net);

    const LossModel m = random_loss_model(2, 18);
    std::stringstream b;
    write_loss_model(b, m);
    CHECK(read_loss_model(b) == m);

    std::stringstream broken("tasknet 2\n");
    CHECK_THROWS_AS(read_task_net(broken), IoError);
}
