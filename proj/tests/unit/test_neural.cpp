#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include "doctest.h"
#include "csg/core/errors.hpp"
#include "csg/neural/adam.hpp"
#include "csg/neural/dense_net.hpp"
#include "csg/neural/set_encoder.hpp"
#include "support/gradcheck.hpp"

using namespace csg;
using namespace csg::neural;

namespace {

/// Straight-line recomputation of a forward pass without the SIMD kernels.
std::vector<double> reference_forward(const DenseNet& net, std::vector<double> x) {
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        const std::size_t in = net.layer_dims()[l], out = net.layer_dims()[l + 1];
        std::vector<double> y(out);
        for (std::size_t i = 0; i < out; ++i) {
            double s = net.bias(l)[i];
            for (std::size_t j = 0; j < in; ++j) s += net.weights(l)[i * in + j] * x[j];
            const bool relu = l + 1 < net.num_layers() || net.output_activation() == Activation::Relu;
            y[i] = relu ? std::max(s, 0.0) : s;
        }
        x = std::move(y);
    }
    return x;
}

std::vector<double> random_input(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = standard_normal(rng);
    return v;
}

}  // namespace

TEST_CASE("identity linear layer") {
    DenseNet net({2, 2});
    net.weights(0)[0] = 1.0;
    net.weights(0)[3] = 1.0;
    const auto y = forward_mlp(net, std::vector<double>{1.0, 2.0});
    CHECK(y == std::vector<double>{1.0, 2.0});
}

TEST_CASE("hidden ReLU clamps") {
    DenseNet net({1, 1, 1});
    net.weights(0)[0] = 1.0;
    net.bias(0)[0] = -1.0;
    net.weights(1)[0] = 1.0;
    CHECK(forward_mlp(net, std::vector<double>{0.5})[0] == 0.0);
}

TEST_CASE("forward matches a straight-line recomputation") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        DenseNet net({5, 17, 9, 3}, trial % 2 ? Activation::Relu : Activation::Linear);
        net.init_he_uniform(rng);
        const auto x = random_input(rng, 5);
        const auto got = forward_mlp(net, x);
        const auto want = reference_forward(net, x);
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-12);
        if (net.output_activation() == Activation::Relu)
            for (double v : got) CHECK(v >= 0.0);
    }
}

TEST_CASE("dimension mismatch is an input error") {
    DenseNet net({3, 2});
    CHECK_THROWS_AS(forward_mlp(net, std::vector<double>{1.0}), InputError);
}

TEST_CASE("gradient of w squared through a linear layer") {
    // f(w) = (w x)^2 with x = 1; df/dw = 2w = 6 at w = 3.
    DenseNet net({1, 1});
    net.weights(0)[0] = 3.0;
    DenseNet::Tape tape;
    const double y = net.forward(std::vector<double>{1.0}, tape)[0];
    std::vector<double> grad(net.num_params(), 0.0);
    net.backward(tape, std::vector<double>{2.0 * y}, grad);
    CHECK(grad[0] == doctest::Approx(6.0));
    auto f = [&](double w) {
        DenseNet n2 = net;
        n2.weights(0)[0] = w;
        const double v = forward_mlp(n2, std::vector<double>{1.0})[0];
        return v * v;
    };
    CHECK((f(3.001) - f(2.999)) / 0.002 == doctest::Approx(6.0).epsilon(1e-9));
}

TEST_CASE("MLP parameter and input gradients match central differences") {
    Rng rng(17);
    const double h = 1e-5;
    int checked = 0;
    for (int trial = 0; trial < 10; ++trial) {
        DenseNet net({4, 8, 6, 3}, trial % 2 ? Activation::Relu : Activation::Linear);
        net.init_he_uniform(rng);
        for (std::size_t l = 0; l < net.num_layers(); ++l)
            for (std::size_t i = 0; i < net.layer_dims()[l + 1]; ++i) net.bias(l)[i] = 0.3 * standard_normal(rng);
        const auto x = random_input(rng, 4);
        const auto r = random_input(rng, 3);
        auto loss = [&](const DenseNet& n, const std::vector<double>& in) {
            const auto y = forward_mlp(n, in);
            double s = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) s += r[i] * y[i];
            return s;
        };
        DenseNet::Tape tape;
        net.forward(x, tape);
        if (!gradcheck::away_from_kinks(net, tape, 1e-3)) continue;
        std::vector<double> grad(net.num_params(), 0.0);
        const auto gx = net.backward(tape, r, grad);
        for (std::size_t p = 0; p < net.num_params(); ++p) {
            DenseNet plus = net, minus = net;
            plus.params()[p] += h;
            minus.params()[p] -= h;
            DenseNet::Tape tp, tm;
            plus.forward(x, tp);
            minus.forward(x, tm);
            if (gradcheck::relu_pattern(tp) != gradcheck::relu_pattern(tm)) continue;
            const double fd = (loss(plus, x) - loss(minus, x)) / (2 * h);
            CHECK(gradcheck::rel_err(grad[p], fd) <= 1e-4);
            ++checked;
        }
        for (std::size_t j = 0; j < x.size(); ++j) {
            auto xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            const double fd = (loss(net, xp) - loss(net, xm)) / (2 * h);
            CHECK(gradcheck::rel_err(gx[j], fd) <= 1e-4);
        }
    }
    CHECK(checked > 200);
}

TEST_CASE("loss-net with hand-set weights") {
    // psi1 = identity on R^2, psi2 sums the first half of its input.
    SetEncoderNet net{DenseNet({2, 2}), DenseNet({4, 1})};
    net.psi1.weights(0)[0] = 1.0;
    net.psi1.weights(0)[3] = 1.0;
    net.psi2.weights(0)[0] = 1.0;
    net.psi2.weights(0)[1] = 1.0;
    Matrix z{{1.0, 0.0}, {3.0, 2.0}};
    CHECK(forward_lossnet(net, z, std::vector<double>{7.0, -4.0}) == 3.0);
    CHECK_THROWS_AS(forward_lossnet(net, Matrix(0, 2), std::vector<double>{0.0, 0.0}), InputError);
}

TEST_CASE("loss-net K = 1 equals psi2 on the two codes") {
    Rng rng(4);
    SetEncoderShape shape{3, 5, {7}, {6}};
    const auto net = make_set_encoder(shape, rng);
    Matrix z(1, 3);
    for (double& v : z.data()) v = standard_normal(rng);
    const auto omega = random_input(rng, 3);
    auto head_in = net.psi1.forward(z.row(0));
    const auto c = net.psi1.forward(omega);
    head_in.insert(head_in.end(), c.begin(), c.end());
    CHECK(forward_lossnet(net, z, omega) == net.psi2.forward(head_in)[0]);
}

TEST_CASE("loss-net is permutation invariant") {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        SetEncoderShape shape{2, 8, {16}, {16}};
        const auto net = make_set_encoder(shape, rng);
        const std::size_t k = 1 + trial % 6;
        Matrix z(k, 2);
        for (double& v : z.data()) v = 3.0 * standard_normal(rng);
        const auto omega = random_input(rng, 2);
        const double base = forward_lossnet(net, z, omega);
        Matrix rev(0, 0);
        for (std::size_t i = k; i-- > 0;) rev.append_row(z.row(i));
        CHECK(std::abs(forward_lossnet(net, rev, omega) - base) <= 1e-6);
    }
}

TEST_CASE("loss-net gradients match central differences") {
    Rng rng(29);
    const double h = 1e-5;
    int checked = 0;
    for (int trial = 0; trial < 8; ++trial) {
        SetEncoderShape shape{3, 6, {8}, {8}};
        auto net = make_set_encoder(shape, rng);
        const std::size_t k = 1 + trial % 4;
        Matrix z(k, 3);
        for (double& v : z.data()) v = standard_normal(rng);
        const auto omega = random_input(rng, 3);
        LossNetTape tape;
        forward_lossnet(net, z, omega, tape);
        std::vector<double> gp(net.num_params(), 0.0);
        Matrix gz;
        std::vector<double> gw;
        backward_lossnet(net, tape, 1.0, {gp, &gz, &gw});
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t t = 0; t < 3; ++t) {
                Matrix zp = z, zm = z;
                zp(i, t) += h;
                zm(i, t) -= h;
                LossNetTape tp, tm;
                const double fp = forward_lossnet(net, zp, omega, tp);
                const double fm = forward_lossnet(net, zm, omega, tm);
                if (gradcheck::relu_pattern(tp) != gradcheck::relu_pattern(tm)) continue;
                CHECK(gradcheck::rel_err(gz(i, t), (fp - fm) / (2 * h)) <= 1e-4);
                ++checked;
            }
        }
        const auto flat = flatten_params(net);
        for (std::size_t p = 0; p < flat.size(); p += 3) {
            auto fp_params = flat, fm_params = flat;
            fp_params[p] += h;
            fm_params[p] -= h;
            SetEncoderNet np = net, nm = net;
            assign_params(np, fp_params);
            assign_params(nm, fm_params);
            LossNetTape tp, tm;
            const double fp = forward_lossnet(np, z, omega, tp);
            const double fm = forward_lossnet(nm, z, omega, tm);
            if (gradcheck::relu_pattern(tp) != gradcheck::relu_pattern(tm)) continue;
            CHECK(gradcheck::rel_err(gp[p], (fp - fm) / (2 * h)) <= 1e-4);
            ++checked;
        }
    }
    CHECK(checked > 100);
}

TEST_CASE("first Adam step") {
    AdamState st(1, AdamConfig{});
    std::vector<double> w{0.0};
    adam_step(st, w, std::vector<double>{1.0});
    CHECK(std::abs(w[0] + 0.001) < 1e-6);
}

TEST_CASE("zero gradient leaves parameters unchanged") {
    AdamState st(3, AdamConfig{});
    std::vector<double> w{1.0, -2.0, 3.0};
    adam_step(st, w, std::vector<double>(3, 0.0));
    CHECK(w == std::vector<double>{1.0, -2.0, 3.0});
}

TEST_CASE("Adam trajectories are deterministic and reject non-finite gradients") {
    std::vector<double> a{0.5, 0.5}, b{0.5, 0.5};
    AdamState sa(2, {}), sb(2, {});
    for (int i = 0; i < 50; ++i) {
        const std::vector<double> g{std::sin(i * 1.0), std::cos(i * 0.7)};
        adam_step(sa, a, g);
        adam_step(sb, b, g);
    }
    CHECK(std::memcmp(a.data(), b.data(), 2 * sizeof(double)) == 0);
    CHECK_THROWS_AS(adam_step(sa, a, std::vector<double>{NAN, 0.0}), TrainingError);
}

TEST_CASE("model files round-trip exactly") {
    Rng rng(6);
    DenseNet net({3, 5, 2}, Activation::Relu);
    net.init_he_uniform(rng);
    std::stringstream ss;
    write_mlp(ss, net);
    CHECK(ss.str().rfind("mlp 2 3 5 2 relu\n", 0) == 0);
    CHECK(read_mlp(ss) == net);

    SetEncoderShape shape{2, 4, {3}, {3}};
    const auto enc = make_set_encoder(shape, rng);
    std::stringstream s2;
    write_set_encoder(s2, enc);
    CHECK(read_set_encoder(s2) == enc);
}
