#include <cmath>
#include <cstring>
#include <random>

#include "doctest.h"
#include "csg/core/errors.hpp"
#include "csg/solver/solver.hpp"
#include "support/oracles.hpp"

using namespace csg::solver;

TEST_CASE("single-variable bound") {
    LinearProgram lp{1, {1.0}, {{{1.0}, Sense::GreaterEqual, 1.0}}, {{0.0, 10.0}}};
    const auto r = solve_lp(lp);
    REQUIRE(r.status == Status::Optimal);
    CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.primal[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("contradictory constraints are infeasible") {
    LinearProgram lp{1, {0.0}, {{{1.0}, Sense::LessEqual, -1.0}}, {{0.0, kInfinity}}};
    CHECK(solve_lp(lp).status == Status::Infeasible);
}

TEST_CASE("unbounded ray is reported") {
    LinearProgram lp{2, {-1.0, 0.0}, {{{1.0, -1.0}, Sense::LessEqual, 1.0}}, {{0.0, kInfinity}, {0.0, kInfinity}}};
    CHECK(solve_lp(lp).status == Status::Unbounded);
}

TEST_CASE("free and upper-only variables") {
    // min x + y, x free with x >= -3 via a row, y <= 2 only.
    LinearProgram lp{2, {1.0, -1.0}, {{{1.0, 0.0}, Sense::GreaterEqual, -3.0}},
                     {{-kInfinity, kInfinity}, {-kInfinity, 2.0}}};
    const auto r = solve_lp(lp);
    REQUIRE(r.status == Status::Optimal);
    CHECK(r.primal[0] == doctest::Approx(-3.0));
    CHECK(r.primal[1] == doctest::Approx(2.0));
    CHECK(r.objective == doctest::Approx(-5.0));
}

TEST_CASE("phase one tolerates improving columns with only tiny pivots") {
    // Ten rows share a column whose entries sit below the pivot tolerance but
    // whose summed phase-one price is above the cost tolerance.
    LinearProgram lp{1, {1.0}, {}, {{0.0, kInfinity}}};
    for (int i = 0; i < 10; ++i) lp.constraints.push_back({{5e-10}, Sense::GreaterEqual, 1e-12});
    const auto r = solve_lp(lp);
    REQUIRE(r.status == Status::Optimal);
    CHECK(max_violation(lp, r.primal) <= 1e-9);
}

TEST_CASE("malformed dimensions are input errors") {
    LinearProgram lp{2, {1.0}, {}, {{0.0, 1.0}, {0.0, 1.0}}};
    CHECK_THROWS_AS(solve_lp(lp), csg::InputError);
    LinearProgram crossed{1, {1.0}, {}, {{2.0, 1.0}}};
    CHECK_THROWS_AS(solve_lp(crossed), csg::InputError);
}

TEST_CASE("random LPs match vertex enumeration") {
    std::mt19937_64 rng(20240611);
    int optimal = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto lp = oracle::random_lp(rng);
        const auto expected = oracle::vertex_enumeration(lp);
        const auto got = solve_lp(lp);
        CAPTURE(trial);
        if (!expected) {
            CHECK(got.status == Status::Infeasible);
            continue;
        }
        REQUIRE(got.status == Status::Optimal);
        ++optimal;
        CHECK(std::abs(got.objective - *expected) <= 1e-6);
        CHECK(max_violation(lp, got.primal) <= 1e-7);
        double recomputed = 0.0;
        for (std::size_t j = 0; j < lp.num_vars; ++j) recomputed += lp.objective[j] * got.primal[j];
        CHECK(std::abs(recomputed - got.objective) <= 1e-7);
    }
    CHECK(optimal >= 50);
}

TEST_CASE("solves are bit-for-bit repeatable") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto lp = oracle::random_lp(rng);
        const auto a = solve_lp(lp);
        const auto b = solve_lp(lp);
        CHECK(a.status == b.status);
        REQUIRE(a.primal.size() == b.primal.size());
        CHECK(std::memcmp(a.primal.data(), b.primal.data(), a.primal.size() * sizeof(double)) == 0);
    }
}

TEST_CASE("knapsack-style binary program") {
    MixedBinaryProgram mbp{{2, {-5.0, -4.0}, {{{1.0, 1.0}, Sense::LessEqual, 1.0}}, {{0.0, 1.0}, {0.0, 1.0}}}, {0, 1}};
    const auto r = solve_mbp(mbp);
    REQUIRE(r.status == Status::Optimal);
    CHECK(r.objective == doctest::Approx(-5.0));
    CHECK(r.primal[0] == 1.0);
    CHECK(r.primal[1] == 0.0);
}

TEST_CASE("no binaries reduces to the LP") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        MixedBinaryProgram mbp{oracle::random_lp(rng), {}};
        const auto a = solve_mbp(mbp);
        const auto b = solve_lp(mbp.base);
        CHECK(a.status == b.status);
        CHECK(a.primal == b.primal);
    }
}

TEST_CASE("random mixed-binary programs match exhaustive enumeration") {
    std::mt19937_64 rng(777);
    for (int trial = 0; trial < 50; ++trial) {
        const auto mbp = oracle::random_mbp(rng);
        const auto expected = oracle::binary_enumeration(mbp);
        const auto got = solve_mbp(mbp);
        CAPTURE(trial);
        if (!expected) {
            CHECK(got.status == Status::Infeasible);
            continue;
        }
        REQUIRE(got.status == Status::Optimal);
        CHECK(std::abs(got.objective - *expected) <= 1e-6);
        CHECK(max_violation(mbp.base, got.primal) <= 1e-7);
        for (std::size_t j : mbp.binary_indices) CHECK((got.primal[j] == 0.0 || got.primal[j] == 1.0));
        const auto relax = solve_lp(mbp.base);
        REQUIRE(relax.status == Status::Optimal);
        CHECK(relax.objective <= got.objective + 1e-9);
    }
}

TEST_CASE("LP dump lists one constraint per line") {
    LinearProgram lp{2, {1.0, 0.0}, {{{1.0, -2.0}, Sense::LessEqual, 3.0}}, {{0.0, 1.0}, {0.0, kInfinity}}};
    const std::string text = dump_lp(lp, {0});
    CHECK(text.find("1*x0 + -2*x1 <= 3") != std::string::npos);
    CHECK(text.find("binary\nx0") != std::string::npos);
}
