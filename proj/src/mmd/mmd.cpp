#include "csg/mmd/mmd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "csg/core/errors.hpp"
#include "csg/core/random.hpp"
#include "csg/simd/kernels.hpp"

namespace csg::mmd {
namespace {

double distance(const double* a, const double* b, std::size_t p) { return std::sqrt(simd::squared_distance(a, b, p)); }

void check_dims(std::size_t expected, std::size_t got) {
    if (expected != got) throw InputError("scenario dimension mismatch");
}

/// Sum of k(x_i, y_j) over all pairs, in row-major index order.
double kernel_sum(const Matrix& x, const Matrix& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < y.rows(); ++j) s -= distance(x.row(i).data(), y.row(j).data(), x.cols());
    return s;
}

/// Adds c * (x - y)/||x - y|| to g (zero when x == y).
void add_unit(double c, const double* x, const double* y, double* g, std::size_t p) {
    const double d = distance(x, y, p);
    if (d == 0.0) return;
    const double f = c / d;
    for (std::size_t t = 0; t < p; ++t) g[t] += f * (x[t] - y[t]);
}

bool canonical_first(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) return a.rows() < b.rows();
    const auto da = a.data(), db = b.data();
    return !std::lexicographical_compare(db.begin(), db.end(), da.begin(), da.end());
}

}  // namespace

double energy_kernel(std::span<const double> a, std::span<const double> b) {
    check_dims(a.size(), b.size());
    return -distance(a.data(), b.data(), a.size());
}

double mmd_loss(const ScenarioSet& scenarios, std::span<const double> omega) {
    const std::size_t k = scenarios.rows();
    if (k == 0) throw InputError("empty scenario set");
    check_dims(scenarios.cols(), omega.size());
    const double kk = static_cast<double>(k);
    double self = kernel_sum(scenarios, scenarios);
    double cross = 0.0;
    for (std::size_t i = 0; i < k; ++i) cross -= distance(omega.data(), scenarios.row(i).data(), omega.size());
    return self / (kk * kk) - 2.0 * cross / kk;
}

Matrix mmd_loss_grad(const ScenarioSet& scenarios, std::span<const double> omega) {
    const std::size_t k = scenarios.rows(), p = scenarios.cols();
    if (k == 0) throw InputError("empty scenario set");
    check_dims(p, omega.size());
    const double kk = static_cast<double>(k);
    Matrix g(k, p);
    for (std::size_t i = 0; i < k; ++i) {
        double* gi = g.row(i).data();
        const double* zi = scenarios.row(i).data();
        for (std::size_t j = 0; j < k; ++j) add_unit(-2.0 / (kk * kk), zi, scenarios.row(j).data(), gi, p);
        add_unit(2.0 / kk, zi, omega.data(), gi, p);
    }
    return g;
}

double mmd_sq(const ScenarioSet& a, const ScenarioSet& b) {
    if (a.rows() == 0 || b.rows() == 0) throw InputError("empty scenario set");
    check_dims(a.cols(), b.cols());
    const Matrix& x = canonical_first(a, b) ? a : b;
    const Matrix& y = &x == &a ? b : a;
    const double n = static_cast<double>(x.rows()), m = static_cast<double>(y.rows());
    return kernel_sum(x, x) / (n * n) + kernel_sum(y, y) / (m * m) - 2.0 * kernel_sum(x, y) / (n * m);
}

Matrix mmd_sq_grad(const ScenarioSet& a, const ScenarioSet& b) {
    check_dims(a.cols(), b.cols());
    const std::size_t p = a.cols();
    const double n = static_cast<double>(a.rows()), m = static_cast<double>(b.rows());
    Matrix g(a.rows(), p);
    std::vector<double> self(p), cross(p);
    // The two sums are accumulated separately so that identical samples
    // cancel exactly.
    for (std::size_t i = 0; i < a.rows(); ++i) {
        std::fill(self.begin(), self.end(), 0.0);
        std::fill(cross.begin(), cross.end(), 0.0);
        const double* ai = a.row(i).data();
        for (std::size_t j = 0; j < a.rows(); ++j) add_unit(1.0, ai, a.row(j).data(), self.data(), p);
        for (std::size_t j = 0; j < b.rows(); ++j) add_unit(1.0, ai, b.row(j).data(), cross.data(), p);
        for (std::size_t t = 0; t < p; ++t) g(i, t) = -2.0 / (n * n) * self[t] + 2.0 / (n * m) * cross[t];
    }
    return g;
}

ReductionResult reduce_scenarios_mmd(const ScenarioSet& sample, std::size_t k, std::size_t steps, double lr,
                                     std::uint64_t seed) {
    const std::size_t n = sample.rows();
    if (k == 0 || k > n) throw InputError("reduction size must be between 1 and the sample size");
    Rng rng(seed);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + uniform_index(rng, n - i)]);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());

    Matrix atoms(0, 0);
    for (std::size_t i : idx) atoms.append_row(sample.row(i));
    ReductionResult best{atoms, mmd_sq(atoms, sample)};
    if (!std::isfinite(best.objective)) throw TrainingError("non-finite MMD objective");
    for (std::size_t step = 0; step < steps; ++step) {
        const Matrix g = mmd_sq_grad(atoms, sample);
        simd::axpy(-lr, g.data().data(), atoms.data().data(), atoms.data().size());
        const double obj = mmd_sq(atoms, sample);
        if (!std::isfinite(obj)) throw TrainingError("non-finite MMD objective at step " + std::to_string(step));
        if (obj < best.objective) best = {atoms, obj};
    }
    return best;
}

}  // namespace csg::mmd
