// Reference kernels. Built with -ffp-contract=off so no FMA is fused in.
#include "csg/simd/kernels.hpp"

namespace csg::simd::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sqdist_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void scale_scalar(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] = alpha * x[i];
}

void gemv_scalar(const double* w, const double* x, const double* bias, double* y, std::size_t rows,
                 std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) y[r] = bias[r] + dot_scalar(w + r * cols, x, cols);
}

}  // namespace

const KernelTable scalar_table{dot_scalar, sqdist_scalar, axpy_scalar, scale_scalar, gemv_scalar};

}  // namespace csg::simd::detail
