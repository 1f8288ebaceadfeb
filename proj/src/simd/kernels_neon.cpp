#include "csg/simd/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)
#include <arm_neon.h>

namespace csg::simd::detail {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double s = n >= 4 ? vaddvq_f64(vaddq_f64(acc0, acc1)) : 0.0;
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sqdist_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float64x2_t d0 = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        const float64x2_t d1 = vsubq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
        acc0 = vfmaq_f64(acc0, d0, d0);
        acc1 = vfmaq_f64(acc1, d1, d1);
    }
    double s = n >= 4 ? vaddvq_f64(vaddq_f64(acc0, acc1)) : 0.0;
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
    for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void scale_neon(double alpha, double* x, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
    for (; i < n; ++i) x[i] = alpha * x[i];
}

void gemv_neon(const double* w, const double* x, const double* bias, double* y, std::size_t rows,
               std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) y[r] = bias[r] + dot_neon(w + r * cols, x, cols);
}

}  // namespace

const KernelTable neon_table{dot_neon, sqdist_neon, axpy_neon, scale_neon, gemv_neon};
const bool neon_compiled = true;

}  // namespace csg::simd::detail

#else

namespace csg::simd::detail {
const KernelTable neon_table = scalar_table;
const bool neon_compiled = false;
}  // namespace csg::simd::detail

#endif
