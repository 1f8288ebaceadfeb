#pragma once

#include <cstddef>
#include <string_view>

namespace csg::simd {

enum class Level { Scalar, Avx2, Neon };

/// Function table for one instruction-set level. Element-wise kernels
/// (axpy, scale) are bit-identical across levels; reductions differ only in
/// summation order.
struct KernelTable {
    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*squared_distance)(const double* a, const double* b, std::size_t n);
    /// y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    /// x *= alpha
    void (*scale)(double alpha, double* x, std::size_t n);
    /// y[i] = bias[i] + dot(W.row(i), x) for a rows x cols row-major W.
    void (*gemv)(const double* w, const double* x, const double* bias, double* y,
                 std::size_t rows, std::size_t cols);
};

bool level_supported(Level level) noexcept;
const KernelTable& kernels_for(Level level);

/// Best supported level, unless CSG_SIMD_LEVEL (scalar|avx2|neon) overrides.
Level active_level() noexcept;
/// Throws InputError if the level is not supported on this machine.
void set_level(Level level);
const KernelTable& kernels() noexcept;

std::string_view level_name(Level level) noexcept;
Level parse_level(std::string_view name);

// Convenience wrappers over the active table.
inline double dot(const double* a, const double* b, std::size_t n) { return kernels().dot(a, b, n); }
inline double squared_distance(const double* a, const double* b, std::size_t n) {
    return kernels().squared_distance(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) { kernels().axpy(alpha, x, y, n); }
inline void scale(double alpha, double* x, std::size_t n) { kernels().scale(alpha, x, n); }
inline void gemv(const double* w, const double* x, const double* bias, double* y, std::size_t rows,
                 std::size_t cols) {
    kernels().gemv(w, x, bias, y, rows, cols);
}

namespace detail {
extern const KernelTable scalar_table;
extern const KernelTable avx2_table;
extern const KernelTable neon_table;
extern const bool avx2_compiled;
extern const bool neon_compiled;
}  // namespace detail

}  // namespace csg::simd
