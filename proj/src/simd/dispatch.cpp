#include <atomic>
#include <cstdlib>
#include <string>

#include "csg/core/errors.hpp"
#include "csg/simd/kernels.hpp"

namespace csg::simd {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Level detect() noexcept {
    if (const char* env = std::getenv("CSG_SIMD_LEVEL")) {
        try {
            const Level requested = parse_level(env);
            if (level_supported(requested)) return requested;
        } catch (const InputError&) {
        }
    }
    if (level_supported(Level::Avx2)) return Level::Avx2;
    if (level_supported(Level::Neon)) return Level::Neon;
    return Level::Scalar;
}

std::atomic<const KernelTable*>& current() noexcept {
    static std::atomic<const KernelTable*> table{&kernels_for(detect())};
    return table;
}

std::atomic<Level>& current_level() noexcept {
    static std::atomic<Level> level{detect()};
    return level;
}

}  // namespace

bool level_supported(Level level) noexcept {
    switch (level) {
        case Level::Scalar: return true;
        case Level::Avx2: return detail::avx2_compiled && cpu_has_avx2();
        case Level::Neon: return detail::neon_compiled;
    }
    return false;
}

const KernelTable& kernels_for(Level level) {
    if (!level_supported(level)) throw InputError("SIMD level not supported: " + std::string(level_name(level)));
    switch (level) {
        case Level::Avx2: return detail::avx2_table;
        case Level::Neon: return detail::neon_table;
        case Level::Scalar: break;
    }
    return detail::scalar_table;
}

Level active_level() noexcept { return current_level().load(); }

void set_level(Level level) {
    const KernelTable& table = kernels_for(level);
    current().store(&table);
    current_level().store(level);
}

const KernelTable& kernels() noexcept { return *current().load(std::memory_order_relaxed); }

std::string_view level_name(Level level) noexcept {
    switch (level) {
        case Level::Scalar: return "scalar";
        case Level::Avx2: return "avx2";
        case Level::Neon: return "neon";
    }
    return "unknown";
}

Level parse_level(std::string_view name) {
    if (name == "scalar") return Level::Scalar;
    if (name == "avx2") return Level::Avx2;
    if (name == "neon") return Level::Neon;
    throw InputError("unknown SIMD level: " + std::string(name));
}

}  // namespace csg::simd
