#include "csg/core/random.hpp"

#include <bit>

namespace csg {

std::uint64_t hash_values(std::uint64_t base, std::span<const double> values) noexcept {
    std::uint64_t h = mix_seed(base ^ 0xa0761d6478bd642fULL);
    for (double v : values) {
        // +0.0 and -0.0 hash alike.
        const double canonical = v == 0.0 ? 0.0 : v;
        h = mix_seed(h ^ std::bit_cast<std::uint64_t>(canonical));
    }
    return h;
}

}  // namespace csg
