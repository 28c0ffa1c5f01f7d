#ifndef GTNMF_RANDOM_HPP
#define GTNMF_RANDOM_HPP

#include <cstdint>
#include <random>

namespace gtnmf {

// mt19937_64 is fully specified by the standard, the library distributions
// are not; draws go through these helpers so a seed means the same numbers
// on every toolchain.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0, 1), 53 random bits.
    double uniform01() { return double(engine_() >> 11) * 0x1.0p-53; }

    // Uniform on (lo, hi].
    double uniform_open_closed(double lo, double hi) { return lo + (hi - lo) * (1.0 - uniform01()); }

    // Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace gtnmf

#endif
