#pragma once

#include <cstdint>
#include <random>

namespace hypac {

// mt19937_64 with hand-rolled draws. The standard distributions are
// implementation-defined, which would break byte-identical reruns across
// toolchains; raw-bit mapping keeps every artifact reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t bits() { return eng_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform in [0, n)
    std::size_t uniform_index(std::size_t n) {
        if (n == 0) return 0;
        return static_cast<std::size_t>(bits() % n);
    }

    bool coin() { return bits() & 1u; }

private:
    std::mt19937_64 eng_;
};

} // namespace hypac
