#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tbiq {

// Deterministic random source. The engine is std::mt19937_64 (bit-exact by
// the standard); all distributions are implemented here rather than taken
// from <random> so that streams do not depend on the standard library
// implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t bits() { return eng_(); }

    // uniform double in [0, 1)
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // uniform integer in [0, n), n >= 1
    std::uint64_t uniform_int(std::uint64_t n);

    // standard normal via Box-Muller, one spare cached
    double gauss();

    // Poisson with the given mean; exact sampler (Knuth for small means,
    // Hoermann's PTRD transformed rejection for large ones)
    std::int64_t poisson(double mean);

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Counter-based sub-seed derivation: independent streams per purpose tag and
// index, so adding a consumer never perturbs another purpose's stream.
std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose, std::uint64_t index = 0);

} // namespace tbiq
