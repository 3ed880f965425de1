#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace uep {

// Seeded pseudorandom source. The raw stream is std::mt19937_64 (whose output
// sequence is fixed by the standard); uniform doubles take the top 53 bits,
// Gaussians use the Marsaglia polar method with a cached spare. Identical seed
// and call sequence give a bit-identical stream on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double gaussian();

    // Uniform integer in [0, bound), unbiased via bitmask rejection.
    std::uint64_t below(std::uint64_t bound);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Deterministic seed splitting: seed = splitmix64(splitmix64(master ^ fnv1a(tag)) + index).
// Every worker/grid-point/chunk stream in the project derives its seed through
// this single rule, so the master seed fixes all randomness.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index);

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace uep
