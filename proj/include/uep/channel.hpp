#pragma once

#include "uep/matrix.hpp"
#include "uep/rng.hpp"

namespace uep {

// Operating point of the AWGN channel: energy per bit over noise density (dB)
// and code rate in bits per channel use.
struct SnrSpec {
    double ebn0_db = 0.0;
    double rate = 1.0;
};

// Per-dimension noise variance: sigma^2 = 1 / (2 * R * 10^(EbN0_dB/10)).
// Throws std::invalid_argument for a nonpositive rate.
double ebn0_to_sigma2(const SnrSpec& spec);

// y = x + n with n i.i.d. N(0, sigma2). Fresh draw every call.
// Throws std::invalid_argument for negative sigma2.
Vec awgn_transmit(const Vec& x, double sigma2, Rng& rng);
void awgn_transmit(const Vec& x, double sigma2, Rng& rng, Vec& y);

}  // namespace uep
