#include "uep/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace uep {

double ebn0_to_sigma2(const SnrSpec& spec) {
    if (!(spec.rate > 0.0))
        throw std::invalid_argument("ebn0_to_sigma2: rate must be positive");
    return 1.0 / (2.0 * spec.rate * std::pow(10.0, spec.ebn0_db / 10.0));
}

void awgn_transmit(const Vec& x, double sigma2, Rng& rng, Vec& y) {
    if (sigma2 < 0.0)
        throw std::invalid_argument("awgn_transmit: sigma2 must be nonnegative");
    y.resize(x.size());
    if (sigma2 == 0.0) {
        y = x;
        return;
    }
    const double sigma = std::sqrt(sigma2);
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + sigma * rng.gaussian();
}

Vec awgn_transmit(const Vec& x, double sigma2, Rng& rng) {
    Vec y;
    awgn_transmit(x, sigma2, rng, y);
    return y;
}

}  // namespace uep
