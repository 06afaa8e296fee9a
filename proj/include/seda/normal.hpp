#pragma once

#include <cmath>
#include <stdexcept>

namespace seda {

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// Inverse standard-normal CDF by Newton iteration on erfc, started from a
// crude logistic approximation. Accurate to ~1e-14 for q in (0, 1).
inline double normal_quantile(double q) {
    if (!(q > 0) || !(q < 1))
        throw std::invalid_argument("normal_quantile: q must be in (0,1)");
    double x = std::log(q / (1.0 - q)) / 1.702;
    for (int it = 0; it < 60; ++it) {
        const double f = normal_cdf(x) - q;
        const double pdf =
            std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
        const double step = f / pdf;
        x -= step;
        if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    return x;
}

}  // namespace seda
