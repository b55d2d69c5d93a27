#pragma once

#include <cmath>
#include <stdexcept>

namespace pbit {

/// Binary entropy in bits, with the limit convention 0*log(0) = 0.
inline double binary_entropy(double rho) {
    if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("binary_entropy: rho outside [0,1]");
    if (rho == 0.0 || rho == 1.0) return 0.0;
    return -rho * std::log2(rho) - (1.0 - rho) * std::log2(1.0 - rho);
}

/// Inverse of the binary entropy on the branch rho in [0.5, 1], where larger
/// rho corresponds to a higher activity rate. Bisection to 1e-10.
inline double entropy_inverse(double rate_bits) {
    if (rate_bits < 0.0 || rate_bits > 1.0)
        throw std::invalid_argument("entropy_inverse: rate outside [0,1]");
    double lo = 0.5, hi = 1.0;  // H is decreasing on [0.5, 1]
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (binary_entropy(mid) >= rate_bits)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace pbit
