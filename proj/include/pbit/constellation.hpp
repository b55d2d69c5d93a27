#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pbit/types.hpp"

namespace pbit {

/// Ordered complex constellation. Point k carries the bit label given by the
/// binary expansion of k, most significant bit first.
struct Constellation {
    std::vector<cplx> points;
    int bits_per_symbol = 0;

    std::size_t size() const { return points.size(); }

    /// Index of the nearest point in Euclidean distance; ties resolve to the
    /// lowest index.
    std::size_t nearest(cplx v) const {
        std::size_t best = 0;
        double best_d2 = std::norm(v - points[0]);
        for (std::size_t k = 1; k < points.size(); ++k) {
            const double d2 = std::norm(v - points[k]);
            if (d2 < best_d2) {
                best_d2 = d2;
                best = k;
            }
        }
        return best;
    }

    cplx map_bits(const std::uint8_t* bits) const {
        std::size_t k = 0;
        for (int j = 0; j < bits_per_symbol; ++j) k = (k << 1) | (bits[j] & 1u);
        return points[k];
    }

    void unmap_index(std::size_t k, std::uint8_t* bits_out) const {
        for (int j = 0; j < bits_per_symbol; ++j)
            bits_out[j] = static_cast<std::uint8_t>((k >> (bits_per_symbol - 1 - j)) & 1u);
    }
};

/// Gray-mapped QPSK with per-point energy |c|^2 = power. The first bit selects
/// the sign of the real part, the second the sign of the imaginary part, so
/// adjacent quadrants differ in exactly one bit.
inline Constellation gray_qpsk(double power) {
    if (power <= 0.0) throw std::invalid_argument("gray_qpsk: power must be positive");
    const double a = std::sqrt(power / 2.0);
    Constellation c;
    c.bits_per_symbol = 2;
    c.points = {
        cplx(+a, +a),  // 00
        cplx(+a, -a),  // 01
        cplx(-a, +a),  // 10
        cplx(-a, -a),  // 11
    };
    return c;
}

}  // namespace pbit
