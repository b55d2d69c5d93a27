#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

#include "pbit/types.hpp"

namespace pbit {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Deterministic random stream. Streams are derived from a master seed and a
/// path of counters, so any (trial, grid-point, purpose) combination maps to
/// its own independent stream regardless of evaluation order.
class RngStream {
  public:
    explicit RngStream(std::uint64_t key) : engine_(key) {}

    static RngStream derive(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
        std::uint64_t key = detail::splitmix64(master);
        for (std::uint64_t id : path) key = detail::splitmix64(key ^ detail::splitmix64(id));
        return RngStream(key);
    }

    /// Uniform double in [0, 1). Derived from raw engine output so the value
    /// sequence does not depend on the standard library's distributions.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1].
    double uniform01_open_low() { return 1.0 - uniform01(); }

    /// Circularly symmetric complex Gaussian with E|z|^2 = 1
    /// (variance 1/2 per real component).
    cplx cn01() {
        const double u1 = uniform01_open_low();
        const double u2 = uniform01();
        const double r = std::sqrt(-std::log(u1));
        return std::polar(r, 2.0 * std::numbers::pi * u2);
    }

    /// CSCG with E|z|^2 = var.
    cplx cn(double var) { return std::sqrt(var) * cn01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Uniform index in [0, n).
    std::size_t pick(std::size_t n) {
        auto i = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

    /// Uniform phase point on the complex unit circle.
    cplx unit_phase() { return std::polar(1.0, 2.0 * std::numbers::pi * uniform01()); }

    std::mt19937_64& engine() { return engine_; }

  private:
    std::mt19937_64 engine_;
};

/// Stream purposes used by the simulation harness; kept in one place so the
/// derivation paths stay unique.
namespace stream_id {
inline constexpr std::uint64_t channels = 1;
inline constexpr std::uint64_t rounding = 2;
inline constexpr std::uint64_t lis_state = 3;
inline constexpr std::uint64_t symbols = 4;
inline constexpr std::uint64_t noise = 5;
inline constexpr std::uint64_t random_phases = 6;
}  // namespace stream_id

}  // namespace pbit
