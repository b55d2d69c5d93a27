#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pbit/constellation.hpp"
#include "pbit/entropy.hpp"
#include "pbit/rng.hpp"
#include "pbit/types.hpp"

namespace pbit {

/// All scalar system parameters plus the symbol constellation.
///
/// Conventions used throughout: CN(0,v) puts variance v/2 on each real
/// component; every constellation point satisfies |c|^2 = P so a block of
/// symbols meets the power budget with equality.
struct SystemConfig {
    Index M = 1;       // receiver antennas
    Index N = 1;       // reflecting elements
    Index L = 2;       // slots per block (slot 1 carries the reference symbol)
    double beta = 1.0;      // amplitude reflection coefficient
    double rho = 0.5;       // element-on probability
    double P = 1.0;         // transmit power budget (linear)
    double sigma_w2 = 1.0;  // noise variance (linear); 0 allowed for noiseless runs
    Constellation constellation;
    cplx reference_symbol;

    static SystemConfig qpsk(Index M, Index N, Index L, double beta, double rho, double P,
                             double sigma_w2) {
        SystemConfig cfg;
        cfg.M = M;
        cfg.N = N;
        cfg.L = L;
        cfg.beta = beta;
        cfg.rho = rho;
        cfg.P = P;
        cfg.sigma_w2 = sigma_w2;
        cfg.constellation = gray_qpsk(P);
        cfg.reference_symbol = cfg.constellation.points[0];  // all-zero bit label
        cfg.validate();
        return cfg;
    }

    void validate() const {
        if (M < 1 || N < 1 || L < 1) throw std::invalid_argument("config: dimensions must be positive");
        if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("config: beta outside [0,1]");
        if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("config: rho outside [0,1]");
        if (P <= 0.0) throw std::invalid_argument("config: P must be positive");
        if (sigma_w2 < 0.0) throw std::invalid_argument("config: sigma_w2 must be nonnegative");
        const std::size_t sz = constellation.size();
        if (sz < 2 || (sz & (sz - 1)) != 0)
            throw std::invalid_argument("config: constellation size must be a power of two");
        for (const cplx& c : constellation.points)
            if (std::abs(std::norm(c) - P) > 1e-9 * P)
                throw std::invalid_argument("config: constellation points must have |c|^2 = P");
        bool ref_ok = false;
        for (const cplx& c : constellation.points)
            if (c == reference_symbol) ref_ok = true;
        if (!ref_ok) throw std::invalid_argument("config: reference symbol not in constellation");
    }

    Index data_bits_per_block() const {
        return (L - 1) * constellation.bits_per_symbol;
    }
};

/// Target per-element information rate and the matched on-probability,
/// r = H(rho) with rho taken on the [0.5, 1] branch.
struct RateInfo {
    double r = 0.0;
    double rho = 1.0;

    static RateInfo from_rate(double r) { return {r, entropy_inverse(r)}; }
    static RateInfo from_rho(double rho) { return {binary_entropy(rho), rho}; }
};

/// Unit-modulus phase-shift vector and its homogenized form [theta; t].
struct PhaseShifts {
    CVec theta;
    cplx t = cplx(1.0, 0.0);

    static PhaseShifts from_vector(CVec th, cplx t = cplx(1.0, 0.0)) {
        PhaseShifts p;
        p.theta = std::move(th);
        p.t = t;
        p.validate();
        return p;
    }

    static PhaseShifts from_phases(const RVec& radians) {
        CVec th(radians.size());
        for (Index n = 0; n < radians.size(); ++n) th[n] = std::polar(1.0, radians[n]);
        PhaseShifts p;
        p.theta = std::move(th);
        return p;
    }

    static PhaseShifts all_ones(Index n) {
        PhaseShifts p;
        p.theta = CVec::Ones(n);
        return p;
    }

    static PhaseShifts random(Index n, RngStream& rng) {
        PhaseShifts p;
        p.theta = CVec(n);
        for (Index i = 0; i < n; ++i) p.theta[i] = rng.unit_phase();
        return p;
    }

    void validate() const {
        for (Index n = 0; n < theta.size(); ++n)
            if (std::abs(std::abs(theta[n]) - 1.0) > 1e-9)
                throw std::invalid_argument("phase shifts: |theta_n| != 1");
        if (std::abs(std::abs(t) - 1.0) > 1e-9)
            throw std::invalid_argument("phase shifts: |t| != 1");
    }

    CVec theta_bar() const {
        CVec bar(theta.size() + 1);
        bar.head(theta.size()) = theta;
        bar[theta.size()] = t;
        return bar;
    }
};

/// Channel triple plus the derived coefficient matrix A = beta*G*diag(theta)*D_h.
/// A is only valid for the phases it was computed with; set_phases refreshes it.
struct ChannelState {
    CMat G;    // M x N, surface -> receiver
    CVec h_r;  // N, user -> surface
    CVec h_d;  // M, user -> receiver direct
    CMat A;    // M x N, empty until phases are applied
    bool has_A = false;

    Eigen::DiagonalWrapper<const CVec> D_h() const { return h_r.asDiagonal(); }

    void set_phases(const PhaseShifts& phases, double beta) {
        phases.validate();
        if (phases.theta.size() != G.cols())
            throw std::invalid_argument("set_phases: theta length mismatch");
        A = beta * G * phases.theta.asDiagonal() * h_r.asDiagonal();
        has_A = true;
    }
};

/// One transmission block: surface state, user symbols, noisy observation and
/// the composite channel z with Y = z x^T + W.
struct BlockSignals {
    BVec s;  // N, {0,1}
    CVec x;  // L
    CMat Y;  // M x L
    CVec z;  // M, z = A s + h_d
};

/// i.i.d. CN(0,1) channels for all three links.
inline ChannelState sample_channels(const SystemConfig& cfg, RngStream& rng) {
    ChannelState ch;
    ch.G = CMat(cfg.M, cfg.N);
    for (Index i = 0; i < cfg.M; ++i)
        for (Index j = 0; j < cfg.N; ++j) ch.G(i, j) = rng.cn01();
    ch.h_r = CVec(cfg.N);
    for (Index j = 0; j < cfg.N; ++j) ch.h_r[j] = rng.cn01();
    ch.h_d = CVec(cfg.M);
    for (Index i = 0; i < cfg.M; ++i) ch.h_d[i] = rng.cn01();
    return ch;
}

/// Element states drawn i.i.d. Bernoulli(rho).
inline BVec sample_lis_state(const SystemConfig& cfg, RngStream& rng) {
    BVec s(cfg.N);
    for (Index n = 0; n < cfg.N; ++n) s[n] = rng.bernoulli(cfg.rho) ? 1 : 0;
    return s;
}

/// Map a data bit stream onto a block: slot 1 is the reference symbol, the
/// remaining L-1 slots carry the bits. The stream length must be exactly
/// (L-1) * bits_per_symbol.
inline CVec modulate(const std::vector<std::uint8_t>& bits, const SystemConfig& cfg) {
    const int bps = cfg.constellation.bits_per_symbol;
    if (static_cast<Index>(bits.size()) != (cfg.L - 1) * bps)
        throw std::invalid_argument("modulate: bit stream length mismatch");
    CVec x(cfg.L);
    x[0] = cfg.reference_symbol;
    for (Index l = 1; l < cfg.L; ++l) x[l] = cfg.constellation.map_bits(&bits[(l - 1) * bps]);
    return x;
}

/// Bit labels of the data slots (slots 2..L) of a symbol vector whose entries
/// lie in the constellation.
inline std::vector<std::uint8_t> demodulate_bits(const CVec& x, const SystemConfig& cfg) {
    const int bps = cfg.constellation.bits_per_symbol;
    std::vector<std::uint8_t> bits((x.size() - 1) * bps);
    for (Index l = 1; l < x.size(); ++l)
        cfg.constellation.unmap_index(cfg.constellation.nearest(x[l]), &bits[(l - 1) * bps]);
    return bits;
}

inline std::vector<std::uint8_t> random_bits(Index count, RngStream& rng) {
    std::vector<std::uint8_t> bits(count);
    for (auto& b : bits) b = rng.bernoulli(0.5) ? 1 : 0;
    return bits;
}

/// Synthesize one received block Y = (A s + h_d) x^T + W with W i.i.d.
/// CN(0, sigma_w2). The channel must have A computed for the given phases.
inline BlockSignals simulate_block(const ChannelState& ch, const PhaseShifts& phases,
                                   const BVec& s, const CVec& x, const SystemConfig& cfg,
                                   RngStream& rng) {
    phases.validate();
    if (!ch.has_A) throw std::invalid_argument("simulate_block: channel phases not applied");
    if (s.size() != cfg.N || x.size() != cfg.L)
        throw std::invalid_argument("simulate_block: signal dimension mismatch");
    BlockSignals blk;
    blk.s = s;
    blk.x = x;
    blk.z = ch.h_d;
    for (Index n = 0; n < cfg.N; ++n)
        if (s[n]) blk.z += ch.A.col(n);
    blk.Y = blk.z * x.transpose();
    if (cfg.sigma_w2 > 0.0) {
        for (Index l = 0; l < cfg.L; ++l)
            for (Index m = 0; m < cfg.M; ++m) blk.Y(m, l) += rng.cn(cfg.sigma_w2);
    }
    return blk;
}

}  // namespace pbit
