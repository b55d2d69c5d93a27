#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pbit/model.hpp"
#include "pbit/types.hpp"

namespace pbit {

/// Text dump of a channel realization: a header with the dimensions, then
/// G (row-major), h_r and h_d with interleaved real/imag parts. Values carry
/// 17 significant digits so a round trip is exact.
inline void save_channels(const std::string& path, const ChannelState& ch, Index L) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "pbit-channel " << ch.G.rows() << ' ' << ch.G.cols() << ' ' << L << '\n';
    f << std::setprecision(17);
    for (Index i = 0; i < ch.G.rows(); ++i) {
        for (Index j = 0; j < ch.G.cols(); ++j) {
            if (j) f << ' ';
            f << ch.G(i, j).real() << ' ' << ch.G(i, j).imag();
        }
        f << '\n';
    }
    for (Index j = 0; j < ch.h_r.size(); ++j)
        f << ch.h_r[j].real() << ' ' << ch.h_r[j].imag() << (j + 1 < ch.h_r.size() ? ' ' : '\n');
    for (Index i = 0; i < ch.h_d.size(); ++i)
        f << ch.h_d[i].real() << ' ' << ch.h_d[i].imag() << (i + 1 < ch.h_d.size() ? ' ' : '\n');
    if (!f) throw std::runtime_error("write failed: " + path);
}

inline ChannelState load_channels(const std::string& path, Index* L_out = nullptr) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    std::string magic;
    Index M = 0, N = 0, L = 0;
    f >> magic >> M >> N >> L;
    if (magic != "pbit-channel" || M < 1 || N < 1 || L < 1)
        throw std::runtime_error("not a channel dump: " + path);
    ChannelState ch;
    ch.G = CMat(M, N);
    ch.h_r = CVec(N);
    ch.h_d = CVec(M);
    double re = 0.0, im = 0.0;
    for (Index i = 0; i < M; ++i)
        for (Index j = 0; j < N; ++j) {
            f >> re >> im;
            ch.G(i, j) = cplx(re, im);
        }
    for (Index j = 0; j < N; ++j) {
        f >> re >> im;
        ch.h_r[j] = cplx(re, im);
    }
    for (Index i = 0; i < M; ++i) {
        f >> re >> im;
        ch.h_d[i] = cplx(re, im);
    }
    if (!f) throw std::runtime_error("truncated channel dump: " + path);
    if (L_out) *L_out = L;
    return ch;
}

/// Phase vector as one radian value per line, 12 significant digits.
inline void save_phases(const std::string& path, const PhaseShifts& phases) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "pbit-phases " << phases.theta.size() << '\n' << std::setprecision(12);
    for (Index n = 0; n < phases.theta.size(); ++n) f << std::arg(phases.theta[n]) << '\n';
    if (!f) throw std::runtime_error("write failed: " + path);
}

inline PhaseShifts load_phases(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    std::string magic;
    Index N = 0;
    f >> magic >> N;
    if (magic != "pbit-phases" || N < 1) throw std::runtime_error("not a phase dump: " + path);
    RVec radians(N);
    for (Index n = 0; n < N; ++n) f >> radians[n];
    if (!f) throw std::runtime_error("truncated phase dump: " + path);
    return PhaseShifts::from_phases(radians);
}

}  // namespace pbit
