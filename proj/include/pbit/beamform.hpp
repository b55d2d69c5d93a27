#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pbit/model.hpp"
#include "pbit/rng.hpp"
#include "pbit/types.hpp"

namespace pbit {

/// Homogenized quadratic program data for the phase-shift design:
/// maximize theta_bar^H (R + V) theta_bar over unit-modulus theta_bar.
/// The reflection coefficient beta is folded into G before assembly, so the
/// objective matches the physical receive model.
struct QcqpData {
    CMat R;  // (N+1) x (N+1) Hermitian, zero bottom-right entry
    CMat V;  // (N+1) x (N+1) diagonal, zero bottom-right entry
    RVec v;  // N, diagonal of D_h^H G^H G D_h (beta folded in)
    double hd_norm2 = 0.0;

    CMat cost() const { return R + V; }
};

/// Result of the semidefinite relaxation solve.
struct SdpSolution {
    CMat Q;                   // Hermitian PSD with unit diagonal (within tol)
    double objective = 0.0;   // tr((R+V) Q)
    int iterations = 0;
    bool converged = false;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;  // last objective change
};

struct SdpOptions {
    double tol = 1e-6;
    int max_iter = 5000;
};

/// Average receive signal gain E||A s + h_d||^2 over the Bernoulli(rho)
/// element states, evaluated in closed form. Includes the ||h_d||^2 constant
/// so the value equals the Monte Carlo expectation of the physical model.
inline double expected_gain(const CVec& theta, const ChannelState& ch, double rho, double beta) {
    if (theta.size() != ch.G.cols()) throw std::invalid_argument("expected_gain: theta length mismatch");
    for (Index n = 0; n < theta.size(); ++n)
        if (std::abs(std::abs(theta[n]) - 1.0) > 1e-9)
            throw std::invalid_argument("expected_gain: |theta_n| != 1");
    // c = beta * G * D_h * theta
    const CVec c = beta * (ch.G * ch.h_r.cwiseProduct(theta));
    double quad = 0.0;  // theta^H diag{v} theta with v_n = beta^2 |h_rn|^2 ||g_n||^2
    for (Index n = 0; n < theta.size(); ++n)
        quad += beta * beta * std::norm(ch.h_r[n]) * ch.G.col(n).squaredNorm();
    const double cross = 2.0 * rho * c.dot(ch.h_d).real();
    return rho * rho * c.squaredNorm() + cross + rho * (1.0 - rho) * quad + ch.h_d.squaredNorm();
}

/// Assemble the homogenized QCQP blocks from the channel state.
inline QcqpData build_qcqp(const ChannelState& ch, double rho, double beta) {
    const Index N = ch.G.cols();
    const CMat Gb = beta * ch.G;
    const CMat GD = Gb * ch.h_r.asDiagonal();  // M x N
    const CMat B = GD.adjoint() * GD;          // N x N Hermitian
    const CVec b = GD.adjoint() * ch.h_d;      // N

    QcqpData q;
    q.v = B.diagonal().real();
    q.R = CMat::Zero(N + 1, N + 1);
    q.R.topLeftCorner(N, N) = rho * rho * B;
    q.R.topRightCorner(N, 1) = rho * b;
    q.R.bottomLeftCorner(1, N) = rho * b.adjoint();
    q.V = CMat::Zero(N + 1, N + 1);
    q.V.topLeftCorner(N, N).diagonal() = (rho * (1.0 - rho) * q.v).cast<cplx>();
    q.hd_norm2 = ch.h_d.squaredNorm();
    return q;
}

namespace detail {

/// Projection onto the Hermitian PSD cone via eigendecomposition.
inline CMat psd_project(const CMat& X) {
    Eigen::SelfAdjointEigenSolver<CMat> eig(X);
    RVec lam = eig.eigenvalues().cwiseMax(0.0);
    return eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().adjoint();
}

}  // namespace detail

/// Solve  max tr(C Q)  s.t.  Q >= 0, Q_nn = 1  by ADMM: a linear X-update with
/// the diagonal pinned, a PSD projection for Z, and a scaled dual ascent.
/// The cost matrix is normalized internally so the penalty tuning is
/// scale-free. Non-convergence returns the best iterate with its residuals.
inline SdpSolution solve_sdp(const QcqpData& q, const SdpOptions& opts = {}) {
    CMat C = q.cost();
    const Index n = C.rows();
    C = 0.5 * (C + CMat(C.adjoint()));  // enforce Hermitian symmetry
    const double scale = C.norm();
    const CMat Cn = scale > 0.0 ? CMat(C / scale) : CMat::Zero(n, n);

    CMat X = CMat::Identity(n, n);
    CMat Z = X;
    CMat U = CMat::Zero(n, n);
    double mu = 1.0;

    SdpSolution sol;
    double prev_obj = 0.0;
    for (int it = 1; it <= opts.max_iter; ++it) {
        X = Z - U + Cn / mu;
        X.diagonal().setOnes();
        const CMat Zprev = Z;
        Z = detail::psd_project(X + U);
        U += X - Z;

        const double rp = (X - Z).norm();
        const double rd = mu * (Z - Zprev).norm();
        const double obj = Cn.cwiseProduct(Z.conjugate()).sum().real();
        sol.iterations = it;
        sol.primal_residual = rp;
        sol.dual_residual = rd;
        sol.gap = std::abs(obj - prev_obj);
        prev_obj = obj;
        if (rp < opts.tol && rd < opts.tol) {
            sol.converged = true;
            break;
        }
        if (rp > 10.0 * rd && mu < 1e6) {
            mu *= 2.0;
            U /= 2.0;
        } else if (rd > 10.0 * rp && mu > 1e-6) {
            mu /= 2.0;
            U *= 2.0;
        }
    }
    sol.Q = Z;
    sol.objective = scale * Cn.cwiseProduct(Z.conjugate()).sum().real();
    return sol;
}

/// Gaussian randomization: draw theta_bar = U Sigma^{1/2} r with r ~ CN(0, I),
/// de-homogenize by the last entry, project every entry to unit modulus by
/// phase extraction, and keep the draw with the best objective. Candidates are
/// scored by the closed-form gain theta_bar^H (R+V) theta_bar + ||h_d||^2,
/// which equals expected_gain of the de-homogenized phases. Draws with a
/// vanishing last entry are discarded and redrawn; the first draw attaining
/// the maximum wins.
inline PhaseShifts randomized_rounding(const SdpSolution& sol, int trials, const QcqpData& q,
                                       RngStream& rng, double* best_gain_out = nullptr) {
    const Index n = sol.Q.rows();
    const Index N = n - 1;
    Eigen::SelfAdjointEigenSolver<CMat> eig(sol.Q);
    const CMat F = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    const CMat C = q.cost();

    CVec bar(n);
    CVec best_theta;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < trials; ++trial) {
        for (;;) {
            CVec r(n);
            for (Index i = 0; i < n; ++i) r[i] = rng.cn01();
            const CVec draw = F * r;
            const cplx t = draw[N];
            if (std::abs(t) < 1e-12) continue;  // degenerate draw, redraw
            for (Index i = 0; i < N; ++i) {
                const cplx d = draw[i] / t;
                const double mag = std::abs(d);
                bar[i] = mag > 0.0 ? d / mag : cplx(1.0, 0.0);
            }
            bar[N] = cplx(1.0, 0.0);
            break;
        }
        const double gain = (bar.adjoint() * C * bar)(0, 0).real() + q.hd_norm2;
        if (gain > best_gain) {
            best_gain = gain;
            best_theta = bar.head(N);
        }
    }
    if (best_gain_out) *best_gain_out = best_gain;
    return PhaseShifts::from_vector(std::move(best_theta));
}

struct BeamformOptions {
    SdpOptions sdp;
    int rounding_trials = 100;
};

/// Full pipeline result: phases, achieved gain, and the relaxation upper
/// bound tr((R+V)Q) + ||h_d||^2 for diagnostics.
struct BeamformResult {
    PhaseShifts phases;
    double achieved_gain = 0.0;
    double sdp_upper_bound = 0.0;
    SdpSolution sdp;
};

inline BeamformResult optimize_phases(const ChannelState& ch, double rho, double beta,
                                      RngStream& rng, const BeamformOptions& opts = {}) {
    const QcqpData q = build_qcqp(ch, rho, beta);
    SdpSolution sol = solve_sdp(q, opts.sdp);
    BeamformResult res;
    res.phases = randomized_rounding(sol, opts.rounding_trials, q, rng, &res.achieved_gain);
    res.sdp_upper_bound = sol.objective + q.hd_norm2;
    res.sdp = std::move(sol);
    return res;
}

}  // namespace pbit
