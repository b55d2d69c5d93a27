#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "pbit/model.hpp"
#include "pbit/types.hpp"

namespace pbit {

/// Matched-filter observation for the element-state recovery:
/// z_tilde = (1/(L P)) Y conj(x_tilde) = A s + h_d + w. The direct channel is
/// kept alongside so recovery can pre-cancel it. w_var is the per-entry
/// distortion variance of the matched filter when the demapped symbols are
/// correct; symbol errors make the actual distortion slightly higher.
struct SparseObservation {
    CVec z_tilde;  // M
    CMat A;        // M x N
    CVec h_d;      // M
    double w_var = 0.0;
};

enum class SparseMethod { Gamp, Omp, Cosamp, LowerBound };

struct SparseEstimate {
    BVec s_hat;        // {0,1}
    RVec s_posterior;  // posterior means in [0,1] (GAMP); hard values otherwise
    SparseMethod method = SparseMethod::Gamp;
    int iterations = 0;
    bool flagged = false;  // divergence or non-finite iterates
};

inline SparseObservation form_observation(const CMat& Y, const CVec& x_tilde,
                                          const SystemConfig& cfg, const ChannelState& ch) {
    if (!ch.has_A) throw std::invalid_argument("form_observation: channel phases not applied");
    SparseObservation obs;
    const double lp = static_cast<double>(cfg.L) * cfg.P;
    obs.z_tilde = Y * x_tilde.conjugate() / lp;
    obs.A = ch.A;
    obs.h_d = ch.h_d;
    obs.w_var = std::max(cfg.sigma_w2 / lp, 1e-30);
    return obs;
}

struct GampOptions {
    int max_iter = 50;
    double tol = 1e-8;
    double damping = 0.7;
};

/// Posterior mean of s in {0,1} with prior Bernoulli(rho) observed through a
/// complex Gaussian pseudo-channel r ~ CN(s, nu). Only the real projection of
/// the evidence matters.
inline double bernoulli_posterior_mean(cplx r_hat, double nu, double rho) {
    const double lambda = std::log(rho / (1.0 - rho)) + (2.0 * r_hat.real() - 1.0) / nu;
    return 1.0 / (1.0 + std::exp(-lambda));
}

/// Generalized AMP with an AWGN output channel and an i.i.d. Bernoulli(rho)
/// prior on {0,1}. The input denoiser is the exact binary posterior mean under
/// a complex Gaussian pseudo-channel; hard decisions threshold the posterior
/// at 0.5 (exact ties resolve to 1 iff rho >= 0.5).
inline SparseEstimate gamp_recover(const SparseObservation& obs, double rho,
                                   const GampOptions& opts = {}) {
    if (obs.w_var <= 0.0) throw std::invalid_argument("gamp_recover: w_var must be positive");
    const Index M = obs.A.rows(), N = obs.A.cols();
    const CVec y = obs.z_tilde - obs.h_d;
    const RMat A2 = obs.A.cwiseAbs2();
    constexpr double kTiny = 1e-30;
    constexpr double kVarCap = 1e12;

    SparseEstimate est;
    est.method = SparseMethod::Gamp;
    est.s_posterior = RVec::Constant(N, rho);
    est.s_hat = BVec(N);

    if (rho <= 0.0 || rho >= 1.0) {  // degenerate prior: the posterior is the prior
        for (Index n = 0; n < N; ++n) est.s_hat[n] = rho >= 1.0 ? 1 : 0;
        return est;
    }

    RVec x_hat = RVec::Constant(N, rho);
    RVec x_var = RVec::Constant(N, rho * (1.0 - rho));
    CVec shat = CVec::Zero(M);
    const double init_residual = (y - obs.A * x_hat.cast<cplx>()).norm();

    int it = 0;
    for (; it < opts.max_iter; ++it) {
        const RVec nu_p = A2 * x_var;
        const CVec p_hat = obs.A * x_hat.cast<cplx>() - shat.cwiseProduct(nu_p.cast<cplx>());
        const RVec denom = (nu_p.array() + obs.w_var).matrix();
        const CVec shat_new = (y - p_hat).cwiseQuotient(denom.cast<cplx>());
        const RVec nu_s = denom.cwiseInverse();

        const RVec sum_a2_nus = A2.transpose() * nu_s;  // N
        const CVec corr = obs.A.adjoint() * shat_new;   // N

        RVec x_new(N), v_new(N);
        for (Index n = 0; n < N; ++n) {
            const double nu_r = std::min(kVarCap, 1.0 / std::max(sum_a2_nus[n], kTiny));
            const cplx r_hat = cplx(x_hat[n], 0.0) + nu_r * corr[n];
            const double pi = bernoulli_posterior_mean(r_hat, nu_r, rho);
            x_new[n] = pi;
            v_new[n] = pi * (1.0 - pi);
        }

        const double d = opts.damping;
        const RVec x_prev = x_hat;
        x_hat = (1.0 - d) * x_hat + d * x_new;
        x_var = (1.0 - d) * x_var + d * v_new;
        shat = (1.0 - d) * shat + d * shat_new;

        if (!x_hat.allFinite()) {
            est.flagged = true;
            x_hat = x_prev;
            break;
        }
        if ((x_hat - x_prev).lpNorm<Eigen::Infinity>() < opts.tol) {
            ++it;
            break;
        }
    }

    const double final_residual = (y - obs.A * x_hat.cast<cplx>()).norm();
    if (!(final_residual <= 10.0 * init_residual)) est.flagged = true;

    est.iterations = it;
    est.s_posterior = x_hat.cwiseMax(0.0).cwiseMin(1.0);
    for (Index n = 0; n < N; ++n) {
        const double p = est.s_posterior[n];
        est.s_hat[n] = (p > 0.5 || (p == 0.5 && rho >= 0.5)) ? 1 : 0;
    }
    return est;
}

namespace detail {

inline void ls_support_solve(const CMat& A, const CVec& y, const std::vector<Index>& support,
                             CVec& coef, CVec& residual) {
    if (support.empty()) {
        coef.resize(0);
        residual = y;
        return;
    }
    CMat As(A.rows(), static_cast<Index>(support.size()));
    for (std::size_t j = 0; j < support.size(); ++j) As.col(static_cast<Index>(j)) = A.col(support[j]);
    coef = As.colPivHouseholderQr().solve(y);
    residual = y - As * coef;
}

}  // namespace detail

/// Orthogonal matching pursuit with K greedy selections (column-normalized
/// correlation), least-squares re-projection each step and an early stop once
/// the residual is numerically zero. The selected support maps to 1.
inline SparseEstimate omp_recover(const SparseObservation& obs, Index K) {
    const Index N = obs.A.cols();
    if (K < 0 || K > N) throw std::invalid_argument("omp_recover: K outside [0, N]");
    const CVec y = obs.z_tilde - obs.h_d;
    const RVec col_norm = obs.A.colwise().norm();

    SparseEstimate est;
    est.method = SparseMethod::Omp;
    est.s_hat = BVec::Zero(N);
    est.s_posterior = RVec::Zero(N);

    std::vector<Index> support;
    std::vector<bool> used(static_cast<std::size_t>(N), false);
    CVec residual = y;
    CVec coef;
    const double stop = 1e-12 * std::max(y.norm(), 1e-300);
    int k = 0;
    for (; k < K; ++k) {
        if (residual.norm() <= stop) break;
        Index pick = -1;
        double best = -1.0;
        for (Index n = 0; n < N; ++n) {
            if (used[static_cast<std::size_t>(n)] || col_norm[n] <= 0.0) continue;
            const double c = std::abs(obs.A.col(n).dot(residual)) / col_norm[n];
            if (c > best) {
                best = c;
                pick = n;
            }
        }
        if (pick < 0) break;
        used[static_cast<std::size_t>(pick)] = true;
        support.push_back(pick);
        detail::ls_support_solve(obs.A, y, support, coef, residual);
    }
    for (Index n : support) {
        est.s_hat[n] = 1;
        est.s_posterior[n] = 1.0;
    }
    est.iterations = k;
    return est;
}

/// Compressive sampling matching pursuit with support size K. Candidate sets
/// are clipped to the row count so the per-iteration least squares stays
/// overdetermined. Runs until the residual stalls or 50 iterations.
inline SparseEstimate cosamp_recover(const SparseObservation& obs, Index K) {
    const Index M = obs.A.rows(), N = obs.A.cols();
    if (K < 0 || K > N) throw std::invalid_argument("cosamp_recover: K outside [0, N]");
    const CVec y = obs.z_tilde - obs.h_d;
    const RVec col_norm = obs.A.colwise().norm();

    SparseEstimate est;
    est.method = SparseMethod::Cosamp;
    est.s_hat = BVec::Zero(N);
    est.s_posterior = RVec::Zero(N);
    if (K == 0) return est;

    std::vector<Index> support;
    CVec residual = y;
    double prev_norm = residual.norm();
    const double stop = 1e-12 * std::max(y.norm(), 1e-300);
    int it = 0;
    for (; it < 50; ++it) {
        // Proxy correlations, largest first.
        std::vector<std::pair<double, Index>> proxy;
        proxy.reserve(static_cast<std::size_t>(N));
        for (Index n = 0; n < N; ++n) {
            const double c =
                col_norm[n] > 0.0 ? std::abs(obs.A.col(n).dot(residual)) / col_norm[n] : 0.0;
            proxy.emplace_back(c, n);
        }
        std::sort(proxy.begin(), proxy.end(), [](const auto& a, const auto& b) {
            return a.first > b.first || (a.first == b.first && a.second < b.second);
        });

        const Index cap = std::min<Index>(std::min(M, N), 3 * K);
        std::vector<Index> cand = support;  // keep the current support
        std::vector<bool> in_cand(static_cast<std::size_t>(N), false);
        for (Index n : cand) in_cand[static_cast<std::size_t>(n)] = true;
        for (Index j = 0; j < 2 * K && static_cast<Index>(cand.size()) < cap; ++j) {
            const Index n = proxy[static_cast<std::size_t>(j)].second;
            if (!in_cand[static_cast<std::size_t>(n)]) {
                in_cand[static_cast<std::size_t>(n)] = true;
                cand.push_back(n);
            }
        }

        CVec coef, res_c;
        detail::ls_support_solve(obs.A, y, cand, coef, res_c);

        // Prune to the K largest coefficients.
        std::vector<std::pair<double, Index>> mag;
        mag.reserve(cand.size());
        for (std::size_t j = 0; j < cand.size(); ++j)
            mag.emplace_back(std::abs(coef[static_cast<Index>(j)]), cand[j]);
        std::sort(mag.begin(), mag.end(), [](const auto& a, const auto& b) {
            return a.first > b.first || (a.first == b.first && a.second < b.second);
        });
        std::vector<Index> pruned;
        for (Index j = 0; j < K && j < static_cast<Index>(mag.size()); ++j)
            pruned.push_back(mag[static_cast<std::size_t>(j)].second);
        std::sort(pruned.begin(), pruned.end());

        detail::ls_support_solve(obs.A, y, pruned, coef, residual);
        const double rn = residual.norm();
        const bool same = pruned == support;
        support = std::move(pruned);
        if (rn <= stop || same || std::abs(prev_norm - rn) <= 1e-9 * std::max(1.0, y.norm()))
            break;
        prev_norm = rn;
    }
    for (Index n : support) {
        est.s_hat[n] = 1;
        est.s_posterior[n] = 1.0;
    }
    est.iterations = it + 1;
    return est;
}

/// Genie-aided symbol decisions from the matched filter z^H Y with the true
/// composite channel, normalized by ||z||^2 (decision-neutral for constant-
/// modulus constellations).
inline CVec lower_bound_x(const CMat& Y, const CVec& z_true, const Constellation& cst) {
    const CVec mf = (z_true.adjoint() * Y).transpose() / z_true.squaredNorm();
    CVec out(mf.size());
    for (Index l = 0; l < mf.size(); ++l) out[l] = cst.points[cst.nearest(mf[l])];
    return out;
}

/// Genie-aided element-state recovery: the observation is formed with the
/// true symbols, then recovered by GAMP.
inline SparseEstimate lower_bound_s(const CMat& Y, const CVec& x_true, const SystemConfig& cfg,
                                    const ChannelState& ch, const GampOptions& opts = {}) {
    SparseObservation obs = form_observation(Y, x_true, cfg, ch);
    SparseEstimate est = gamp_recover(obs, cfg.rho, opts);
    est.method = SparseMethod::LowerBound;
    return est;
}

}  // namespace pbit
