#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pbit/constellation.hpp"
#include "pbit/model.hpp"
#include "pbit/rng.hpp"
#include "pbit/types.hpp"

namespace pbit {

enum class FactorStatus { Converged, MaxIter, Stalled, Diverged };

/// Raw rank-1 factorization output, before ambiguity correction.
struct FactorOutput {
    CVec z_hat;
    CVec x_hat;
    int iterations = 0;
    double residual = 0.0;  // ||Y - z_hat x_hat^T||_F
    FactorStatus status = FactorStatus::Converged;
};

/// Combined step-one receiver result.
struct FactorEstimate {
    CVec z_hat;   // ambiguity-corrected
    CVec x_hat;   // ambiguity-corrected
    cplx gamma;   // correction scalar x_1 / x_hat_1
    CVec x_tilde; // demapped symbols, entries in the constellation
    int iterations = 0;
    double residual = 0.0;
    FactorStatus status = FactorStatus::Converged;
};

/// Best rank-1 approximation of Y via the top singular triplet. With
/// Y = U Lambda V^H the estimates are z_hat = lambda_1 u_1 and
/// x_hat = conj(v_1), so z_hat x_hat^T reproduces the rank-1 term. The pair
/// is put in a canonical phase (largest |entry| of u_1 made real positive);
/// the downstream gamma correction absorbs the remaining offset.
inline FactorOutput factor_svd(const CMat& Y) {
    const Index M = Y.rows(), L = Y.cols();
    const double ynorm = Y.norm();
    if (ynorm == 0.0) throw std::invalid_argument("factor_svd: all-zero observation");

    CVec u(M);
    double lambda1 = 0.0;
    if (M <= L) {
        Eigen::SelfAdjointEigenSolver<CMat> eig(Y * Y.adjoint());
        lambda1 = std::sqrt(std::max(0.0, eig.eigenvalues()(M - 1)));
        u = eig.eigenvectors().col(M - 1);
    } else {
        Eigen::SelfAdjointEigenSolver<CMat> eig(Y.adjoint() * Y);
        lambda1 = std::sqrt(std::max(0.0, eig.eigenvalues()(L - 1)));
        const CVec v = eig.eigenvectors().col(L - 1);
        u = Y * v / lambda1;
    }
    Index imax = 0;
    u.cwiseAbs().maxCoeff(&imax);
    const cplx rot = std::abs(u[imax]) > 0.0 ? cplx(std::abs(u[imax])) / u[imax] : cplx(1.0);
    u *= rot;

    FactorOutput out;
    const CVec v1 = Y.adjoint() * u / lambda1;
    out.z_hat = lambda1 * u;
    out.x_hat = v1.conjugate();
    out.iterations = 0;
    out.residual = (Y - out.z_hat * out.x_hat.transpose()).norm();
    return out;
}

/// Priors for the bilinear factorization: a Gaussian prior on each z_m and a
/// discrete constellation prior on each symbol, with slot 1 pinned to the
/// reference symbol (known at the receiver).
struct BigAmpPriors {
    CVec z_mean;   // M
    RVec z_var;    // M
    const Constellation* constellation = nullptr;
    cplx reference_symbol;
    double noise_var = 0.0;

    static BigAmpPriors from_channel(const ChannelState& ch, const SystemConfig& cfg) {
        if (!ch.has_A) throw std::invalid_argument("BigAmpPriors: channel phases not applied");
        BigAmpPriors pr;
        pr.z_mean = cfg.rho * ch.A.rowwise().sum() + ch.h_d;
        pr.z_var = cfg.rho * (1.0 - cfg.rho) * ch.A.rowwise().squaredNorm();
        pr.constellation = &cfg.constellation;
        pr.reference_symbol = cfg.reference_symbol;
        pr.noise_var = cfg.sigma_w2;
        return pr;
    }
};

struct BigAmpOptions {
    int max_iter = 200;
    double tol = 1e-8;
    double damping = 0.25;       // initial step size, halved on residual increase
    double damping_min = 1e-3;   // below this the iteration stops on its best state
    std::vector<double>* residual_trace = nullptr;  // accepted residuals, if wanted
};

namespace detail {

struct BigAmpState {
    CVec z_hat;
    RVec z_var;
    CVec x_hat;
    RVec x_var;
    CMat shat;  // scaled output residual memory (Onsager term)
};

/// Posterior mean/variance of a symbol under a uniform constellation prior
/// and the pseudo-channel r ~ CN(x, nu).
inline void constellation_posterior(const Constellation& cst, cplx r, double nu, cplx& mean,
                                    double& var) {
    const std::size_t K = cst.size();
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) dmin = std::min(dmin, std::norm(r - cst.points[k]));
    double wsum = 0.0;
    cplx m(0.0, 0.0);
    double e2 = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const double w = std::exp(-(std::norm(r - cst.points[k]) - dmin) / nu);
        wsum += w;
        m += w * cst.points[k];
        e2 += w * std::norm(cst.points[k]);
    }
    mean = m / wsum;
    var = std::max(0.0, e2 / wsum - std::norm(mean));
}

}  // namespace detail

/// Rank-1 bilinear generalized AMP for Y = z x^T + W. Posterior-mean updates
/// with adaptive damping: a step that raises the data residual is reverted and
/// retried with half the step size, so the accepted residual sequence is
/// non-increasing. Returns the last accepted state.
inline FactorOutput factor_bigamp(const CMat& Y, const BigAmpPriors& priors,
                                  const BigAmpOptions& opts = {}) {
    const Index M = Y.rows(), L = Y.cols();
    if (priors.z_mean.size() != M) throw std::invalid_argument("factor_bigamp: prior size mismatch");
    const Constellation& cst = *priors.constellation;
    const double sigma2 = priors.noise_var;
    constexpr double kTiny = 1e-30;
    constexpr double kVarCap = 1e30;

    // Prior-mean initialization; data slots get a small deterministic complex
    // perturbation to break the bilinear symmetry.
    double prior_e2 = 0.0;
    for (const cplx& c : cst.points) prior_e2 += std::norm(c);
    prior_e2 /= static_cast<double>(cst.size());

    detail::BigAmpState st;
    st.z_hat = priors.z_mean;
    st.z_var = priors.z_var;
    st.x_hat = CVec::Zero(L);
    st.x_var = RVec::Constant(L, prior_e2);
    st.x_hat[0] = priors.reference_symbol;
    st.x_var[0] = 0.0;
    RngStream perturb(0x5eedf00dULL);
    for (Index l = 1; l < L; ++l) st.x_hat[l] = 1e-2 * std::sqrt(prior_e2) * perturb.cn01();
    st.shat = CMat::Zero(M, L);

    auto residual_of = [&](const detail::BigAmpState& s) {
        return (Y - s.z_hat * s.x_hat.transpose()).norm();
    };

    FactorOutput out;
    double damping = opts.damping;
    double best_residual = residual_of(st);
    if (opts.residual_trace) opts.residual_trace->push_back(best_residual);
    CMat prev_product = st.z_hat * st.x_hat.transpose();
    FactorStatus status = FactorStatus::MaxIter;
    int it = 0;

    while (it < opts.max_iter) {
        ++it;
        // One raw fixed-point step from the current state.
        const RVec zabs2 = st.z_hat.cwiseAbs2();
        const RVec xabs2 = st.x_hat.cwiseAbs2();
        const RMat vbar_p = zabs2 * st.x_var.transpose() + st.z_var * xabs2.transpose();
        const RMat nu_p = vbar_p + st.z_var * st.x_var.transpose();
        const CMat p_hat =
            st.z_hat * st.x_hat.transpose() - st.shat.cwiseProduct(vbar_p.cast<cplx>());
        const RMat denom = (nu_p.array() + sigma2).max(kTiny).matrix();
        const CMat shat_new = (Y - p_hat).cwiseQuotient(denom.cast<cplx>());
        const RMat nu_s = denom.cwiseInverse();

        // Symbol-side pseudo observations.
        const RVec sum_z2_nus = nu_s.transpose() * zabs2;               // L
        const RVec sum_zv_nus = nu_s.transpose() * st.z_var;            // L
        const CVec sum_zs = shat_new.transpose() * st.z_hat.conjugate();  // L
        // Channel-side pseudo observations.
        const RVec sum_x2_nus = nu_s * xabs2;                            // M
        const RVec sum_xv_nus = nu_s * st.x_var;                         // M
        const CVec sum_xs = shat_new * st.x_hat.conjugate();             // M

        detail::BigAmpState raw;
        raw.shat = shat_new;
        raw.x_hat = CVec(L);
        raw.x_var = RVec(L);
        raw.x_hat[0] = priors.reference_symbol;
        raw.x_var[0] = 0.0;
        for (Index l = 1; l < L; ++l) {
            const double nu_r = std::min(kVarCap, 1.0 / std::max(sum_z2_nus[l], kTiny));
            const cplx r_hat = st.x_hat[l] * (1.0 - nu_r * sum_zv_nus[l]) + nu_r * sum_zs[l];
            detail::constellation_posterior(cst, r_hat, std::max(nu_r, kTiny), raw.x_hat[l],
                                            raw.x_var[l]);
        }
        raw.z_hat = CVec(M);
        raw.z_var = RVec(M);
        for (Index m = 0; m < M; ++m) {
            const double v0 = priors.z_var[m];
            if (v0 <= 0.0) {  // point-mass prior
                raw.z_hat[m] = priors.z_mean[m];
                raw.z_var[m] = 0.0;
                continue;
            }
            const double nu_q = std::min(kVarCap, 1.0 / std::max(sum_x2_nus[m], kTiny));
            const cplx q_hat = st.z_hat[m] * (1.0 - nu_q * sum_xv_nus[m]) + nu_q * sum_xs[m];
            raw.z_hat[m] = (v0 * q_hat + nu_q * priors.z_mean[m]) / (v0 + nu_q);
            raw.z_var[m] = v0 * nu_q / (v0 + nu_q);
        }

        // Damped candidate; the same raw step is retried with half the blend
        // whenever the data residual grows, so accepted residuals never
        // increase.
        bool accepted = false;
        bool fatal = false;
        while (true) {
            detail::BigAmpState cand;
            const double d = damping;
            cand.z_hat = (1.0 - d) * st.z_hat + d * raw.z_hat;
            cand.z_var = (1.0 - d) * st.z_var + d * raw.z_var;
            cand.x_hat = (1.0 - d) * st.x_hat + d * raw.x_hat;
            cand.x_var = (1.0 - d) * st.x_var + d * raw.x_var;
            cand.shat = (1.0 - d) * st.shat + d * raw.shat;

            const double cand_residual = residual_of(cand);
            if (!std::isfinite(cand_residual)) {
                status = FactorStatus::Diverged;
                fatal = true;
                break;
            }
            if (cand_residual <= best_residual * (1.0 + 1e-12)) {
                st = std::move(cand);
                best_residual = std::min(best_residual, cand_residual);
                if (opts.residual_trace) opts.residual_trace->push_back(best_residual);
                accepted = true;
                break;
            }
            damping *= 0.5;
            if (damping < opts.damping_min) {
                status = FactorStatus::Stalled;
                fatal = true;
                break;
            }
        }
        if (fatal) break;
        if (!accepted) continue;

        const CMat product = st.z_hat * st.x_hat.transpose();
        const double change = (product - prev_product).norm();
        prev_product = product;
        if (change <= opts.tol * std::max(product.norm(), kTiny)) {
            status = FactorStatus::Converged;
            break;
        }
    }

    out.z_hat = st.z_hat;
    out.x_hat = st.x_hat;
    out.iterations = it;
    out.residual = best_residual;
    out.status = status;
    return out;
}

/// Resolve the rank-1 scalar ambiguity with the reference symbol:
/// gamma = x_1 / x_hat_1, x <- gamma x_hat, z <- z_hat / gamma. Returns
/// nullopt when the first slot is too small to divide by (block erased).
inline std::optional<std::tuple<CVec, CVec, cplx>> correct_ambiguity(const CVec& z_hat,
                                                                     const CVec& x_hat,
                                                                     cplx reference_symbol) {
    if (std::abs(x_hat[0]) < 1e-12) return std::nullopt;
    const cplx gamma = reference_symbol / x_hat[0];
    return std::make_tuple(CVec(z_hat / gamma), CVec(gamma * x_hat), gamma);
}

/// Per-entry nearest-constellation decision.
inline CVec demap(const CVec& x_corr, const Constellation& cst) {
    CVec out(x_corr.size());
    for (Index l = 0; l < x_corr.size(); ++l) out[l] = cst.points[cst.nearest(x_corr[l])];
    return out;
}

/// Run ambiguity correction and demapping on a factorization output.
inline std::optional<FactorEstimate> finalize_factor(const FactorOutput& raw,
                                                     const SystemConfig& cfg) {
    auto corr = correct_ambiguity(raw.z_hat, raw.x_hat, cfg.reference_symbol);
    if (!corr) return std::nullopt;
    FactorEstimate est;
    est.z_hat = std::move(std::get<0>(*corr));
    est.x_hat = std::move(std::get<1>(*corr));
    est.gamma = std::get<2>(*corr);
    est.x_tilde = demap(est.x_hat, cfg.constellation);
    est.x_tilde[0] = cfg.reference_symbol;
    est.iterations = raw.iterations;
    est.residual = raw.residual;
    est.status = raw.status;
    return est;
}

}  // namespace pbit
