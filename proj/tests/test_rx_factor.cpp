#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pbit/pbit.hpp"

using namespace pbit;

namespace {

struct Setup {
    SystemConfig cfg;
    ChannelState ch;
    PhaseShifts phases;
    BlockSignals blk;
};

Setup make_block(Index M, Index N, Index L, double sigma_w2, std::uint64_t seed,
                 double rho = 0.5) {
    Setup s{SystemConfig::qpsk(M, N, L, 0.5, rho, 1.0, sigma_w2), {}, {}, {}};
    RngStream rng = RngStream::derive(seed, {stream_id::channels, 0});
    s.ch = sample_channels(s.cfg, rng);
    RngStream prng = RngStream::derive(seed, {stream_id::random_phases, 0});
    s.phases = PhaseShifts::random(N, prng);
    s.ch.set_phases(s.phases, s.cfg.beta);
    RngStream srng = RngStream::derive(seed, {stream_id::lis_state, 0});
    const BVec state = sample_lis_state(s.cfg, srng);
    RngStream brng = RngStream::derive(seed, {stream_id::symbols, 0});
    const CVec x = modulate(random_bits(s.cfg.data_bits_per_block(), brng), s.cfg);
    RngStream wrng = RngStream::derive(seed, {stream_id::noise, 0});
    s.blk = simulate_block(s.ch, s.phases, state, x, s.cfg, wrng);
    return s;
}

// Alternating least squares oracle for the best rank-1 fit, from one start.
double als_residual(const CMat& Y, CVec z, int iters = 200) {
    CVec x;
    for (int i = 0; i < iters; ++i) {
        x = Y.transpose() * z.conjugate() / z.squaredNorm();
        z = Y * x.conjugate() / x.squaredNorm();
    }
    return (Y - z * x.transpose()).norm();
}

}  // namespace

TEST_CASE("svd factorization reproduces a noiseless block") {
    const Setup s = make_block(4, 3, 8, 0.0, 21);
    const FactorOutput out = factor_svd(s.blk.Y);
    CHECK((s.blk.Y - out.z_hat * out.x_hat.transpose()).norm() < 1e-10 * s.blk.Y.norm());
    // x_hat is a complex multiple of the transmitted symbols.
    const cplx c = out.x_hat[0] / s.blk.x[0];
    CHECK((out.x_hat - c * s.blk.x).norm() < 1e-9 * s.blk.x.norm());
    CHECK(out.residual < 1e-10 * s.blk.Y.norm());
}

TEST_CASE("svd factorization of a single-entry matrix") {
    CMat Y = CMat::Zero(3, 4);
    Y(0, 0) = cplx(1.0, 0.0);
    const FactorOutput out = factor_svd(Y);
    CHECK((out.z_hat - CVec::Unit(3, 0)).norm() < 1e-12);
    CHECK((out.x_hat - CVec::Unit(4, 0)).norm() < 1e-12);
}

TEST_CASE("svd rejects an all-zero observation") {
    CHECK_THROWS_AS(factor_svd(CMat::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("svd energy split follows the best rank-1 approximation") {
    RngStream rng(33);
    for (int rep = 0; rep < 20; ++rep) {
        CMat Y(4, 6);
        for (Index i = 0; i < 4; ++i)
            for (Index j = 0; j < 6; ++j) Y(i, j) = rng.cn01();
        const FactorOutput out = factor_svd(Y);
        const double lambda1 = out.z_hat.norm();
        CHECK(std::abs(out.residual * out.residual + lambda1 * lambda1 - Y.squaredNorm()) <
              1e-9);
    }
}

TEST_CASE("svd attains the global rank-1 optimum (alternating LS oracle)") {
    RngStream rng(44);
    for (int rep = 0; rep < 5; ++rep) {
        CMat Y(5, 7);
        for (Index i = 0; i < 5; ++i)
            for (Index j = 0; j < 7; ++j) Y(i, j) = rng.cn01();
        const FactorOutput out = factor_svd(Y);
        for (int start = 0; start < 20; ++start) {
            CVec z0(5);
            for (Index i = 0; i < 5; ++i) z0[i] = rng.cn01();
            CHECK(als_residual(Y, z0) >= out.residual - 1e-6);
        }
    }
}

TEST_CASE("ambiguity correction undoes a scalar offset") {
    const Setup s = make_block(3, 2, 6, 0.0, 5);
    const CVec x_scaled = cplx(0.0, 2.0) * s.blk.x;
    const CVec z_scaled = s.blk.z / cplx(0.0, 2.0);
    const auto corr = correct_ambiguity(z_scaled, x_scaled, s.cfg.reference_symbol);
    REQUIRE(corr.has_value());
    const auto& [z_c, x_c, gamma] = *corr;
    const cplx x1 = s.cfg.reference_symbol;
    CHECK(std::abs(gamma - x1 / (cplx(0.0, 2.0) * x1)) < 1e-12);
    CHECK((x_c - s.blk.x).norm() < 1e-12);
    CHECK((z_c - s.blk.z).norm() < 1e-12);
}

TEST_CASE("ambiguity correction keeps the outer product invariant") {
    RngStream rng(6);
    for (int rep = 0; rep < 50; ++rep) {
        CVec z(4), x(5);
        for (Index i = 0; i < 4; ++i) z[i] = rng.cn01();
        for (Index i = 0; i < 5; ++i) x[i] = rng.cn01();
        const auto corr = correct_ambiguity(z, x, cplx(1.0, 1.0));
        REQUIRE(corr.has_value());
        const auto& [z_c, x_c, gamma] = *corr;
        CHECK((z_c * x_c.transpose() - z * x.transpose()).norm() < 1e-9);
        CHECK(std::abs(x_c[0] - cplx(1.0, 1.0)) < 1e-12);
    }
}

TEST_CASE("ambiguity correction reports unresolvable blocks") {
    CVec z = CVec::Ones(2);
    CVec x(3);
    x << cplx(1e-13, 0.0), cplx(1.0, 0.0), cplx(0.0, 1.0);
    CHECK(!correct_ambiguity(z, x, cplx(1.0, 0.0)).has_value());
}

TEST_CASE("noiseless svd chain recovers every slot") {
    const Setup s = make_block(6, 4, 12, 0.0, 57);
    const auto est = finalize_factor(factor_svd(s.blk.Y), s.cfg);
    REQUIRE(est.has_value());
    CHECK((est->x_hat - s.blk.x).norm() < 1e-8);
    CHECK((est->x_tilde - s.blk.x).norm() == 0.0);
}

TEST_CASE("demapping") {
    const auto cfg = SystemConfig::qpsk(1, 1, 2, 1.0, 0.5, 1.0, 1.0);
    const auto& cst = cfg.constellation;

    SECTION("idempotent on constellation points") {
        CVec v(4);
        for (int k = 0; k < 4; ++k) v[k] = cst.points[k];
        CHECK((demap(v, cst) - v).norm() == 0.0);
    }

    SECTION("first-quadrant decision") {
        CVec v(1);
        v << cplx(0.9, 0.1);
        CHECK(demap(v, cst)[0] == cst.points[0]);
    }

    SECTION("positive scaling never changes a decision") {
        RngStream rng(71);
        for (int rep = 0; rep < 100; ++rep) {
            CVec v(1);
            v << rng.cn01();
            const cplx base = demap(v, cst)[0];
            for (double alpha : {0.1, 1.0, 10.0}) CHECK(demap(CVec(alpha * v), cst)[0] == base);
        }
    }
}

TEST_CASE("bigamp recovers a noiseless block exactly") {
    const Setup s = make_block(8, 6, 16, 0.0, 91);
    const BigAmpPriors priors = BigAmpPriors::from_channel(s.ch, s.cfg);
    const auto est = finalize_factor(factor_bigamp(s.blk.Y, priors), s.cfg);
    REQUIRE(est.has_value());
    CHECK((est->x_tilde - s.blk.x).norm() == 0.0);
}

TEST_CASE("bigamp with a zero coefficient matrix returns the direct channel") {
    auto s = make_block(5, 3, 10, 1e-12, 14);
    s.ch.A.setZero();
    const BVec state = BVec::Zero(s.cfg.N);
    RngStream wrng = RngStream::derive(14, {stream_id::noise, 1});
    const BlockSignals blk = simulate_block(s.ch, s.phases, state, s.blk.x, s.cfg, wrng);
    const BigAmpPriors priors = BigAmpPriors::from_channel(s.ch, s.cfg);
    CHECK(priors.z_var.norm() == 0.0);
    CHECK((priors.z_mean - s.ch.h_d).norm() == 0.0);
    const FactorOutput out = factor_bigamp(blk.Y, priors);
    CHECK((out.z_hat - s.ch.h_d).norm() < 1e-9);
}

TEST_CASE("bigamp accepted residuals never increase") {
    for (std::uint64_t seed : {2ull, 3ull, 4ull}) {
        const Setup s = make_block(16, 8, 40, 0.5, 900 + seed);
        const BigAmpPriors priors = BigAmpPriors::from_channel(s.ch, s.cfg);
        std::vector<double> trace;
        BigAmpOptions opts;
        opts.residual_trace = &trace;
        const FactorOutput out = factor_bigamp(s.blk.Y, priors, opts);
        REQUIRE(trace.size() > 1);
        for (std::size_t i = 1; i < trace.size(); ++i)
            CHECK(trace[i] <= trace[i - 1] * (1.0 + 1e-12));
        CHECK(out.status != FactorStatus::Diverged);
    }
}

TEST_CASE("bigamp makes exact decisions on a high-snr block") {
    const Setup s = make_block(16, 8, 40, 0.05, 77);
    const BigAmpPriors priors = BigAmpPriors::from_channel(s.ch, s.cfg);
    const auto est = finalize_factor(factor_bigamp(s.blk.Y, priors), s.cfg);
    REQUIRE(est.has_value());
    CHECK((est->x_tilde - s.blk.x).norm() == 0.0);
    CHECK(est->iterations <= 200);
}

TEST_CASE("noiseless recovery holds across 1000 random instances") {
    RngStream dims(1000);
    int exact = 0;
    for (std::uint64_t rep = 0; rep < 1000; ++rep) {
        const Index M = 2 + static_cast<Index>(dims.pick(6));
        const Index N = 1 + static_cast<Index>(dims.pick(6));
        const Index L = 2 + static_cast<Index>(dims.pick(12));
        const Setup s = make_block(M, N, L, 0.0, 5000 + rep);

        const auto svd_est = finalize_factor(factor_svd(s.blk.Y), s.cfg);
        REQUIRE(svd_est.has_value());
        exact += (svd_est->x_tilde - s.blk.x).norm() == 0.0;

        const BigAmpPriors priors = BigAmpPriors::from_channel(s.ch, s.cfg);
        const auto amp_est = finalize_factor(factor_bigamp(s.blk.Y, priors), s.cfg);
        REQUIRE(amp_est.has_value());
        exact += (amp_est->x_tilde - s.blk.x).norm() == 0.0;
    }
    CHECK(exact == 2000);
}
