#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pbit/pbit.hpp"

using namespace pbit;

TEST_CASE("binary entropy reference values") {
    CHECK(std::abs(binary_entropy(0.5) - 1.0000) < 5e-5);
    CHECK(std::abs(binary_entropy(0.6) - 0.9710) < 5e-5);
    CHECK(std::abs(binary_entropy(0.7) - 0.8813) < 5e-5);
    CHECK(std::abs(binary_entropy(0.8) - 0.7219) < 5e-5);
    CHECK(std::abs(binary_entropy(0.9) - 0.4690) < 5e-5);
    CHECK(binary_entropy(1.0) == 0.0);
    CHECK(binary_entropy(0.0) == 0.0);
    CHECK_THROWS_AS(binary_entropy(1.5), std::invalid_argument);
}

TEST_CASE("binary entropy symmetry") {
    RngStream rng(7);
    for (int i = 0; i < 200; ++i) {
        const double rho = rng.uniform01();
        CHECK(binary_entropy(rho) == Catch::Approx(binary_entropy(1.0 - rho)).margin(1e-12));
    }
}

TEST_CASE("entropy inverse picks the upper branch and round-trips") {
    for (double r : {0.0, 0.1, 0.4690, 0.7219, 0.9710, 1.0}) {
        const double rho = entropy_inverse(r);
        CHECK(rho >= 0.5);
        CHECK(rho <= 1.0);
        CHECK(std::abs(binary_entropy(rho) - r) < 1e-8);
    }
    CHECK_THROWS_AS(entropy_inverse(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(entropy_inverse(1.1), std::invalid_argument);
}

TEST_CASE("channel sampling is deterministic under a fixed seed") {
    const auto cfg = SystemConfig::qpsk(1, 1, 2, 1.0, 0.5, 1.0, 1.0);
    RngStream a = RngStream::derive(42, {stream_id::channels, 0});
    RngStream b = RngStream::derive(42, {stream_id::channels, 0});
    const ChannelState ca = sample_channels(cfg, a);
    const ChannelState cb = sample_channels(cfg, b);
    CHECK(ca.G(0, 0) == cb.G(0, 0));
    CHECK(ca.h_r[0] == cb.h_r[0]);
    CHECK(ca.h_d[0] == cb.h_d[0]);
}

TEST_CASE("channel entries have unit variance") {
    // |h|^2 is Exp(1) under CN(0,1), so the sample mean over M draws has
    // standard error 1/sqrt(M).
    const Index M = 1000;
    const auto cfg = SystemConfig::qpsk(M, 1, 2, 1.0, 0.5, 1.0, 1.0);
    RngStream rng = RngStream::derive(3, {stream_id::channels, 0});
    const ChannelState ch = sample_channels(cfg, rng);
    const double mean = ch.h_d.squaredNorm() / static_cast<double>(M);
    CHECK(std::abs(mean - 1.0) < 3.0 / std::sqrt(static_cast<double>(M)));
}

TEST_CASE("channel shapes at the reference dimensions") {
    const auto cfg = SystemConfig::qpsk(32, 32, 100, 0.5, 0.5, 1.0, 1.0);
    RngStream rng = RngStream::derive(1, {stream_id::channels, 0});
    const ChannelState ch = sample_channels(cfg, rng);
    CHECK(ch.G.rows() == 32);
    CHECK(ch.G.cols() == 32);
    CHECK(ch.h_r.size() == 32);
    CHECK(ch.h_d.size() == 32);
}

TEST_CASE("element states: degenerate and concentrated") {
    RngStream rng(11);
    auto cfg1 = SystemConfig::qpsk(1, 16, 2, 1.0, 1.0, 1.0, 1.0);
    CHECK(sample_lis_state(cfg1, rng).cast<int>().sum() == 16);
    cfg1.rho = 0.0;
    CHECK(sample_lis_state(cfg1, rng).cast<int>().sum() == 0);

    const Index N = 100000;
    const auto cfg = SystemConfig::qpsk(1, N, 2, 1.0, 0.5, 1.0, 1.0);
    RngStream rng2 = RngStream::derive(5, {stream_id::lis_state, 0});
    const BVec s = sample_lis_state(cfg, rng2);
    const double mean = s.cast<double>().sum() / static_cast<double>(N);
    const double se = std::sqrt(0.25 / static_cast<double>(N));
    CHECK(std::abs(mean - 0.5) < 3.0 * se);
}

TEST_CASE("second moment of the element states matches the closed form") {
    // E[s s^T] = rho^2 11^T + rho(1-rho) I, checked entrywise within three
    // binomial standard errors of the empirical average.
    const Index N = 6;
    const int T = 100000;
    for (double rho : {0.3, 0.5, 0.9}) {
        const auto cfg = SystemConfig::qpsk(1, N, 2, 1.0, rho, 1.0, 1.0);
        RngStream rng = RngStream::derive(2028, {stream_id::lis_state, 1});
        RMat acc = RMat::Zero(N, N);
        for (int t = 0; t < T; ++t) {
            const BVec s = sample_lis_state(cfg, rng);
            const RVec sd = s.cast<double>();
            acc += sd * sd.transpose();
        }
        acc /= static_cast<double>(T);
        for (Index i = 0; i < N; ++i)
            for (Index j = 0; j < N; ++j) {
                const double expect = i == j ? rho : rho * rho;
                const double se = std::sqrt(expect * (1.0 - expect) / T);
                CHECK(std::abs(acc(i, j) - expect) < 3.0 * se + 1e-12);
            }
    }
}

TEST_CASE("gray qpsk mapping") {
    const auto cfg = SystemConfig::qpsk(1, 1, 2, 1.0, 0.5, 1.0, 1.0);
    const double a = std::sqrt(0.5);

    SECTION("all-zero bits map to the first-quadrant point") {
        const CVec x = modulate({0, 0}, cfg);
        CHECK(x[0] == cfg.reference_symbol);
        CHECK(x[1] == cplx(a, a));
        CHECK(std::abs(std::norm(x[1]) - 1.0) < 1e-12);
    }

    SECTION("modulate/demap round trip for every pattern") {
        for (std::uint8_t b0 : {0, 1})
            for (std::uint8_t b1 : {0, 1}) {
                const std::vector<std::uint8_t> bits{b0, b1};
                const CVec x = modulate(bits, cfg);
                CHECK(demodulate_bits(x, cfg) == bits);
            }
    }

    SECTION("average constellation power equals P") {
        double p = 0.0;
        for (const cplx& c : cfg.constellation.points) p += std::norm(c);
        CHECK(p / 4.0 == Catch::Approx(cfg.P));
    }

    SECTION("gray adjacency: one-quadrant rotations flip exactly one bit") {
        const auto& cst = cfg.constellation;
        for (std::size_t k = 0; k < 4; ++k) {
            const cplx rotated = cst.points[k] * cplx(0.0, 1.0);
            const std::size_t k2 = cst.nearest(rotated);
            std::uint8_t b[2], b2[2];
            cst.unmap_index(k, b);
            cst.unmap_index(k2, b2);
            CHECK((b[0] != b2[0]) + (b[1] != b2[1]) == 1);
        }
    }

    SECTION("wrong bit count rejected") {
        CHECK_THROWS_AS(modulate({0, 0, 1}, cfg), std::invalid_argument);
    }
}

TEST_CASE("noiseless block with the surface off reduces to the direct link") {
    auto cfg = SystemConfig::qpsk(3, 4, 5, 0.7, 0.5, 1.0, 0.0);
    RngStream rng(17);
    ChannelState ch = sample_channels(cfg, rng);
    const PhaseShifts phases = PhaseShifts::all_ones(cfg.N);
    ch.set_phases(phases, cfg.beta);
    const BVec s = BVec::Zero(cfg.N);
    const CVec x = modulate(random_bits(cfg.data_bits_per_block(), rng), cfg);
    const BlockSignals blk = simulate_block(ch, phases, s, x, cfg, rng);
    CHECK((blk.Y - ch.h_d * x.transpose()).norm() == 0.0);
    CHECK(blk.z == ch.h_d);
}

TEST_CASE("all-unity cascade yields Y = x^T") {
    auto cfg = SystemConfig::qpsk(1, 1, 4, 1.0, 0.5, 1.0, 0.0);
    ChannelState ch;
    ch.G = CMat::Ones(1, 1);
    ch.h_r = CVec::Ones(1);
    ch.h_d = CVec::Zero(1);
    const PhaseShifts phases = PhaseShifts::all_ones(1);
    ch.set_phases(phases, cfg.beta);
    BVec s(1);
    s[0] = 1;
    RngStream rng(1);
    const CVec x = modulate(random_bits(cfg.data_bits_per_block(), rng), cfg);
    const BlockSignals blk = simulate_block(ch, phases, s, x, cfg, rng);
    CHECK((blk.Y.row(0).transpose() - x).norm() < 1e-15);
}

TEST_CASE("noise energy accounting") {
    auto cfg = SystemConfig::qpsk(4, 3, 8, 0.5, 0.5, 1.0, 0.8);
    RngStream rng = RngStream::derive(9, {stream_id::channels, 0});
    ChannelState ch = sample_channels(cfg, rng);
    const PhaseShifts phases = PhaseShifts::all_ones(cfg.N);
    ch.set_phases(phases, cfg.beta);
    BVec s(cfg.N);
    s << 1, 0, 1;
    RngStream rng2 = RngStream::derive(9, {stream_id::noise, 0});
    const CVec x = modulate(random_bits(cfg.data_bits_per_block(), rng2), cfg);

    const int R = 400;
    double acc = 0.0;
    for (int rep = 0; rep < R; ++rep) {
        const BlockSignals blk = simulate_block(ch, phases, s, x, cfg, rng2);
        acc += (blk.Y - blk.z * x.transpose()).squaredNorm();
    }
    acc /= R;
    const double expect = cfg.M * cfg.L * cfg.sigma_w2;
    // ||W||_F^2 is a sum of M*L exponentials, so its std is sigma^2*sqrt(M*L).
    const double se = cfg.sigma_w2 * std::sqrt(static_cast<double>(cfg.M * cfg.L) / R);
    CHECK(std::abs(acc - expect) < 3.0 * se);
}

TEST_CASE("noiseless blocks have rank one") {
    auto cfg = SystemConfig::qpsk(6, 5, 9, 0.9, 0.7, 2.0, 0.0);
    RngStream rng(23);
    ChannelState ch = sample_channels(cfg, rng);
    const PhaseShifts phases = PhaseShifts::random(cfg.N, rng);
    ch.set_phases(phases, cfg.beta);
    const BVec s = sample_lis_state(cfg, rng);
    const CVec x = modulate(random_bits(cfg.data_bits_per_block(), rng), cfg);
    const BlockSignals blk = simulate_block(ch, phases, s, x, cfg, rng);
    Eigen::JacobiSVD<CMat> svd(blk.Y);
    CHECK(svd.singularValues()(1) < 1e-12 * svd.singularValues()(0));
}

TEST_CASE("simulate_block rejects bad phases") {
    auto cfg = SystemConfig::qpsk(2, 2, 3, 1.0, 0.5, 1.0, 0.1);
    RngStream rng(3);
    ChannelState ch = sample_channels(cfg, rng);
    PhaseShifts phases = PhaseShifts::all_ones(cfg.N);
    ch.set_phases(phases, cfg.beta);
    phases.theta[0] = cplx(0.5, 0.0);
    const BVec s = BVec::Zero(cfg.N);
    const CVec x = modulate(random_bits(cfg.data_bits_per_block(), rng), cfg);
    CHECK_THROWS_AS(simulate_block(ch, phases, s, x, cfg, rng), std::invalid_argument);
}

TEST_CASE("block synthesis is reproducible") {
    auto cfg = SystemConfig::qpsk(3, 3, 6, 0.5, 0.6, 1.0, 0.5);
    auto build = [&] {
        RngStream rng = RngStream::derive(77, {stream_id::channels, 4});
        ChannelState ch = sample_channels(cfg, rng);
        const PhaseShifts phases = PhaseShifts::random(cfg.N, rng);
        ch.set_phases(phases, cfg.beta);
        const BVec s = sample_lis_state(cfg, rng);
        const CVec x = modulate(random_bits(cfg.data_bits_per_block(), rng), cfg);
        return simulate_block(ch, phases, s, x, cfg, rng);
    };
    const BlockSignals a = build();
    const BlockSignals b = build();
    CHECK(a.Y == b.Y);
    CHECK(a.z == b.z);
    CHECK(a.s == b.s);
}

TEST_CASE("rate info ties rho to the target rate") {
    const RateInfo ri = RateInfo::from_rate(0.4690);
    CHECK(std::abs(ri.rho - 0.9) < 1e-4);
    const RateInfo r2 = RateInfo::from_rho(0.8);
    CHECK(std::abs(r2.r - 0.7219) < 5e-5);
}

TEST_CASE("channel dump round trip") {
    auto cfg = SystemConfig::qpsk(3, 4, 7, 0.5, 0.5, 1.0, 1.0);
    RngStream rng(31);
    const ChannelState ch = sample_channels(cfg, rng);
    const std::string path = "model_dump_test.txt";
    save_channels(path, ch, cfg.L);
    Index L = 0;
    const ChannelState back = load_channels(path, &L);
    CHECK(L == cfg.L);
    CHECK(back.G == ch.G);
    CHECK(back.h_r == ch.h_r);
    CHECK(back.h_d == ch.h_d);
    std::remove(path.c_str());
}
