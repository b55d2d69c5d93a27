#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "pbit/beamform.hpp"
#include "pbit/model.hpp"
#include "pbit/rng.hpp"
#include "pbit/rx_factor.hpp"
#include "pbit/rx_sparse.hpp"
#include "pbit/types.hpp"

namespace pbit {

enum class Scheme : int {
    NoLis = 0,
    Svd,
    BigAmp,
    LbX,
    SvdGamp,
    BigAmpGamp,
    BigAmpOmp,
    BigAmpCosamp,
    LbS,
};
inline constexpr int kSchemeCount = 9;

inline const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::NoLis: return "no-lis";
        case Scheme::Svd: return "svd";
        case Scheme::BigAmp: return "bigamp";
        case Scheme::LbX: return "lb-x";
        case Scheme::SvdGamp: return "svd+gamp";
        case Scheme::BigAmpGamp: return "bigamp+gamp";
        case Scheme::BigAmpOmp: return "bigamp+omp";
        case Scheme::BigAmpCosamp: return "bigamp+cosamp";
        case Scheme::LbS: return "lb-s";
    }
    return "?";
}

inline std::optional<Scheme> parse_scheme(const std::string& name) {
    for (int i = 0; i < kSchemeCount; ++i)
        if (name == scheme_name(static_cast<Scheme>(i))) return static_cast<Scheme>(i);
    return std::nullopt;
}

/// Which signal a scheme reports errors for.
inline bool scheme_counts_x(Scheme s) {
    return s == Scheme::NoLis || s == Scheme::Svd || s == Scheme::BigAmp || s == Scheme::LbX;
}
inline bool scheme_counts_s(Scheme s) { return !scheme_counts_x(s); }

enum class PhaseMode { Random, Optimized };

inline const char* phase_mode_name(PhaseMode m) {
    return m == PhaseMode::Random ? "random" : "optimized";
}

inline std::optional<PhaseMode> parse_phase_mode(const std::string& name) {
    if (name == "random") return PhaseMode::Random;
    if (name == "optimized") return PhaseMode::Optimized;
    return std::nullopt;
}

/// Full description of a Monte Carlo experiment.
struct ExperimentSpec {
    SystemConfig cfg;  // rho and sigma_w2 act as defaults; grids override per point
    std::vector<double> snr_grid_db;
    std::vector<double> rho_grid;
    std::vector<Scheme> schemes;
    PhaseMode phase_mode = PhaseMode::Optimized;
    std::uint64_t trials = 1;
    std::uint64_t master_seed = 0;
    std::string output_path;

    BeamformOptions beamform;
    BigAmpOptions bigamp;
    GampOptions gamp;

    void validate() const {
        cfg.validate();
        if (trials < 1) throw std::invalid_argument("experiment: trials must be >= 1");
        if (schemes.empty()) throw std::invalid_argument("experiment: schemes must be nonempty");
        if (snr_grid_db.empty()) throw std::invalid_argument("experiment: SNR grid is empty");
        for (std::size_t i = 1; i < snr_grid_db.size(); ++i)
            if (!(snr_grid_db[i] > snr_grid_db[i - 1]))
                throw std::invalid_argument("experiment: SNR grid must be strictly increasing");
        if (rho_grid.empty()) throw std::invalid_argument("experiment: rho grid is empty");
        for (double r : rho_grid)
            if (r < 0.0 || r > 1.0) throw std::invalid_argument("experiment: rho outside [0,1]");
    }
};

/// SNR convention: SNR = 1/sigma_w^2. +inf maps to a noiseless run.
inline double sigma_w2_from_snr_db(double snr_db) {
    if (std::isinf(snr_db) && snr_db > 0.0) return 0.0;
    return std::pow(10.0, -snr_db / 10.0);
}

struct SchemeCounts {
    std::uint64_t x_errors = 0;
    std::uint64_t x_bits = 0;
    std::uint64_t s_errors = 0;
    std::uint64_t s_bits = 0;
    std::uint64_t erased_blocks = 0;

    SchemeCounts& operator+=(const SchemeCounts& o) {
        x_errors += o.x_errors;
        x_bits += o.x_bits;
        s_errors += o.s_errors;
        s_bits += o.s_bits;
        erased_blocks += o.erased_blocks;
        return *this;
    }
};

using TrialCounts = std::array<SchemeCounts, kSchemeCount>;

/// One aggregated sweep point.
struct BerRecord {
    double snr_db = 0.0;
    double rho = 0.0;
    Scheme scheme = Scheme::BigAmp;
    PhaseMode phase_mode = PhaseMode::Optimized;
    double ber_x = std::numeric_limits<double>::quiet_NaN();
    double ber_s = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t bit_count_x = 0;
    std::uint64_t bit_count_s = 0;
    std::uint64_t erased_blocks = 0;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    double wilson_x = std::numeric_limits<double>::quiet_NaN();
    double wilson_s = std::numeric_limits<double>::quiet_NaN();
};

/// Half-width of the 95% Wilson score interval for k errors in n bits.
inline double wilson_half_width(std::uint64_t k, std::uint64_t n) {
    if (n == 0) return std::numeric_limits<double>::quiet_NaN();
    const double z = 1.959963984540054;
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2n = z * z / nn;
    return z * std::sqrt(p * (1.0 - p) / nn + z2n / (4.0 * nn)) / (1.0 + z2n);
}

/// Everything drawn once per (rho, trial): channels, phases, element states,
/// data bits and symbols. Noise is drawn per SNR point on top of this.
struct TrialDraw {
    ChannelState ch;  // with A computed for the drawn phases
    PhaseShifts phases;
    BVec s;
    std::vector<std::uint8_t> bits;
    CVec x;
    double beamform_gain = 0.0;  // 0 when phase_mode == Random
};

inline TrialDraw make_trial_draw(const ExperimentSpec& spec, std::size_t rho_index,
                                 std::uint64_t trial) {
    const double rho = spec.rho_grid.at(rho_index);
    SystemConfig cfg = spec.cfg;
    cfg.rho = rho;

    TrialDraw draw;
    {
        RngStream rng = RngStream::derive(spec.master_seed, {stream_id::channels, trial});
        draw.ch = sample_channels(cfg, rng);
    }
    if (spec.phase_mode == PhaseMode::Optimized) {
        RngStream rng =
            RngStream::derive(spec.master_seed, {stream_id::rounding, rho_index, trial});
        BeamformResult res = optimize_phases(draw.ch, rho, cfg.beta, rng, spec.beamform);
        draw.phases = std::move(res.phases);
        draw.beamform_gain = res.achieved_gain;
    } else {
        RngStream rng = RngStream::derive(spec.master_seed, {stream_id::random_phases, trial});
        draw.phases = PhaseShifts::random(cfg.N, rng);
    }
    draw.ch.set_phases(draw.phases, cfg.beta);
    {
        RngStream rng =
            RngStream::derive(spec.master_seed, {stream_id::lis_state, rho_index, trial});
        draw.s = sample_lis_state(cfg, rng);
    }
    {
        RngStream rng = RngStream::derive(spec.master_seed, {stream_id::symbols, trial});
        draw.bits = random_bits(cfg.data_bits_per_block(), rng);
        draw.x = modulate(draw.bits, cfg);
    }
    return draw;
}

namespace detail {

inline std::uint64_t count_bit_errors(const std::vector<std::uint8_t>& truth,
                                      const std::vector<std::uint8_t>& est) {
    std::uint64_t e = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) e += truth[i] != est[i];
    return e;
}

inline std::uint64_t count_state_errors(const BVec& truth, const BVec& est) {
    std::uint64_t e = 0;
    for (Index n = 0; n < truth.size(); ++n) e += truth[n] != est[n];
    return e;
}

}  // namespace detail

/// Execute all requested schemes for one draw at one SNR point. Factorizations
/// are shared between the schemes that consume them. Blocks whose scalar
/// ambiguity cannot be resolved are counted as erased, with all their bits
/// counted as errors.
inline TrialCounts run_draw_at_snr(const ExperimentSpec& spec, const TrialDraw& draw,
                                   std::size_t snr_index, std::size_t rho_index,
                                   std::uint64_t trial) {
    const double snr_db = spec.snr_grid_db.at(snr_index);
    SystemConfig cfg = spec.cfg;
    cfg.rho = spec.rho_grid.at(rho_index);
    cfg.sigma_w2 = sigma_w2_from_snr_db(snr_db);

    bool want[kSchemeCount] = {};
    for (Scheme s : spec.schemes) want[static_cast<int>(s)] = true;
    auto wants = [&](Scheme s) { return want[static_cast<int>(s)]; };

    // Noise, then the observed blocks. The no-LIS baseline reuses the same
    // noise realization on a surface-off block.
    CMat W = CMat::Zero(cfg.M, cfg.L);
    if (cfg.sigma_w2 > 0.0) {
        RngStream rng = RngStream::derive(spec.master_seed,
                                          {stream_id::noise, trial, snr_index});
        for (Index l = 0; l < cfg.L; ++l)
            for (Index m = 0; m < cfg.M; ++m) W(m, l) += rng.cn(cfg.sigma_w2);
    }
    CVec z = draw.ch.h_d;
    for (Index n = 0; n < cfg.N; ++n)
        if (draw.s[n]) z += draw.ch.A.col(n);
    const CMat Y = z * draw.x.transpose() + W;

    TrialCounts counts{};
    const std::uint64_t x_bits_per_block = static_cast<std::uint64_t>(cfg.data_bits_per_block());
    const std::uint64_t s_bits_per_block = static_cast<std::uint64_t>(cfg.N);

    auto count_x = [&](Scheme sch, const CVec& x_tilde) {
        SchemeCounts& c = counts[static_cast<int>(sch)];
        c.x_bits += x_bits_per_block;
        c.x_errors += detail::count_bit_errors(draw.bits, demodulate_bits(x_tilde, cfg));
    };
    auto count_s = [&](Scheme sch, const SparseEstimate& est) {
        SchemeCounts& c = counts[static_cast<int>(sch)];
        c.s_bits += s_bits_per_block;
        c.s_errors += detail::count_state_errors(draw.s, est.s_hat);
    };
    auto erase_x = [&](Scheme sch) {
        SchemeCounts& c = counts[static_cast<int>(sch)];
        c.x_bits += x_bits_per_block;
        c.x_errors += x_bits_per_block;
        c.erased_blocks += 1;
    };
    auto erase_s = [&](Scheme sch) {
        SchemeCounts& c = counts[static_cast<int>(sch)];
        c.s_bits += s_bits_per_block;
        c.s_errors += s_bits_per_block;
        c.erased_blocks += 1;
    };

    if (wants(Scheme::NoLis)) {
        const CMat Y0 = draw.ch.h_d * draw.x.transpose() + W;
        count_x(Scheme::NoLis, lower_bound_x(Y0, draw.ch.h_d, cfg.constellation));
    }
    if (wants(Scheme::LbX)) count_x(Scheme::LbX, lower_bound_x(Y, z, cfg.constellation));
    if (wants(Scheme::LbS)) count_s(Scheme::LbS, lower_bound_s(Y, draw.x, cfg, draw.ch, spec.gamp));

    const bool need_svd = wants(Scheme::Svd) || wants(Scheme::SvdGamp);
    const bool need_big = wants(Scheme::BigAmp) || wants(Scheme::BigAmpGamp) ||
                          wants(Scheme::BigAmpOmp) || wants(Scheme::BigAmpCosamp);
    const Index k_oracle = static_cast<Index>(
        std::count(draw.s.data(), draw.s.data() + draw.s.size(), std::uint8_t{1}));

    if (need_svd) {
        std::optional<FactorEstimate> est = finalize_factor(factor_svd(Y), cfg);
        if (est) {
            if (wants(Scheme::Svd)) count_x(Scheme::Svd, est->x_tilde);
            if (wants(Scheme::SvdGamp)) {
                SparseObservation obs = form_observation(Y, est->x_tilde, cfg, draw.ch);
                count_s(Scheme::SvdGamp, gamp_recover(obs, cfg.rho, spec.gamp));
            }
        } else {
            if (wants(Scheme::Svd)) erase_x(Scheme::Svd);
            if (wants(Scheme::SvdGamp)) erase_s(Scheme::SvdGamp);
        }
    }
    if (need_big) {
        const BigAmpPriors priors = BigAmpPriors::from_channel(draw.ch, cfg);
        std::optional<FactorEstimate> est =
            finalize_factor(factor_bigamp(Y, priors, spec.bigamp), cfg);
        if (est) {
            if (wants(Scheme::BigAmp)) count_x(Scheme::BigAmp, est->x_tilde);
            if (wants(Scheme::BigAmpGamp) || wants(Scheme::BigAmpOmp) ||
                wants(Scheme::BigAmpCosamp)) {
                SparseObservation obs = form_observation(Y, est->x_tilde, cfg, draw.ch);
                if (wants(Scheme::BigAmpGamp))
                    count_s(Scheme::BigAmpGamp, gamp_recover(obs, cfg.rho, spec.gamp));
                if (wants(Scheme::BigAmpOmp))
                    count_s(Scheme::BigAmpOmp, omp_recover(obs, k_oracle));
                if (wants(Scheme::BigAmpCosamp))
                    count_s(Scheme::BigAmpCosamp, cosamp_recover(obs, k_oracle));
            }
        } else {
            if (wants(Scheme::BigAmp)) erase_x(Scheme::BigAmp);
            if (wants(Scheme::BigAmpGamp)) erase_s(Scheme::BigAmpGamp);
            if (wants(Scheme::BigAmpOmp)) erase_s(Scheme::BigAmpOmp);
            if (wants(Scheme::BigAmpCosamp)) erase_s(Scheme::BigAmpCosamp);
        }
    }
    return counts;
}

/// One full trial at a single grid point; deterministic in
/// (spec, snr_index, rho_index, trial).
inline TrialCounts run_trial(const ExperimentSpec& spec, std::size_t snr_index,
                             std::size_t rho_index, std::uint64_t trial) {
    return run_draw_at_snr(spec, make_trial_draw(spec, rho_index, trial), snr_index, rho_index,
                           trial);
}

inline unsigned harness_thread_count() {
    if (const char* env = std::getenv("PBIT_THREADS")) {
        const long v = std::atol(env);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw >= 1 ? hw : 1;
}

/// Sweep the rho x SNR grid, aggregating per-scheme counts over all trials.
/// Trials run in parallel; aggregation is an order-independent integer sum,
/// so results do not depend on the thread count.
inline std::vector<BerRecord> sweep(const ExperimentSpec& spec) {
    spec.validate();
    const std::size_t n_snr = spec.snr_grid_db.size();
    const std::size_t n_rho = spec.rho_grid.size();

    // counts[rho][snr][scheme]
    std::vector<std::vector<TrialCounts>> totals(n_rho, std::vector<TrialCounts>(n_snr));

    const unsigned n_threads =
        std::min<std::uint64_t>(harness_thread_count(), std::max<std::uint64_t>(spec.trials, 1));
    for (std::size_t ri = 0; ri < n_rho; ++ri) {
        std::vector<std::vector<TrialCounts>> partial(n_threads,
                                                      std::vector<TrialCounts>(n_snr));
        std::atomic<std::uint64_t> next{0};
        auto worker = [&](unsigned tid) {
            for (;;) {
                const std::uint64_t trial = next.fetch_add(1);
                if (trial >= spec.trials) break;
                const TrialDraw draw = make_trial_draw(spec, ri, trial);
                for (std::size_t si = 0; si < n_snr; ++si) {
                    const TrialCounts c = run_draw_at_snr(spec, draw, si, ri, trial);
                    for (int k = 0; k < kSchemeCount; ++k) partial[tid][si][k] += c[k];
                }
            }
        };
        std::vector<std::thread> pool;
        for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker, t);
        worker(0);
        for (auto& t : pool) t.join();
        for (unsigned t = 0; t < n_threads; ++t)
            for (std::size_t si = 0; si < n_snr; ++si)
                for (int k = 0; k < kSchemeCount; ++k) totals[ri][si][k] += partial[t][si][k];
    }

    std::vector<BerRecord> records;
    records.reserve(n_rho * n_snr * spec.schemes.size());
    for (std::size_t ri = 0; ri < n_rho; ++ri)
        for (std::size_t si = 0; si < n_snr; ++si)
            for (Scheme sch : spec.schemes) {
                const SchemeCounts& c = totals[ri][si][static_cast<int>(sch)];
                BerRecord rec;
                rec.snr_db = spec.snr_grid_db[si];
                rec.rho = spec.rho_grid[ri];
                rec.scheme = sch;
                rec.phase_mode = spec.phase_mode;
                rec.trials = spec.trials;
                rec.seed = spec.master_seed;
                rec.erased_blocks = c.erased_blocks;
                rec.bit_count_x = c.x_bits;
                rec.bit_count_s = c.s_bits;
                if (c.x_bits > 0) {
                    rec.ber_x = static_cast<double>(c.x_errors) / static_cast<double>(c.x_bits);
                    rec.wilson_x = wilson_half_width(c.x_errors, c.x_bits);
                }
                if (c.s_bits > 0) {
                    rec.ber_s = static_cast<double>(c.s_errors) / static_cast<double>(c.s_bits);
                    rec.wilson_s = wilson_half_width(c.s_errors, c.s_bits);
                }
                records.push_back(rec);
            }
    return records;
}

// ---------------------------------------------------------------------------
// CSV and config formats

namespace detail {

inline std::string format_float(double v) {
    if (std::isnan(v)) return "";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.8g", v);
    return buf;
}

}  // namespace detail

inline const char* csv_header() {
    return "snr_db,rho,scheme,phase_mode,ber_x,ber_s,bit_count_x,bit_count_s,erased_blocks,"
           "trials,seed,wilson_x,wilson_s";
}

inline std::string to_csv_row(const BerRecord& r) {
    std::ostringstream os;
    os << detail::format_float(r.snr_db) << ',' << detail::format_float(r.rho) << ','
       << scheme_name(r.scheme) << ',' << phase_mode_name(r.phase_mode) << ','
       << detail::format_float(r.ber_x) << ',' << detail::format_float(r.ber_s) << ','
       << r.bit_count_x << ',' << r.bit_count_s << ',' << r.erased_blocks << ',' << r.trials
       << ',' << r.seed << ',' << detail::format_float(r.wilson_x) << ','
       << detail::format_float(r.wilson_s);
    return os.str();
}

inline void write_csv(const std::string& path, const std::vector<BerRecord>& records) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << csv_header() << '\n';
    for (const BerRecord& r : records) f << to_csv_row(r) << '\n';
    if (!f) throw std::runtime_error("write failed: " + path);
}

inline std::vector<BerRecord> read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    std::string line;
    if (!std::getline(f, line) || line != csv_header())
        throw std::runtime_error("unexpected CSV header in " + path);
    std::vector<BerRecord> out;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cols.push_back(cell);
        while (cols.size() < 13) cols.emplace_back();
        auto num = [](const std::string& s) {
            if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
            if (s == "inf") return std::numeric_limits<double>::infinity();
            if (s == "-inf") return -std::numeric_limits<double>::infinity();
            return std::stod(s);
        };
        BerRecord r;
        r.snr_db = num(cols[0]);
        r.rho = num(cols[1]);
        const auto sch = parse_scheme(cols[2]);
        const auto pm = parse_phase_mode(cols[3]);
        if (!sch || !pm) throw std::runtime_error("bad scheme or phase mode in " + path);
        r.scheme = *sch;
        r.phase_mode = *pm;
        r.ber_x = num(cols[4]);
        r.ber_s = num(cols[5]);
        r.bit_count_x = std::stoull(cols[6]);
        r.bit_count_s = std::stoull(cols[7]);
        r.erased_blocks = std::stoull(cols[8]);
        r.trials = std::stoull(cols[9]);
        r.seed = std::stoull(cols[10]);
        r.wilson_x = num(cols[11]);
        r.wilson_s = num(cols[12]);
        out.push_back(r);
    }
    return out;
}

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(s);
    while (std::getline(is, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t");
        const auto e = cell.find_last_not_of(" \t");
        out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    return out;
}

inline double parse_double(const std::string& s, const std::string& key) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("config: bad number for " + key + ": '" + s + "'");
    }
}

}  // namespace detail

/// Flat key=value experiment configuration. Lines starting with '#' and blank
/// lines are ignored; unknown keys are rejected.
inline ExperimentSpec parse_experiment_text(std::istream& in, const std::string& origin) {
    Index M = 32, N = 32, L = 100;
    double beta = 0.5, P = 1.0;
    ExperimentSpec spec;
    spec.snr_grid_db = {0.0};
    spec.rho_grid = {0.5};
    spec.schemes = {Scheme::BigAmp};
    spec.trials = 100;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto b = line.find_first_not_of(" \t");
        if (b == std::string::npos || line[b] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                     ": expected key=value");
        auto trim = [](std::string s) {
            const auto x = s.find_first_not_of(" \t");
            const auto y = s.find_last_not_of(" \t");
            return x == std::string::npos ? std::string() : s.substr(x, y - x + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "M")
            M = static_cast<Index>(detail::parse_double(val, key));
        else if (key == "N")
            N = static_cast<Index>(detail::parse_double(val, key));
        else if (key == "L")
            L = static_cast<Index>(detail::parse_double(val, key));
        else if (key == "beta")
            beta = detail::parse_double(val, key);
        else if (key == "P")
            P = detail::parse_double(val, key);
        else if (key == "snr_grid_db") {
            spec.snr_grid_db.clear();
            for (const auto& c : detail::split_list(val))
                spec.snr_grid_db.push_back(detail::parse_double(c, key));
        } else if (key == "rho_grid") {
            spec.rho_grid.clear();
            for (const auto& c : detail::split_list(val))
                spec.rho_grid.push_back(detail::parse_double(c, key));
        } else if (key == "schemes") {
            spec.schemes.clear();
            for (const auto& c : detail::split_list(val)) {
                const auto s = parse_scheme(c);
                if (!s) throw std::runtime_error("config: unknown scheme '" + c + "'");
                spec.schemes.push_back(*s);
            }
        } else if (key == "phase_mode") {
            const auto m = parse_phase_mode(val);
            if (!m) throw std::runtime_error("config: unknown phase mode '" + val + "'");
            spec.phase_mode = *m;
        } else if (key == "trials")
            spec.trials = static_cast<std::uint64_t>(detail::parse_double(val, key));
        else if (key == "master_seed")
            spec.master_seed = static_cast<std::uint64_t>(detail::parse_double(val, key));
        else if (key == "output_path")
            spec.output_path = val;
        else
            throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": unknown key '" +
                                     key + "'");
    }
    spec.cfg = SystemConfig::qpsk(M, N, L, beta, spec.rho_grid.front(), P, 1.0);
    spec.validate();
    return spec;
}

inline ExperimentSpec parse_experiment_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config: " + path);
    return parse_experiment_text(f, path);
}

/// Self-contained plotting script for a sweep CSV; takes the CSV path as its
/// argument so it can be regenerated at any time.
inline std::string plot_script_text() {
    return R"PY(#!/usr/bin/env python3
"""Plot BER curves from a pbit sweep CSV: usage plot_ber.py <sweep.csv>"""
import csv
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt


def load(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def series(rows, field):
    out = defaultdict(list)
    for r in rows:
        if not r[field]:
            continue
        key = (r["scheme"], r["phase_mode"], r["rho"])
        out[key].append((float(r["snr_db"]), float(r[field])))
    for v in out.values():
        v.sort()
    return out


def draw(ax, data, title):
    for (scheme, mode, rho), pts in sorted(data.items()):
        snr = [p[0] for p in pts]
        ber = [max(p[1], 1e-12) for p in pts]
        label = f"{scheme} ({mode}, rho={rho})"
        ax.semilogy(snr, ber, marker="o", label=label)
    ax.set_xlabel("SNR [dB]")
    ax.set_ylabel("BER")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7)


def main():
    if len(sys.argv) != 2:
        sys.exit(__doc__)
    rows = load(sys.argv[1])
    stem = sys.argv[1].rsplit(".", 1)[0]
    for field, tag in (("ber_x", "x"), ("ber_s", "s")):
        data = series(rows, field)
        if not data:
            continue
        fig, ax = plt.subplots(figsize=(7, 5))
        draw(ax, data, f"BER of {tag} vs SNR")
        fig.tight_layout()
        out = f"{stem}_ber_{tag}.png"
        fig.savefig(out, dpi=150)
        print(f"wrote {out}")


if __name__ == "__main__":
    main()
)PY";
}

inline void emit_plot_script(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << plot_script_text();
    if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace pbit
