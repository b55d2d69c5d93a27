// Command-line front end for the PBIT link-level simulator: Monte Carlo BER
// sweeps, single-trial dumps, phase-shift optimization and plot emission.

#include <cinttypes>
#include <cstdio>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pbit/pbit.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_path;
    std::string schemes;
    std::string phase_mode;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::uint64_t trials = 0;
    bool trials_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--config", a.config_path, "experiment config file (key=value lines)");
    cmd->add_option("--out", a.out_path, "output path");
    cmd->add_option("--schemes", a.schemes, "comma-separated scheme list");
    cmd->add_option("--phase-mode", a.phase_mode, "random | optimized");
    cmd->add_option("--seed", a.seed, "master seed")->each([&](const std::string&) {
        a.seed_set = true;
    });
    cmd->add_option("--trials", a.trials, "Monte Carlo trials per grid point")
        ->each([&](const std::string&) { a.trials_set = true; });
}

pbit::ExperimentSpec make_spec(const CommonArgs& a) {
    pbit::ExperimentSpec spec;
    if (!a.config_path.empty()) {
        spec = pbit::parse_experiment_file(a.config_path);
    } else {
        std::istringstream empty;
        spec = pbit::parse_experiment_text(empty, "<defaults>");
    }
    if (a.seed_set) spec.master_seed = a.seed;
    if (a.trials_set) spec.trials = a.trials;
    if (!a.out_path.empty()) spec.output_path = a.out_path;
    if (!a.phase_mode.empty()) {
        const auto m = pbit::parse_phase_mode(a.phase_mode);
        if (!m) throw std::runtime_error("unknown phase mode: " + a.phase_mode);
        spec.phase_mode = *m;
    }
    if (!a.schemes.empty()) {
        spec.schemes.clear();
        for (const auto& name : pbit::detail::split_list(a.schemes)) {
            const auto s = pbit::parse_scheme(name);
            if (!s) throw std::runtime_error("unknown scheme: " + name);
            spec.schemes.push_back(*s);
        }
    }
    spec.validate();
    return spec;
}

int run_sweep(const CommonArgs& args, bool rate_table) {
    const pbit::ExperimentSpec spec = make_spec(args);
    if (rate_table) {
        std::printf("# per-element rate H(rho):\n");
        for (double rho : spec.rho_grid)
            std::printf("#   rho=%.4f  rate=%.4f bits\n", rho, pbit::binary_entropy(rho));
    }
    const auto records = pbit::sweep(spec);
    if (!spec.output_path.empty()) {
        pbit::write_csv(spec.output_path, records);
        std::printf("wrote %zu records to %s\n", records.size(), spec.output_path.c_str());
    }
    std::printf("%s\n", pbit::csv_header());
    for (const auto& r : records) std::printf("%s\n", pbit::to_csv_row(r).c_str());
    return 0;
}

int run_single_trial(const CommonArgs& args, double snr_db, double rho, std::uint64_t trial) {
    pbit::ExperimentSpec spec = make_spec(args);
    spec.snr_grid_db = {snr_db};
    spec.rho_grid = {rho};
    spec.trials = 1;

    const pbit::TrialDraw draw = pbit::make_trial_draw(spec, 0, trial);
    std::printf("trial %" PRIu64 "  seed %" PRIu64 "  snr %.4f dB  rho %.4f  phases %s\n", trial,
                spec.master_seed, snr_db, rho, pbit::phase_mode_name(spec.phase_mode));
    std::printf("channel: ||G||_F=%.8f ||h_r||=%.8f ||h_d||=%.8f\n", draw.ch.G.norm(),
                draw.ch.h_r.norm(), draw.ch.h_d.norm());
    const double gain =
        pbit::expected_gain(draw.phases.theta, draw.ch, rho, spec.cfg.beta);
    std::printf("expected gain with drawn phases: %.8f\n", gain);
    std::ostringstream sbits;
    for (pbit::Index n = 0; n < draw.s.size(); ++n) sbits << int(draw.s[n]);
    std::printf("s: %s (weight %d)\n", sbits.str().c_str(),
                int(draw.s.cast<int>().sum()));

    const pbit::TrialCounts counts = pbit::run_draw_at_snr(spec, draw, 0, 0, trial);
    for (pbit::Scheme sch : spec.schemes) {
        const auto& c = counts[static_cast<int>(sch)];
        std::printf("%-14s x: %" PRIu64 "/%" PRIu64 " errors   s: %" PRIu64 "/%" PRIu64
                    " errors   erased: %" PRIu64 "\n",
                    pbit::scheme_name(sch), c.x_errors, c.x_bits, c.s_errors, c.s_bits,
                    c.erased_blocks);
    }
    return 0;
}

int run_optimize(const CommonArgs& args, const std::string& channel_in,
                 const std::string& channel_out, int baselines) {
    pbit::ExperimentSpec spec = make_spec(args);
    const double rho = spec.rho_grid.front();

    pbit::ChannelState ch;
    if (!channel_in.empty()) {
        ch = pbit::load_channels(channel_in);
        if (ch.G.rows() != spec.cfg.M || ch.G.cols() != spec.cfg.N)
            throw std::runtime_error("channel dump dimensions do not match the config");
    } else {
        pbit::RngStream rng =
            pbit::RngStream::derive(spec.master_seed, {pbit::stream_id::channels, 0});
        ch = pbit::sample_channels(spec.cfg, rng);
    }
    if (!channel_out.empty()) pbit::save_channels(channel_out, ch, spec.cfg.L);

    pbit::RngStream round_rng =
        pbit::RngStream::derive(spec.master_seed, {pbit::stream_id::rounding, 0, 0});
    const pbit::BeamformResult res =
        pbit::optimize_phases(ch, rho, spec.cfg.beta, round_rng, spec.beamform);

    pbit::RngStream base_rng =
        pbit::RngStream::derive(spec.master_seed, {pbit::stream_id::random_phases, 0});
    double base_sum = 0.0, base_max = 0.0;
    for (int i = 0; i < baselines; ++i) {
        const pbit::PhaseShifts p = pbit::PhaseShifts::random(spec.cfg.N, base_rng);
        const double g = pbit::expected_gain(p.theta, ch, rho, spec.cfg.beta);
        base_sum += g;
        base_max = std::max(base_max, g);
    }

    std::printf("optimized expected gain: %.8f\n", res.achieved_gain);
    std::printf("sdp upper bound:         %.8f\n", res.sdp_upper_bound);
    std::printf("sdp iterations: %d (converged: %s)\n", res.sdp.iterations,
                res.sdp.converged ? "yes" : "no");
    std::printf("random-phase baseline over %d draws: mean %.8f, best %.8f\n", baselines,
                base_sum / baselines, base_max);
    std::printf("theta (radians):\n");
    for (pbit::Index n = 0; n < res.phases.theta.size(); ++n)
        std::printf("%.12g\n", std::arg(res.phases.theta[n]));
    if (!spec.output_path.empty()) {
        pbit::save_phases(spec.output_path, res.phases);
        std::printf("wrote phases to %s\n", spec.output_path.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PBIT link-level simulator"};
    app.require_subcommand(1);

    CommonArgs sweep_args;
    auto* snr_cmd = app.add_subcommand("sweep-snr", "BER vs SNR Monte Carlo sweep");
    add_common(snr_cmd, sweep_args);

    CommonArgs rho_args;
    auto* rho_cmd = app.add_subcommand("sweep-rho", "BER sweep across element-on probabilities");
    add_common(rho_cmd, rho_args);

    CommonArgs trial_args;
    double trial_snr = 0.0, trial_rho = 0.5;
    std::uint64_t trial_index = 0;
    auto* trial_cmd = app.add_subcommand("single-trial", "verbose dump of one trial");
    add_common(trial_cmd, trial_args);
    trial_cmd->add_option("--snr", trial_snr, "SNR in dB (inf for noiseless)");
    trial_cmd->add_option("--rho", trial_rho, "element-on probability");
    trial_cmd->add_option("--trial-index", trial_index, "trial counter");

    CommonArgs opt_args;
    std::string channel_in, channel_out;
    int baselines = 1000;
    auto* opt_cmd = app.add_subcommand("optimize-phases", "optimize and print phase shifts");
    add_common(opt_cmd, opt_args);
    opt_cmd->add_option("--channel-in", channel_in, "load a channel dump instead of sampling");
    opt_cmd->add_option("--channel-out", channel_out, "write the channel realization dump");
    opt_cmd->add_option("--baselines", baselines, "number of random-phase baselines");

    std::string plot_out = "plot_ber.py";
    auto* plot_cmd = app.add_subcommand("emit-plots", "write the CSV plotting script");
    plot_cmd->add_option("--out", plot_out, "script output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (snr_cmd->parsed()) return run_sweep(sweep_args, false);
        if (rho_cmd->parsed()) return run_sweep(rho_args, true);
        if (trial_cmd->parsed())
            return run_single_trial(trial_args, trial_snr, trial_rho, trial_index);
        if (opt_cmd->parsed()) return run_optimize(opt_args, channel_in, channel_out, baselines);
        if (plot_cmd->parsed()) {
            pbit::emit_plot_script(plot_out);
            std::printf("wrote %s\n", plot_out.c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
