// SPDX-License-Identifier: Apache-2.0
//
// Monte-Carlo experiment runner. Subcommands:
//   sweep  - rate vs SNR table, one row per (method, snr, trial)
//   gains  - trial-averaged normalized equivalent gains per subcarrier
//   cdf    - empirical conditional CDF of switched-off subcarriers
//   rank   - average effective channel rank over a carrier/bandwidth grid
//
// Exit codes: 0 success, 1 usage or config error, 2 runtime error.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "whlisa/whlisa.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int parallel = 1;
    std::string format = "csv";
    bool timing = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config file")
        ->required();
    cmd->add_option("--out", args.out_path, "output path (default: stdout)");
    cmd->add_option("--seed", args.seed, "override the config's base seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--parallel", args.parallel, "worker thread count")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--format", args.format, "output format")
        ->check(CLI::IsMember({"csv"}));
    cmd->add_flag("--timing", args.timing,
                  "append wall_time_ms (breaks byte-level reproducibility)");
}

whlisa::ExperimentSpec load_spec(const CommonArgs& args) {
    whlisa::ExperimentSpec spec = whlisa::load_experiment_config(args.config_path);
    if (args.seed_set) spec.seed = args.seed;
    spec.validate();
    return spec;
}

int with_output(const CommonArgs& args,
                const std::function<void(std::ostream&)>& emit) {
    if (args.out_path.empty()) {
        emit(std::cout);
        return 0;
    }
    std::ofstream out(args.out_path);
    if (!out) {
        std::cerr << "error: cannot open output path: " << args.out_path << "\n";
        return 2;
    }
    emit(out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"wideband hybrid beamforming Monte-Carlo harness"};
    app.require_subcommand(1);

    CommonArgs sweep_args, gains_args, cdf_args, rank_args;
    bool aggregate_only = false;
    double profile_snr_db = 0.0;
    bool profile_snr_set = false;

    CLI::App* sweep = app.add_subcommand("sweep", "rate vs SNR Monte-Carlo sweep");
    add_common(sweep, sweep_args);
    sweep->add_flag("--aggregate", aggregate_only,
                    "emit per-(method,snr) means instead of per-trial rows");

    CLI::App* gains = app.add_subcommand(
        "gains", "trial-averaged normalized equivalent gains per subcarrier");
    add_common(gains, gains_args);
    gains->add_option("--snr-db", profile_snr_db,
                      "SNR to evaluate (default: first grid entry)")
        ->each([&](const std::string&) { profile_snr_set = true; });

    CLI::App* cdf = app.add_subcommand(
        "cdf", "conditional CDF of switched-off subcarriers");
    add_common(cdf, cdf_args);
    cdf->add_option("--snr-db", profile_snr_db,
                    "SNR to evaluate (default: first grid entry)")
        ->each([&](const std::string&) { profile_snr_set = true; });

    CLI::App* rank = app.add_subcommand(
        "rank", "average effective channel rank per (carrier, bandwidth)");
    add_common(rank, rank_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 1;
    }

    try {
        if (sweep->parsed()) {
            const whlisa::ExperimentSpec spec = load_spec(sweep_args);
            const auto rows = whlisa::run_sweep(spec, sweep_args.parallel);
            return with_output(sweep_args, [&](std::ostream& out) {
                if (aggregate_only)
                    whlisa::write_aggregate_csv(out, spec, rows);
                else
                    whlisa::write_rows_csv(out, rows, sweep_args.timing);
            });
        }
        if (gains->parsed() || cdf->parsed()) {
            const CommonArgs& args = gains->parsed() ? gains_args : cdf_args;
            const whlisa::ExperimentSpec spec = load_spec(args);
            if (spec.methods.empty())
                throw whlisa::ConfigError("config defines no methods");
            const double snr =
                profile_snr_set ? profile_snr_db : spec.snr_grid_db.front();
            if (gains->parsed()) {
                return with_output(args, [&](std::ostream& out) {
                    out << "method,subcarrier,avg_norm_gain_sq\n";
                    for (const whlisa::MethodSpec& m : spec.methods) {
                        if (m.name == "lisa-dn") continue;
                        const auto prof = whlisa::average_gain_profile(
                            spec, m, snr, args.parallel);
                        for (std::size_t ell = 0; ell < prof.size(); ++ell)
                            out << m.display() << ',' << ell + 1 << ','
                                << whlisa::format_double(prof[ell]) << "\n";
                    }
                });
            }
            return with_output(args, [&](std::ostream& out) {
                out << "method,subcarrier,cdf\n";
                for (const whlisa::MethodSpec& m : spec.methods) {
                    if (m.name == "lisa-dn") continue;
                    const auto sols =
                        whlisa::collect_solutions(spec, m, snr, args.parallel);
                    const auto c = whlisa::switchoff_cdf(sols);
                    if (c.empty) {
                        out << m.display() << ",empty,\n";
                        continue;
                    }
                    for (std::size_t ell = 0; ell < c.cdf.size(); ++ell)
                        out << m.display() << ',' << ell + 1 << ','
                            << whlisa::format_double(c.cdf[ell]) << "\n";
                }
            });
        }
        if (rank->parsed()) {
            const whlisa::ExperimentSpec spec = load_spec(rank_args);
            if (spec.rank_carriers_hz.empty() || spec.rank_bandwidths_hz.empty())
                throw whlisa::ConfigError(
                    "rank: config must set rank_carriers_hz and rank_bandwidths_hz");
            const auto table = whlisa::run_rank_table(spec, rank_args.parallel);
            return with_output(rank_args, [&](std::ostream& out) {
                out << "carrier_hz,bandwidth_hz,avg_eff_rank\n";
                for (const whlisa::RankRow& r : table)
                    out << whlisa::format_double(r.carrier_hz) << ','
                        << whlisa::format_double(r.bandwidth_hz) << ','
                        << whlisa::format_double(r.avg_effective_rank) << "\n";
            });
        }
    } catch (const whlisa::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
