// SPDX-License-Identifier: Apache-2.0
//
// Declarative Monte-Carlo experiment runner: config parsing, per-trial seed
// derivation, deterministic parallel execution and CSV output.

#ifndef WHLISA_EXPERIMENT_HPP
#define WHLISA_EXPERIMENT_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "whlisa/baselines.hpp"
#include "whlisa/lisa.hpp"
#include "whlisa/metrics.hpp"

namespace whlisa {

struct MethodSpec {
    std::string name;            // lisa-dn | lisa-dw | lisa-hw
    std::string label;           // CSV display name, defaults to name
    double nu = 0.0;
    int subbands = 0;
    int ps_bits = 0;

    const std::string& display() const { return label.empty() ? name : label; }

    LisaOptions options(Mode mode) const {
        LisaOptions opt;
        opt.mode = mode;
        opt.nu = nu;
        opt.subbands = subbands;
        opt.ps_bits = ps_bits;
        return opt;
    }
};

struct ExperimentSpec {
    SystemConfig config;
    GainMode gain_mode = GainMode::Flat;
    std::vector<double> snr_grid_db = {0.0};
    int trials = 1;
    std::uint64_t seed = 1;
    std::vector<MethodSpec> methods;
    // rank subcommand grids (cross product)
    std::vector<double> rank_carriers_hz;
    std::vector<double> rank_bandwidths_hz;

    void validate() const {
        config.validate();
        if (trials < 1) throw std::invalid_argument("spec: trials must be >= 1");
        if (snr_grid_db.empty())
            throw std::invalid_argument("spec: snr grid must be nonempty");
        for (const MethodSpec& m : methods)
            if (m.name != "lisa-dn" && m.name != "lisa-dw" && m.name != "lisa-hw")
                throw std::invalid_argument("spec: unknown method '" + m.name + "'");
    }
};

struct ResultRow {
    std::string method;
    double snr_db = 0.0;
    int trial = 0;
    std::uint64_t seed = 0;
    std::uint64_t chan_hash = 0;
    double sum_rate = 0.0;
    int streams_allocated = 0;
    int subcarriers_off = 0;
    double wall_time_ms = 0.0;
};

// ---------------------------------------------------------------------------
// Config file parsing: flat key/value lines plus [method NAME] blocks.

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<double> parse_numbers(const std::string& value, int line) {
    std::vector<double> out;
    std::istringstream iss(value);
    std::string tok;
    while (iss >> tok) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError("line " + std::to_string(line) +
                              ": bad number '" + tok + "'");
        }
    }
    return out;
}

inline double parse_one(const std::string& value, int line) {
    const auto v = parse_numbers(value, line);
    if (v.size() != 1)
        throw ConfigError("line " + std::to_string(line) +
                          ": expected a single number");
    return v[0];
}

} // namespace detail

inline ExperimentSpec parse_experiment_config(std::istream& in) {
    ExperimentSpec spec;
    MethodSpec* method = nullptr;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        const auto hash = s.find('#');
        if (hash != std::string::npos) s = s.substr(0, hash);
        s = detail::trim(s);
        if (s.empty()) continue;

        if (s.front() == '[') {
            if (s.back() != ']')
                throw ConfigError("line " + std::to_string(line) +
                                  ": unterminated section header");
            std::istringstream hdr(s.substr(1, s.size() - 2));
            std::string kind, name;
            hdr >> kind >> name;
            if (kind != "method" || name.empty())
                throw ConfigError("line " + std::to_string(line) +
                                  ": expected [method NAME]");
            spec.methods.push_back(MethodSpec{name});
            method = &spec.methods.back();
            continue;
        }

        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line) +
                              ": expected key = value");
        const std::string key = detail::trim(s.substr(0, eq));
        const std::string value = detail::trim(s.substr(eq + 1));
        if (value.empty())
            throw ConfigError("line " + std::to_string(line) + ": field '" + key +
                              "' has no value");

        auto num = [&] { return detail::parse_one(value, line); };
        if (method) {
            if (key == "label") method->label = value;
            else if (key == "nu") method->nu = num();
            else if (key == "subbands") method->subbands = static_cast<int>(num());
            else if (key == "ps_bits") method->ps_bits = static_cast<int>(num());
            else
                throw ConfigError("line " + std::to_string(line) +
                                  ": unknown method field '" + key + "'");
            continue;
        }
        SystemConfig& c = spec.config;
        if (key == "n_tx") c.n_tx = static_cast<int>(num());
        else if (key == "n_rx") c.n_rx = static_cast<int>(num());
        else if (key == "n_users") c.n_users = static_cast<int>(num());
        else if (key == "n_subcarriers") c.n_subcarriers = static_cast<int>(num());
        else if (key == "n_paths") c.n_paths = static_cast<int>(num());
        else if (key == "rf_tx") c.rf_tx = static_cast<int>(num());
        else if (key == "rf_rx") c.rf_rx = static_cast<int>(num());
        else if (key == "carrier_hz") c.carrier_hz = num();
        else if (key == "bandwidth_hz") c.bandwidth_hz = num();
        else if (key == "spacing_m") c.spacing_m = num();
        else if (key == "noise_var") c.noise_var = num();
        else if (key == "beam_squint") c.beam_squint = num() != 0.0;
        else if (key == "gain_mode") {
            if (value == "flat") spec.gain_mode = GainMode::Flat;
            else if (value == "delay-phase") spec.gain_mode = GainMode::DelayPhase;
            else
                throw ConfigError("line " + std::to_string(line) +
                                  ": gain_mode must be flat or delay-phase");
        }
        else if (key == "snr_db") spec.snr_grid_db = detail::parse_numbers(value, line);
        else if (key == "trials") spec.trials = static_cast<int>(num());
        else if (key == "seed") spec.seed = static_cast<std::uint64_t>(num());
        else if (key == "rank_carriers_hz")
            spec.rank_carriers_hz = detail::parse_numbers(value, line);
        else if (key == "rank_bandwidths_hz")
            spec.rank_bandwidths_hz = detail::parse_numbers(value, line);
        else
            throw ConfigError("line " + std::to_string(line) +
                              ": unknown field '" + key + "'");
    }
    return spec;
}

inline ExperimentSpec load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path);
    return parse_experiment_config(in);
}

// ---------------------------------------------------------------------------
// Deterministic parallel execution: results are indexed by trial, so the
// reduction order is independent of the worker count.

template <typename Fn>
void parallel_for(int n, int workers, Fn&& fn) {
    workers = std::max(1, workers);
    if (workers == 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : pool) t.join();
}

namespace detail {

inline Solution run_method(const MethodSpec& m, const ChannelSet& channels,
                           const SystemConfig& cfg) {
    if (m.name == "lisa-dw") return run_lisa(channels, cfg, m.options(Mode::Digital));
    if (m.name == "lisa-hw") return run_lisa(channels, cfg, m.options(Mode::Hybrid));
    throw std::invalid_argument("run_method: not a single-run method: " + m.name);
}

inline int count_off_slots(const Solution& sol) {
    int off = 0;
    for (const StreamAllocation& st : sol.streams)
        for (std::uint8_t b : st.beta)
            if (!b) ++off;
    return off;
}

} // namespace detail

/// Runs every (method, snr, trial) cell; all methods within a trial consume
/// the identical channel realization.
inline std::vector<ResultRow> run_sweep(const ExperimentSpec& spec,
                                        int workers = 1) {
    spec.validate();
    if (spec.methods.empty())
        throw std::invalid_argument("run_sweep: no methods configured");

    const int n_snr = static_cast<int>(spec.snr_grid_db.size());
    const int n_meth = static_cast<int>(spec.methods.size());
    std::vector<ResultRow> rows(
        static_cast<std::size_t>(spec.trials) * n_snr * n_meth);

    parallel_for(spec.trials, workers, [&](int trial) {
        const std::uint64_t seed = derive_seed(spec.seed, trial);
        const ChannelRealization real =
            generate_realization(spec.config, seed, spec.gain_mode);
        const ChannelSet channels = build_channels(real);
        const std::uint64_t hash = realization_hash(real);
        for (int si = 0; si < n_snr; ++si) {
            SystemConfig cfg = spec.config;
            cfg.p_tx = std::pow(10.0, spec.snr_grid_db[si] / 10.0) * cfg.noise_var;
            for (int mi = 0; mi < n_meth; ++mi) {
                const MethodSpec& m = spec.methods[mi];
                const auto t0 = std::chrono::steady_clock::now();
                ResultRow row;
                row.method = m.display();
                row.snr_db = spec.snr_grid_db[si];
                row.trial = trial;
                row.seed = seed;
                row.chan_hash = hash;
                if (m.name == "lisa-dn") {
                    const PerSubcarrierResult r = lisa_per_subcarrier(channels, cfg);
                    row.sum_rate = r.sum_rate;
                    row.streams_allocated = r.streams_allocated;
                } else {
                    const Solution sol = detail::run_method(m, channels, cfg);
                    row.sum_rate = sol.sum_rate;
                    row.streams_allocated = sol.n_streams();
                    row.subcarriers_off = detail::count_off_slots(sol);
                }
                row.wall_time_ms =
                    std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0).count();
                const std::size_t idx =
                    (static_cast<std::size_t>(trial) * n_snr + si) * n_meth + mi;
                rows[idx] = std::move(row);
            }
        }
    });
    return rows;
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

/// Per-row CSV with a fixed header order. Timing is opt-in so that repeated
/// runs with the same seed produce identical bytes.
inline void write_rows_csv(std::ostream& out, const std::vector<ResultRow>& rows,
                           bool with_timing = false) {
    out << "method,snr_db,trial,seed,chan_hash,sum_rate,streams_allocated,"
           "subcarriers_off";
    if (with_timing) out << ",wall_time_ms";
    out << "\n";
    for (const ResultRow& r : rows) {
        out << r.method << ',' << format_double(r.snr_db) << ',' << r.trial << ','
            << r.seed << ',' << r.chan_hash << ',' << format_double(r.sum_rate)
            << ',' << r.streams_allocated << ',' << r.subcarriers_off;
        if (with_timing) out << ',' << format_double(r.wall_time_ms);
        out << "\n";
    }
}

/// Mean sum rate per (method, snr) in the order they appear in the spec.
inline void write_aggregate_csv(std::ostream& out, const ExperimentSpec& spec,
                                const std::vector<ResultRow>& rows) {
    out << "method,snr_db,mean_sum_rate,mean_streams,mean_subcarriers_off\n";
    for (const MethodSpec& m : spec.methods)
        for (double snr : spec.snr_grid_db) {
            double rate = 0.0, streams = 0.0, off = 0.0;
            int n = 0;
            for (const ResultRow& r : rows)
                if (r.method == m.display() && r.snr_db == snr) {
                    rate += r.sum_rate;
                    streams += r.streams_allocated;
                    off += r.subcarriers_off;
                    ++n;
                }
            if (n == 0) continue;
            out << m.display() << ',' << format_double(snr) << ','
                << format_double(rate / n) << ',' << format_double(streams / n)
                << ',' << format_double(off / n) << "\n";
        }
}

/// Trial-averaged normalized equivalent gains per subcarrier; each trial's
/// lambda^2 profile is divided by its own maximum before averaging.
inline std::vector<double> average_gain_profile(const ExperimentSpec& spec,
                                                const MethodSpec& method,
                                                double snr_db, int workers = 1) {
    spec.validate();
    const int n_sc = spec.config.n_subcarriers;
    std::vector<std::vector<double>> per_trial(spec.trials,
                                               std::vector<double>(n_sc, 0.0));
    SystemConfig cfg = spec.config;
    cfg.p_tx = std::pow(10.0, snr_db / 10.0) * cfg.noise_var;
    parallel_for(spec.trials, workers, [&](int trial) {
        const std::uint64_t seed = derive_seed(spec.seed, trial);
        const ChannelSet channels = build_channels(
            generate_realization(cfg, seed, spec.gain_mode));
        const Solution sol = detail::run_method(method, channels, cfg);
        const GainProfile prof = equivalent_gains(sol, channels);
        std::vector<double>& acc = per_trial[trial];
        double peak = 0.0;
        for (int ell = 0; ell < n_sc; ++ell)
            for (double lam : prof.lambda[ell])
                peak = std::max(peak, lam * lam);
        if (peak <= 0.0) return;
        for (int ell = 0; ell < n_sc; ++ell) {
            double best = 0.0;
            for (double lam : prof.lambda[ell]) best = std::max(best, lam * lam);
            acc[ell] = best / peak;
        }
    });
    std::vector<double> avg(n_sc, 0.0);
    for (int trial = 0; trial < spec.trials; ++trial)
        for (int ell = 0; ell < n_sc; ++ell)
            avg[ell] += per_trial[trial][ell] / spec.trials;
    return avg;
}

/// Collects solutions of one method across trials (for CDF-style outputs).
inline std::vector<Solution> collect_solutions(const ExperimentSpec& spec,
                                               const MethodSpec& method,
                                               double snr_db, int workers = 1) {
    spec.validate();
    std::vector<Solution> sols(spec.trials);
    SystemConfig cfg = spec.config;
    cfg.p_tx = std::pow(10.0, snr_db / 10.0) * cfg.noise_var;
    parallel_for(spec.trials, workers, [&](int trial) {
        const std::uint64_t seed = derive_seed(spec.seed, trial);
        const ChannelSet channels = build_channels(
            generate_realization(cfg, seed, spec.gain_mode));
        sols[trial] = detail::run_method(method, channels, cfg);
    });
    return sols;
}

struct RankRow {
    double carrier_hz = 0.0;
    double bandwidth_hz = 0.0;
    double avg_effective_rank = 0.0;
};

/// Average effective rank of the stacked per-user channel over trials, for
/// the cross product of the configured carrier/bandwidth grids.
inline std::vector<RankRow> run_rank_table(const ExperimentSpec& spec,
                                           int workers = 1) {
    spec.validate();
    std::vector<RankRow> table;
    for (double fc : spec.rank_carriers_hz)
        for (double bw : spec.rank_bandwidths_hz) {
            SystemConfig cfg = spec.config;
            cfg.carrier_hz = fc;
            cfg.bandwidth_hz = bw;
            cfg.validate();
            std::vector<double> per_trial(spec.trials, 0.0);
            parallel_for(spec.trials, workers, [&](int trial) {
                const std::uint64_t seed = derive_seed(spec.seed, trial);
                const ChannelRealization real =
                    generate_realization(cfg, seed, spec.gain_mode);
                double acc = 0.0;
                for (int k = 0; k < cfg.n_users; ++k)
                    acc += effective_rank(stacked_channel(real, k));
                per_trial[trial] = acc / cfg.n_users;
            });
            RankRow row{fc, bw, 0.0};
            for (double v : per_trial) row.avg_effective_rank += v / spec.trials;
            table.push_back(row);
        }
    return table;
}

} // namespace whlisa

#endif
