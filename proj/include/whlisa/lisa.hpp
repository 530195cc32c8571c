// SPDX-License-Identifier: Apache-2.0
//
// Greedy wideband stream allocation: joint user selection over subcarriers,
// successive interference removal via nullspace projections, per-subcarrier
// triangular factors and waterfilling, with digital and hybrid modes.

#ifndef WHLISA_LISA_HPP
#define WHLISA_LISA_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "whlisa/hybrid.hpp"
#include "whlisa/numerics.hpp"
#include "whlisa/state.hpp"

namespace whlisa {

struct LisaOptions {
    Mode mode = Mode::Digital;
    double nu = 0.0;      // projector relaxation threshold
    int subbands = 0;     // 0 disables the subband approximation
    int ps_bits = 0;      // 0 means infinite-resolution phase shifters
    double p_norm = 1.0;  // norm for the user-selection score
    bool collect_trace = false;
};

/// Representative subcarrier per subband, 1-based, rounded half-up for
/// non-divisible block sizes.
inline std::vector<int> subband_indices(int n_subcarriers, int n_subbands) {
    if (n_subbands < 1 || n_subbands > n_subcarriers)
        throw std::invalid_argument("subband_indices: need 1 <= L_s <= L");
    std::vector<int> out(n_subbands);
    for (int n = 1; n <= n_subbands; ++n) {
        const double pos = n_subcarriers / (2.0 * n_subbands) +
                           (n - 1) * static_cast<double>(n_subcarriers) / n_subbands;
        int idx = static_cast<int>(std::floor(pos + 0.5));
        idx = std::max(1, std::min(n_subcarriers, idx));
        out[n - 1] = idx;
    }
    return out;
}

struct Candidate {
    int user = -1;
    Vector g;
    Vector q;
    Vector mu;             // hypothetical gains over the evaluated subcarriers
    bool feasible = false;
};

/// Builds the bilinearly projected channel for one user and extracts the
/// dominant combiner/precoder pair together with the per-subcarrier gains.
inline Candidate candidate_for_user(int user, const ChannelSet& channels,
                                    const Matrix& s_user, const Matrix& t,
                                    const std::vector<int>& ells_zero_based) {
    const int n_rx = static_cast<int>(s_user.rows());
    const int n_tx = static_cast<int>(t.rows());
    const int n_eval = static_cast<int>(ells_zero_based.size());

    Candidate cand;
    cand.user = user;

    std::vector<Matrix> projected(n_eval);
    Matrix wide(n_rx, static_cast<Eigen::Index>(n_tx) * n_eval);
    for (int j = 0; j < n_eval; ++j) {
        projected[j] = s_user * channels[user][ells_zero_based[j]] * t;
        wide.middleCols(static_cast<Eigen::Index>(j) * n_tx, n_tx) = projected[j];
    }

    const int n_total = static_cast<int>(channels[user].size());
    const double floor_ = 1e-10 * std::sqrt(static_cast<double>(n_total));
    if (wide.norm() <= floor_) {
        cand.mu = Vector::Zero(n_eval);
        return cand; // subspace exhausted
    }

    cand.g = dominant_singular_triplet(wide).left;

    Matrix t_block(n_eval, n_tx);
    for (int j = 0; j < n_eval; ++j)
        t_block.row(j) = cand.g.adjoint() * projected[j];
    if (t_block.norm() <= floor_) {
        cand.mu = Vector::Zero(n_eval);
        return cand;
    }
    cand.q = dominant_singular_triplet(t_block).right;
    cand.mu = t_block * cand.q;
    cand.feasible = cand.mu.cwiseAbs().sum() >= floor_;
    return cand;
}

/// Picks the user with the largest mu-norm; ties go to the lowest index.
inline int select_user(const std::vector<Candidate>& candidates, double p = 1.0) {
    int best = -1;
    double best_score = 0.0;
    for (const Candidate& c : candidates) {
        if (!c.feasible) continue;
        double score = 0.0;
        for (Eigen::Index i = 0; i < c.mu.size(); ++i)
            score += std::pow(std::abs(c.mu(i)), p);
        score = std::pow(score, 1.0 / p);
        if (best < 0 || score > best_score) {
            best = c.user;
            best_score = score;
        }
    }
    return best;
}

namespace detail {

/// Column norms of the inverse of the lower-triangular view; the slot gains
/// are their reciprocals.
inline std::vector<double> slot_gains(const Matrix& eff) {
    const Matrix inv = eff.triangularView<Eigen::Lower>().solve(
        Matrix::Identity(eff.rows(), eff.cols()));
    std::vector<double> out(eff.rows());
    for (Eigen::Index j = 0; j < eff.cols(); ++j)
        out[j] = 1.0 / inv.col(j).norm();
    return out;
}

} // namespace detail

struct SecondStageResult {
    std::vector<Matrix> new_eff;     // per-subcarrier extended factor
    std::vector<char> cand_ok;       // candidate slot numerically nonzero
    std::vector<double> cand_power;  // candidate slot gamma^2 after waterfilling
    std::vector<std::vector<double>> lambda;
    std::vector<std::vector<double>> power;
    double sum_rate = 0.0;
};

/// Extends every subcarrier's triangular factor with the candidate stream and
/// jointly waterfills all slots.
inline SecondStageResult second_stage(const LisaState& state,
                                      const ChannelSet& channels,
                                      const SystemConfig& cfg, int winner,
                                      const Vector& g, const Vector& q) {
    const int n_sc = cfg.n_subcarriers;
    SecondStageResult res;
    res.new_eff.resize(n_sc);
    res.cand_ok.assign(n_sc, 0);
    res.cand_power.assign(n_sc, 0.0);
    res.lambda.resize(n_sc);
    res.power.resize(n_sc);

    std::vector<double> gains;
    std::vector<std::pair<int, int>> slot_of_gain;
    for (int ell = 0; ell < n_sc; ++ell) {
        const int d_prev = static_cast<int>(state.active[ell].size());
        const Eigen::RowVectorXcd row = g.adjoint() * channels[winner][ell];
        Matrix eff(d_prev + 1, d_prev + 1);
        if (d_prev > 0) {
            eff.topLeftCorner(d_prev, d_prev) = state.eff[ell];
            eff.topRightCorner(d_prev, 1) = state.h_red[ell] * q;
            eff.bottomLeftCorner(1, d_prev) = row * state.q_red[ell];
        }
        eff(d_prev, d_prev) = (row * q)(0);
        res.new_eff[ell] = eff;

        const double scale = std::max(eff.norm(), 1e-300);
        res.cand_ok[ell] = std::abs(eff(d_prev, d_prev)) > 1e-12 * scale;

        std::vector<double> lam;
        if (res.cand_ok[ell]) {
            lam = detail::slot_gains(eff);
        } else {
            lam = d_prev > 0 ? detail::slot_gains(state.eff[ell])
                             : std::vector<double>{};
            lam.push_back(0.0);
        }
        res.lambda[ell] = lam;
        res.power[ell].assign(lam.size(), 0.0);
        for (std::size_t j = 0; j < lam.size(); ++j) {
            gains.push_back(lam[j]);
            slot_of_gain.emplace_back(ell, static_cast<int>(j));
        }
    }

    bool any = false;
    for (double v : gains)
        if (v > 0.0) { any = true; break; }
    if (!any) return res;

    const PowerAllocation pa = waterfilling(gains, cfg.noise_var, cfg.p_tx);
    for (std::size_t m = 0; m < gains.size(); ++m) {
        const auto [ell, j] = slot_of_gain[m];
        res.power[ell][j] = pa.powers[m];
        res.sum_rate += std::log2(1.0 + gains[m] * gains[m] * pa.powers[m] /
                                  cfg.noise_var) / n_sc;
        if (j == static_cast<int>(res.lambda[ell].size()) - 1)
            res.cand_power[ell] = pa.powers[m];
    }
    return res;
}

/// Removes the winner's directions from the transmit projector and the
/// winner's combiner from the per-user projector.
inline Matrix update_projectors(ProjectorState& proj, const ChannelSet& channels,
                                int winner, const Vector& g,
                                const std::vector<std::uint8_t>& beta, double nu) {
    std::vector<int> active_ells;
    for (std::size_t ell = 0; ell < beta.size(); ++ell)
        if (beta[ell]) active_ells.push_back(static_cast<int>(ell));
    Matrix basis(proj.T.rows(), 0);
    const Eigen::Index r = proj.T_basis.cols();
    if (!active_ells.empty() && r > 0) {
        // work in the coordinates of range(T) so the removed directions and
        // their complement stay orthonormal at machine precision
        Matrix coords(r, active_ells.size());
        for (std::size_t j = 0; j < active_ells.size(); ++j)
            coords.col(j) = proj.T_basis.adjoint() *
                            (channels[winner][active_ells[j]].adjoint() * g);
        const Matrix uc = orthonormal_range(coords, nu);
        const Eigen::Index removed = uc.cols();
        basis = proj.T_basis * uc;
        if (removed > 0) {
            const Matrix qfull =
                Eigen::HouseholderQR<Matrix>(uc).householderQ() *
                Matrix::Identity(r, r);
            proj.T_basis = (proj.T_basis * qfull.rightCols(r - removed)).eval();
            proj.T.noalias() = proj.T_basis * proj.T_basis.adjoint();
        }
    }
    proj.S[winner].noalias() -= g * g.adjoint();
    proj.S[winner] = 0.5 * (proj.S[winner] + proj.S[winner].adjoint()).eval();
    return basis;
}

namespace detail {

/// Recomputes gains on the committed structure and waterfills; the committed
/// activity flags stay fixed even when a slot ends up with zero power.
inline double allocate_committed(LisaState& state, const SystemConfig& cfg) {
    const int n_sc = cfg.n_subcarriers;
    state.lambda.assign(n_sc, {});
    state.power.assign(n_sc, {});
    std::vector<double> gains;
    std::vector<std::pair<int, int>> slot_of_gain;
    for (int ell = 0; ell < n_sc; ++ell) {
        const int d = static_cast<int>(state.active[ell].size());
        if (d == 0) continue;
        state.lambda[ell] = slot_gains(state.eff[ell]);
        state.power[ell].assign(d, 0.0);
        for (int j = 0; j < d; ++j) {
            gains.push_back(state.lambda[ell][j]);
            slot_of_gain.emplace_back(ell, j);
        }
    }
    if (gains.empty()) return 0.0;
    const PowerAllocation pa = waterfilling(gains, cfg.noise_var, cfg.p_tx);
    double rate = 0.0;
    for (std::size_t m = 0; m < gains.size(); ++m) {
        const auto [ell, j] = slot_of_gain[m];
        state.power[ell][j] = pa.powers[m];
        rate += std::log2(1.0 + gains[m] * gains[m] * pa.powers[m] /
                          cfg.noise_var) / n_sc;
    }
    return rate;
}

inline Solution finalize_digital(const LisaState& state, const SystemConfig& cfg) {
    const int n_sc = cfg.n_subcarriers;
    const int n_streams = static_cast<int>(state.streams.size());
    Solution sol;
    sol.mode = Mode::Digital;
    sol.streams = state.streams;
    sol.active = state.active;
    sol.lambda = state.lambda;
    sol.power = state.power;
    sol.sum_rate = state.sum_rate;
    sol.trace = state.trace;
    sol.precoders.resize(n_sc);
    sol.baseband.resize(n_sc);
    for (int ell = 0; ell < n_sc; ++ell) {
        const int d = static_cast<int>(state.active[ell].size());
        sol.baseband[ell] = Matrix::Zero(n_streams, d);
        if (d == 0) {
            sol.precoders[ell] = Matrix::Zero(cfg.n_tx, 0);
            continue;
        }
        Matrix psi = state.eff[ell].triangularView<Eigen::Lower>().solve(
            Matrix::Identity(d, d));
        for (int j = 0; j < d; ++j)
            psi.col(j) *= state.lambda[ell][j] * std::sqrt(state.power[ell][j]);
        for (int j = 0; j < d; ++j)
            sol.baseband[ell].row(state.active[ell][j]) = psi.row(j);
        sol.precoders[ell] = state.q_red[ell] * psi;
    }
    return sol;
}

} // namespace detail

/// Runs the full greedy loop and returns the committed solution.
inline Solution run_lisa(const ChannelSet& channels, const SystemConfig& cfg,
                         const LisaOptions& opt = {}) {
    cfg.validate();
    const int n_sc = cfg.n_subcarriers;

    LisaState state;
    state.proj.T = Matrix::Identity(cfg.n_tx, cfg.n_tx);
    state.proj.T_basis = Matrix::Identity(cfg.n_tx, cfg.n_tx);
    state.proj.S.assign(cfg.n_users, Matrix::Identity(cfg.n_rx, cfg.n_rx));
    state.active.resize(n_sc);
    state.h_red.assign(n_sc, Matrix(0, cfg.n_tx));
    state.q_red.assign(n_sc, Matrix(cfg.n_tx, 0));
    state.eff.assign(n_sc, Matrix(0, 0));
    state.lambda.assign(n_sc, {});
    state.power.assign(n_sc, {});

    std::vector<int> ells;
    if (opt.subbands > 0)
        for (int e : subband_indices(n_sc, opt.subbands)) ells.push_back(e - 1);
    else
        for (int e = 0; e < n_sc; ++e) ells.push_back(e);

    std::vector<int> streams_of_user(cfg.n_users, 0);

    for (int iter = 0; iter < cfg.rf_tx; ++iter) {
        std::vector<char> excluded(cfg.n_users, 0);
        for (int k = 0; k < cfg.n_users; ++k)
            if (streams_of_user[k] >= cfg.rf_rx) excluded[k] = 1;

        int winner = -1;
        Vector g, q;
        while (true) {
            std::vector<Candidate> cands;
            for (int k = 0; k < cfg.n_users; ++k) {
                if (excluded[k]) continue;
                cands.push_back(candidate_for_user(k, channels, state.proj.S[k],
                                                   state.proj.T, ells));
            }
            const int w = select_user(cands, opt.p_norm);
            if (w < 0) break;
            const Candidate* cw = nullptr;
            for (const Candidate& c : cands)
                if (c.user == w) cw = &c;
            if (opt.mode == Mode::Hybrid) {
                try {
                    g = hybrid_combiner(cw->g, state.proj.S[w], opt.ps_bits);
                } catch (const std::runtime_error&) {
                    excluded[w] = 1;
                    continue;
                }
            } else {
                g = cw->g;
            }
            winner = w;
            q = cw->q;
            break;
        }
        if (winner < 0) break;

        const SecondStageResult ss =
            second_stage(state, channels, cfg, winner, g, q);
        if (ss.sum_rate <= state.sum_rate) break;

        StreamAllocation alloc;
        alloc.user = winner;
        alloc.q = q;
        alloc.g = g;
        if (opt.mode == Mode::Hybrid) {
            Matrix ga = phase_project(alloc.g);
            if (opt.ps_bits > 0) ga = quantize_phases(ga, opt.ps_bits);
            alloc.g_analog = ga.col(0);
        }
        alloc.beta.assign(n_sc, 0);
        const int stream_id = static_cast<int>(state.streams.size());
        for (int ell = 0; ell < n_sc; ++ell) {
            if (!ss.cand_ok[ell] || ss.cand_power[ell] <= 0.0) continue;
            alloc.beta[ell] = 1;
            state.active[ell].push_back(stream_id);
            Matrix h_new(state.h_red[ell].rows() + 1, cfg.n_tx);
            h_new.topRows(state.h_red[ell].rows()) = state.h_red[ell];
            h_new.bottomRows(1) = g.adjoint() * channels[winner][ell];
            state.h_red[ell] = std::move(h_new);
            Matrix q_new(cfg.n_tx, state.q_red[ell].cols() + 1);
            q_new.leftCols(state.q_red[ell].cols()) = state.q_red[ell];
            q_new.rightCols(1) = q;
            state.q_red[ell] = std::move(q_new);
            state.eff[ell] = ss.new_eff[ell];
        }

        IterationTrace tr;
        if (opt.collect_trace) {
            tr.user = winner;
            tr.T_before = state.proj.T;
        }
        const Matrix basis =
            update_projectors(state.proj, channels, winner, g, alloc.beta, opt.nu);
        state.streams.push_back(std::move(alloc));
        ++streams_of_user[winner];
        state.sum_rate = detail::allocate_committed(state, cfg);
        if (opt.collect_trace) {
            tr.T_after = state.proj.T;
            tr.S_after = state.proj.S[winner];
            tr.Pi_basis = basis;
            tr.pi_rank = static_cast<int>(basis.cols());
            tr.sum_rate = state.sum_rate;
            state.trace.push_back(std::move(tr));
        }
    }

    if (opt.mode == Mode::Hybrid && !state.streams.empty()) {
        Matrix q_full(cfg.n_tx, state.streams.size());
        for (std::size_t j = 0; j < state.streams.size(); ++j)
            q_full.col(j) = state.streams[j].q;
        Matrix analog = phase_project(q_full);
        if (opt.ps_bits > 0) analog = quantize_phases(analog, opt.ps_bits);
        return hybrid_finalize(state, analog, cfg);
    }
    Solution sol = detail::finalize_digital(state, cfg);
    sol.mode = opt.mode;
    return sol;
}

} // namespace whlisa

#endif
