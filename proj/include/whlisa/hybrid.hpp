// SPDX-License-Identifier: Apache-2.0
//
// Mapping of digital solutions onto the hardware-feasible set: unit-modulus
// phase projection, phase quantization, hybrid combiner construction and the
// post-projection re-triangularization with fresh power allocation.

#ifndef WHLISA_HYBRID_HPP
#define WHLISA_HYBRID_HPP

#include <cmath>
#include <stdexcept>

#include "whlisa/numerics.hpp"
#include "whlisa/state.hpp"

namespace whlisa {

/// Entrywise projection onto the unit-modulus set. Zero entries map to 1.
inline Matrix phase_project(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            const cxd v = m(i, j);
            out(i, j) = std::abs(v) > 0.0 ? v / std::abs(v) : cxd(1.0, 0.0);
        }
    return out;
}

/// Snaps every phase to the nearest of the 2^bits grid points, ties toward
/// the smaller grid index.
inline Matrix quantize_phases(const Matrix& m, int bits) {
    if (bits < 1)
        throw std::invalid_argument("quantize_phases: bits must be >= 1");
    const double levels = std::ldexp(1.0, bits);
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            double ph = std::arg(m(i, j)); // (-pi, pi]
            if (ph < 0.0) ph += 2.0 * M_PI;
            double idx = std::floor(ph * levels / (2.0 * M_PI) + 0.5);
            // half-up toward the smaller index on exact ties
            if (idx - ph * levels / (2.0 * M_PI) == 0.5) idx -= 1.0;
            if (idx >= levels) idx = 0.0;
            out(i, j) = std::polar(1.0, 2.0 * M_PI * idx / levels);
        }
    return out;
}

/// Hardware-feasible combiner: phase projection followed by projection into
/// the current per-user subspace.
inline Vector hybrid_combiner(const Vector& g, const Matrix& s, int ps_bits = 0) {
    Matrix ga = phase_project(g);
    if (ps_bits > 0) ga = quantize_phases(ga, ps_bits);
    Vector projected = s * ga.col(0);
    const double norm = projected.norm();
    if (norm < 1e-10)
        throw std::runtime_error("hybrid_combiner: projected combiner collapsed");
    return projected / norm;
}

/// Re-runs the per-subcarrier interference removal and power allocation with
/// the constant-modulus analog precoder in place of the auxiliary precoders.
inline Solution hybrid_finalize(const LisaState& state, const Matrix& analog,
                                const SystemConfig& cfg) {
    const int n_sc = static_cast<int>(state.active.size());
    Solution sol;
    sol.mode = Mode::Hybrid;
    sol.streams = state.streams;
    sol.active = state.active;
    sol.analog_precoder = analog;
    sol.precoders.resize(n_sc);
    sol.baseband.resize(n_sc);
    sol.lambda.resize(n_sc);
    sol.power.resize(n_sc);
    sol.trace = state.trace;

    const int n_streams = static_cast<int>(state.streams.size());

    // Per-subcarrier Upsilon and its column gains. A singular Upsilon drops
    // its weakest slot (lambda = 0) and retries on the remainder.
    std::vector<Matrix> ups_inv(n_sc);
    std::vector<std::vector<int>> kept(n_sc); // local slot ids that survived
    std::vector<double> gains;
    std::vector<std::pair<int, int>> slot_of_gain; // (ell, local slot)
    for (int ell = 0; ell < n_sc; ++ell) {
        const int d = static_cast<int>(state.active[ell].size());
        sol.lambda[ell].assign(d, 0.0);
        sol.power[ell].assign(d, 0.0);
        if (d == 0) continue;
        std::vector<int> local(d);
        for (int j = 0; j < d; ++j) local[j] = j;
        while (!local.empty()) {
            const int dk = static_cast<int>(local.size());
            Matrix hr(dk, state.h_red[ell].cols());
            Matrix pa_b(analog.rows(), dk);
            for (int j = 0; j < dk; ++j) {
                hr.row(j) = state.h_red[ell].row(local[j]);
                pa_b.col(j) = analog.col(state.active[ell][local[j]]);
            }
            const Matrix ups = hr * pa_b;
            Eigen::FullPivLU<Matrix> lu(ups);
            if (lu.isInvertible()) {
                ups_inv[ell] = lu.inverse();
                kept[ell] = local;
                // normalization uses the true column norms of the candidate
                // precoder directions (analog columns are not unit norm)
                const Matrix dirs = pa_b * ups_inv[ell];
                for (int j = 0; j < dk; ++j) {
                    const double lam = 1.0 / dirs.col(j).norm();
                    sol.lambda[ell][local[j]] = lam;
                    gains.push_back(lam);
                    slot_of_gain.emplace_back(ell, local[j]);
                }
                break;
            }
            int weakest = 0;
            for (int j = 1; j < dk; ++j)
                if (std::abs(ups(j, j)) < std::abs(ups(weakest, weakest)))
                    weakest = j;
            local.erase(local.begin() + weakest);
        }
    }

    bool any = false;
    for (double g : gains)
        if (g > 0.0) { any = true; break; }
    if (any) {
        const PowerAllocation pa = waterfilling(gains, cfg.noise_var, cfg.p_tx);
        for (std::size_t m = 0; m < gains.size(); ++m)
            sol.power[slot_of_gain[m].first][slot_of_gain[m].second] = pa.powers[m];
    }

    double rate = 0.0;
    for (int ell = 0; ell < n_sc; ++ell) {
        const int d = static_cast<int>(state.active[ell].size());
        sol.baseband[ell] = Matrix::Zero(n_streams, d);
        if (d == 0 || ups_inv[ell].size() == 0) {
            sol.precoders[ell] = Matrix::Zero(cfg.n_tx, d);
            continue;
        }
        const int dk = static_cast<int>(kept[ell].size());
        Matrix psi = ups_inv[ell];
        for (int j = 0; j < dk; ++j) {
            const int slot = kept[ell][j];
            const double lam = sol.lambda[ell][slot];
            const double gam = std::sqrt(sol.power[ell][slot]);
            psi.col(j) *= lam * gam;
            rate += std::log2(1.0 + lam * lam * sol.power[ell][slot] / cfg.noise_var) /
                    n_sc;
        }
        for (int j = 0; j < dk; ++j) {
            // scatter back through the selection: baseband column belongs to
            // the slot's position among this subcarrier's streams
            sol.baseband[ell].col(kept[ell][j]).setZero();
            for (int r = 0; r < dk; ++r)
                sol.baseband[ell](state.active[ell][kept[ell][r]], kept[ell][j]) =
                    psi(r, j);
        }
        sol.precoders[ell] = analog * sol.baseband[ell];
    }
    sol.sum_rate = rate;
    return sol;
}

} // namespace whlisa

#endif
