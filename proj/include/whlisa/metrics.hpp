// SPDX-License-Identifier: Apache-2.0
//
// Rate and diagnostic computations: determinant-based sum rate, per-stream
// ZF rate, recomputed equivalent gains and switched-off subcarrier
// statistics.

#ifndef WHLISA_METRICS_HPP
#define WHLISA_METRICS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "whlisa/state.hpp"

namespace whlisa {

struct RateReport {
    std::vector<double> per_user;                  // R_k
    std::vector<std::vector<double>> per_user_sc;  // [k][ell] R_k[ell]
    double sum_rate = 0.0;
};

struct GainProfile {
    // [ell][slot], slot order matching Solution::active
    std::vector<std::vector<double>> lambda;
    std::vector<std::vector<double>> power;
};

namespace detail {

/// Per-user per-subcarrier precoder/combiner columns for the streams active
/// at that subcarrier.
inline void user_matrices(const Solution& sol, int user, int ell, int n_tx,
                          int n_rx, Matrix& f, Matrix& w) {
    std::vector<int> cols;
    for (std::size_t j = 0; j < sol.active[ell].size(); ++j)
        if (sol.streams[sol.active[ell][j]].user == user)
            cols.push_back(static_cast<int>(j));
    f.resize(n_tx, cols.size());
    w.resize(n_rx, cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
        f.col(j) = sol.precoders[ell].col(cols[j]);
        w.col(j) = sol.streams[sol.active[ell][cols[j]]].g;
    }
}

} // namespace detail

/// Determinant sum rate with inter-user interference treated as noise.
inline RateReport sum_rate_general(const ChannelSet& channels,
                                   const Solution& sol, double noise_var) {
    const int n_users = static_cast<int>(channels.size());
    const int n_sc = sol.n_subcarriers();
    const int n_tx = static_cast<int>(channels[0][0].cols());
    const int n_rx = static_cast<int>(channels[0][0].rows());

    RateReport rep;
    rep.per_user.assign(n_users, 0.0);
    rep.per_user_sc.assign(n_users, std::vector<double>(n_sc, 0.0));

    for (int ell = 0; ell < n_sc; ++ell) {
        std::vector<Matrix> f(n_users), w(n_users);
        for (int k = 0; k < n_users; ++k)
            detail::user_matrices(sol, k, ell, n_tx, n_rx, f[k], w[k]);
        for (int k = 0; k < n_users; ++k) {
            const int m = static_cast<int>(f[k].cols());
            if (m == 0) continue;
            const Matrix wh = w[k].adjoint() * channels[k][ell];
            const Matrix y = wh * f[k];
            Matrix x = noise_var * (w[k].adjoint() * w[k]);
            for (int i = 0; i < n_users; ++i) {
                if (i == k || f[i].cols() == 0) continue;
                const Matrix yi = wh * f[i];
                x.noalias() += yi * yi.adjoint();
            }
            Eigen::LDLT<Matrix> ldlt(x);
            if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
                throw std::runtime_error("sum_rate_general: singular noise matrix");
            const Matrix inner =
                Matrix::Identity(m, m) + ldlt.solve(y * y.adjoint());
            const double r =
                std::log2(std::abs(Eigen::FullPivLU<Matrix>(inner).determinant()));
            rep.per_user_sc[k][ell] = r;
            rep.per_user[k] += r / n_sc;
        }
    }
    for (double r : rep.per_user) rep.sum_rate += r;
    return rep;
}

/// Per-stream scalar-channel rate of a ZF solution.
inline double sum_rate_zf(const GainProfile& gains, double noise_var) {
    double rate = 0.0;
    const int n_sc = static_cast<int>(gains.lambda.size());
    for (int ell = 0; ell < n_sc; ++ell)
        for (std::size_t j = 0; j < gains.lambda[ell].size(); ++j) {
            const double lam = gains.lambda[ell][j];
            rate += std::log2(1.0 + lam * lam * gains.power[ell][j] / noise_var) /
                    n_sc;
        }
    return rate;
}

inline GainProfile cached_gains(const Solution& sol) {
    return {sol.lambda, sol.power};
}

/// Recomputes the per-slot gains from raw channels and final precoders and
/// combiners; validates the cached normalization end to end.
inline GainProfile equivalent_gains(const Solution& sol, const ChannelSet& channels) {
    const int n_sc = sol.n_subcarriers();
    GainProfile prof;
    prof.lambda.resize(n_sc);
    prof.power.resize(n_sc);
    for (int ell = 0; ell < n_sc; ++ell) {
        const int d = static_cast<int>(sol.active[ell].size());
        prof.lambda[ell].assign(d, 0.0);
        prof.power[ell].assign(d, 0.0);
        for (int j = 0; j < d; ++j) {
            const StreamAllocation& st = sol.streams[sol.active[ell][j]];
            const Vector p = sol.precoders[ell].col(j);
            const double pnorm = p.norm();
            if (pnorm < 1e-300) continue;
            const cxd recv = (st.g.adjoint() * channels[st.user][ell] * p)(0);
            prof.lambda[ell][j] = std::abs(recv) / pnorm;
            prof.power[ell][j] = pnorm * pnorm;
        }
    }
    return prof;
}

struct SwitchoffCdf {
    bool empty = true;
    std::vector<double> cdf; // over subcarrier index, length L
};

/// Empirical conditional CDF over subcarrier index of zero-power slots among
/// allocated streams.
inline SwitchoffCdf switchoff_cdf(const std::vector<Solution>& solutions) {
    SwitchoffCdf out;
    if (solutions.empty()) return out;
    const int n_sc = solutions.front().n_subcarriers();
    std::vector<double> counts(n_sc, 0.0);
    double total = 0.0;
    for (const Solution& sol : solutions)
        for (const StreamAllocation& st : sol.streams)
            for (int ell = 0; ell < n_sc; ++ell)
                if (!st.beta[ell]) {
                    counts[ell] += 1.0;
                    total += 1.0;
                }
    if (total == 0.0) return out;
    out.empty = false;
    out.cdf.resize(n_sc);
    double acc = 0.0;
    for (int ell = 0; ell < n_sc; ++ell) {
        acc += counts[ell] / total;
        out.cdf[ell] = acc;
    }
    return out;
}

/// Kolmogorov distance of a switched-off CDF from the uniform CDF over
/// subcarrier indices.
inline double kolmogorov_from_uniform(const SwitchoffCdf& cdf) {
    if (cdf.empty) return 0.0;
    const int n_sc = static_cast<int>(cdf.cdf.size());
    double d = 0.0;
    for (int ell = 0; ell < n_sc; ++ell)
        d = std::max(d, std::abs(cdf.cdf[ell] - (ell + 1.0) / n_sc));
    return d;
}

} // namespace whlisa

#endif
