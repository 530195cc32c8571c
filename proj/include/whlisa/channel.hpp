// SPDX-License-Identifier: Apache-2.0
//
// Multipath channel model for a ULA downlink with frequency-dependent
// (beam-squint) steering vectors across the OFDM subcarriers.

#ifndef WHLISA_CHANNEL_HPP
#define WHLISA_CHANNEL_HPP

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "whlisa/config.hpp"

namespace whlisa {

using cxd = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Minimal splittable counter-based generator; fully portable bit-for-bit.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    /// Uniform on [0,1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    /// Standard circularly-symmetric complex Gaussian, E|z|^2 = 1.
    cxd cgauss() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-std::log(u1));
        const double ph = 2.0 * M_PI * u2;
        return {r * std::cos(ph), r * std::sin(ph)};
    }
};

/// Derives the per-trial seed from a base seed; documented so sweeps are
/// portable across implementations.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t trial) {
    SplitMix64 g(base + (trial + 1) * 0x9E3779B97F4A7C15ULL);
    return g.next();
}

struct PathParams {
    double aod = 0.0;   // departure angle, radians, in (-pi/2, pi/2)
    double aoa = 0.0;   // arrival angle, radians, in (-pi/2, pi/2)
    cxd gain{0.0, 0.0};
    double delay = 0.0; // seconds, used only in delay-phase gain mode
};

struct ChannelRealization {
    SystemConfig config;
    GainMode gain_mode = GainMode::Flat;
    std::vector<std::vector<PathParams>> users; // [k][p]
};

/// Frequency offset of subcarrier ell (1-based) from the carrier.
inline double subcarrier_offset(int ell, int count, double bandwidth_hz) {
    if (ell < 1 || ell > count)
        throw std::out_of_range("subcarrier_offset: index out of range");
    return (static_cast<double>(ell) - 0.5 * (count + 1)) * bandwidth_hz / count;
}

/// ULA steering vector; wavenumber_spacing is the dimensionless product of
/// wavenumber and element spacing.
inline Vector steering_vector(int n_elems, double angle, double wavenumber_spacing) {
    Vector a(n_elems);
    const double step = 2.0 * M_PI * wavenumber_spacing * std::sin(angle);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_elems));
    for (int m = 0; m < n_elems; ++m)
        a(m) = std::polar(scale, step * m);
    return a;
}

/// Channel response matrix H_k[ell], ell 1-based.
inline Matrix channel_matrix(const ChannelRealization& real, int user, int ell) {
    const SystemConfig& c = real.config;
    if (user < 0 || user >= c.n_users)
        throw std::out_of_range("channel_matrix: user index out of range");
    const double xi = subcarrier_offset(ell, c.n_subcarriers, c.bandwidth_hz);
    const double freq = c.beam_squint ? c.carrier_hz + xi : c.carrier_hz;
    const double kd = freq * c.spacing() / kSpeedOfLight;

    Matrix h = Matrix::Zero(c.n_rx, c.n_tx);
    for (const PathParams& p : real.users[user]) {
        cxd g = p.gain;
        if (real.gain_mode == GainMode::DelayPhase)
            g *= std::polar(1.0, -2.0 * M_PI * xi * p.delay);
        const Vector ams = steering_vector(c.n_rx, p.aoa, kd);
        const Vector abs_ = steering_vector(c.n_tx, p.aod, kd);
        h.noalias() += g * (ams * abs_.adjoint());
    }
    return h;
}

/// Draws a random realization; deterministic given the seed.
inline ChannelRealization generate_realization(const SystemConfig& config,
                                               std::uint64_t seed,
                                               GainMode gain_mode = GainMode::Flat) {
    config.validate();
    SplitMix64 rng(seed);
    ChannelRealization real;
    real.config = config;
    real.gain_mode = gain_mode;
    real.users.resize(config.n_users);
    const double var = static_cast<double>(config.n_tx) * config.n_rx / config.n_paths;
    const double amp = std::sqrt(var);
    const double max_delay =
        config.bandwidth_hz > 0.0 ? config.n_subcarriers / config.bandwidth_hz : 0.0;
    for (int k = 0; k < config.n_users; ++k) {
        real.users[k].resize(config.n_paths);
        for (PathParams& p : real.users[k]) {
            p.aod = (rng.uniform() - 0.5) * M_PI;
            p.aoa = (rng.uniform() - 0.5) * M_PI;
            p.gain = amp * rng.cgauss();
            if (gain_mode == GainMode::DelayPhase)
                p.delay = rng.uniform() * max_delay;
        }
    }
    return real;
}

/// All channel matrices of one realization, indexed [user][subcarrier].
using ChannelSet = std::vector<std::vector<Matrix>>;

inline ChannelSet build_channels(const ChannelRealization& real) {
    ChannelSet h(real.config.n_users);
    for (int k = 0; k < real.config.n_users; ++k) {
        h[k].reserve(real.config.n_subcarriers);
        for (int ell = 1; ell <= real.config.n_subcarriers; ++ell)
            h[k].push_back(channel_matrix(real, k, ell));
    }
    return h;
}

/// Vertical stack of H_k over all subcarriers, (R*L) x N.
inline Matrix stacked_channel(const ChannelRealization& real, int user) {
    const SystemConfig& c = real.config;
    Matrix h(c.n_rx * c.n_subcarriers, c.n_tx);
    for (int ell = 1; ell <= c.n_subcarriers; ++ell)
        h.middleRows((ell - 1) * c.n_rx, c.n_rx) = channel_matrix(real, user, ell);
    return h;
}

/// Count of singular values at least ratio times the largest.
inline int effective_rank(const Matrix& m, double ratio = 1.0 / 50.0) {
    if (m.size() == 0 || m.norm() == 0.0) return 0;
    Eigen::BDCSVD<Matrix> svd(m);
    const auto& s = svd.singularValues();
    const double thr = ratio * s(0);
    int count = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) >= thr) ++count;
    return count;
}

/// FNV-1a over the raw parameters; lets the harness prove that all methods
/// within a trial consumed the same realization.
inline std::uint64_t realization_hash(const ChannelRealization& real) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto mix = [&h](double v) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        std::memcpy(&bits, &v, sizeof(bits));
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xFF;
            h *= 0x100000001B3ULL;
        }
    };
    for (const auto& paths : real.users)
        for (const PathParams& p : paths) {
            mix(p.aod);
            mix(p.aoa);
            mix(p.gain.real());
            mix(p.gain.imag());
            mix(p.delay);
        }
    return h;
}

} // namespace whlisa

#endif
