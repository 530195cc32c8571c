// SPDX-License-Identifier: Apache-2.0
//
// whlisa - wideband hybrid beamforming with greedy stream allocation
// System-level parameters shared by the channel model and the allocation loop.

#ifndef WHLISA_CONFIG_HPP
#define WHLISA_CONFIG_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace whlisa {

inline constexpr double kSpeedOfLight = 299792458.0;

/// Flat vs delay-induced phase ramp on the per-path gains.
enum class GainMode { Flat, DelayPhase };

struct SystemConfig {
    int n_tx = 64;           // transmit antennas at the base station
    int n_rx = 16;           // receive antennas per user
    int n_users = 4;
    int n_subcarriers = 32;
    int n_paths = 4;         // propagation paths per user
    int rf_tx = 4;           // RF chains at the transmitter
    int rf_rx = 2;           // RF chains per user
    double carrier_hz = 28e9;
    double bandwidth_hz = 800e6;
    double spacing_m = 0.0;  // 0 means half-wavelength at the carrier
    double p_tx = 1.0;       // total transmit power, linear
    double noise_var = 1.0;  // sigma^2, linear
    bool beam_squint = true; // frequency-dependent steering when true

    double spacing() const {
        return spacing_m > 0.0 ? spacing_m : kSpeedOfLight / (2.0 * carrier_hz);
    }

    void validate() const {
        auto fail = [](const std::string& msg) {
            throw std::invalid_argument("SystemConfig: " + msg);
        };
        if (n_tx < 1) fail("n_tx must be >= 1");
        if (n_rx < 1) fail("n_rx must be >= 1");
        if (n_users < 1) fail("n_users must be >= 1");
        if (n_subcarriers < 1) fail("n_subcarriers must be >= 1");
        if (n_paths < 1) fail("n_paths must be >= 1");
        if (rf_tx < 1 || rf_tx > n_tx) fail("rf_tx must be in [1, n_tx]");
        if (rf_rx < 1 || rf_rx > n_rx) fail("rf_rx must be in [1, n_rx]");
        if (bandwidth_hz < 0.0) fail("bandwidth_hz must be >= 0");
        if (carrier_hz <= bandwidth_hz / 2.0) fail("carrier_hz must exceed bandwidth_hz/2");
        if (p_tx <= 0.0) fail("p_tx must be > 0");
        if (noise_var <= 0.0) fail("noise_var must be > 0");
    }
};

} // namespace whlisa

#endif
