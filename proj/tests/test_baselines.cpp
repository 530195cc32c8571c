// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "whlisa/baselines.hpp"

using namespace whlisa;

namespace {

SystemConfig desk_config() {
    SystemConfig c;
    c.n_tx = 16;
    c.n_rx = 4;
    c.n_users = 2;
    c.n_subcarriers = 8;
    c.n_paths = 3;
    c.rf_tx = 3;
    c.rf_rx = 2;
    c.carrier_hz = 28e9;
    c.bandwidth_hz = 800e6;
    c.p_tx = 10.0;
    return c;
}

} // namespace

TEST_CASE("per-subcarrier baseline structure") {
    const SystemConfig c = desk_config();
    const ChannelSet h = build_channels(generate_realization(c, 13));
    const PerSubcarrierResult res = lisa_per_subcarrier(h, c);

    REQUIRE(static_cast<int>(res.per_subcarrier.size()) == c.n_subcarriers);

    SECTION("each sub-problem obeys the per-subcarrier power split") {
        int streams = 0;
        double rate = 0.0;
        for (const Solution& sol : res.per_subcarrier) {
            CHECK(sol.n_subcarriers() == 1);
            CHECK(sol.n_streams() <= c.rf_tx);
            double p = 0.0;
            for (const Matrix& f : sol.precoders) p += f.squaredNorm();
            CHECK(p <= c.p_tx / c.n_subcarriers + 1e-9);
            streams += sol.n_streams();
            rate += sol.sum_rate / c.n_subcarriers;
        }
        CHECK(res.streams_allocated == streams);
        CHECK(res.sum_rate == Catch::Approx(rate).epsilon(1e-12));
    }

    SECTION("single subcarrier collapses onto the joint solver") {
        SystemConfig one = c;
        one.n_subcarriers = 1;
        const ChannelSet h1 = build_channels(generate_realization(one, 13));
        const PerSubcarrierResult base = lisa_per_subcarrier(h1, one);
        const Solution joint = run_lisa(h1, one, {});
        CHECK(base.sum_rate == Catch::Approx(joint.sum_rate).epsilon(1e-12));
    }
}

TEST_CASE("per-subcarrier beams dominate the shared-beam variant") {
    // Independent per-subcarrier beams are unconstrained across frequency,
    // so on average they cannot do worse than frequency-shared beams.
    const SystemConfig base = desk_config();
    for (double snr_db : {0.0, 10.0}) {
        SystemConfig c = base;
        c.p_tx = std::pow(10.0, snr_db / 10.0) * c.noise_var;
        double per_sc = 0.0, shared = 0.0;
        const int trials = 200;
        for (int t = 0; t < trials; ++t) {
            const ChannelSet h =
                build_channels(generate_realization(c, derive_seed(900, t)));
            per_sc += lisa_per_subcarrier(h, c).sum_rate / trials;
            shared += run_lisa(h, c, {}).sum_rate / trials;
        }
        INFO("snr " << snr_db << " dB: per-sc " << per_sc << ", shared " << shared);
        CHECK(per_sc >= shared * 0.98);
    }
}

TEST_CASE("flat rank-one channels remove the gap between the variants") {
    SystemConfig c = desk_config();
    c.n_users = 1;
    c.n_paths = 1;
    c.bandwidth_hz = 0.0;
    for (std::uint64_t trial = 0; trial < 5; ++trial) {
        const ChannelSet h =
            build_channels(generate_realization(c, derive_seed(950, trial)));
        const PerSubcarrierResult base = lisa_per_subcarrier(h, c);
        const Solution joint = run_lisa(h, c, {});
        INFO("trial " << trial);
        // identical subcarriers: equal power split is optimal for both
        CHECK(base.sum_rate == Catch::Approx(joint.sum_rate).epsilon(1e-9));
    }
}
