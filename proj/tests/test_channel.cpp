// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "whlisa/channel.hpp"

using namespace whlisa;

namespace {

SystemConfig small_config() {
    SystemConfig c;
    c.n_tx = 8;
    c.n_rx = 4;
    c.n_users = 2;
    c.n_subcarriers = 4;
    c.n_paths = 3;
    c.rf_tx = 3;
    c.rf_rx = 2;
    c.carrier_hz = 28e9;
    c.bandwidth_hz = 800e6;
    return c;
}

} // namespace

TEST_CASE("subcarrier offsets follow the symmetric grid") {
    const double b = 800e6;
    CHECK(subcarrier_offset(16, 32, b) == Catch::Approx(-b / 64.0));
    CHECK(subcarrier_offset(1, 32, b) == Catch::Approx(-15.5 * b / 32.0));
    for (int ell = 1; ell <= 32; ++ell)
        CHECK(subcarrier_offset(ell, 32, b) + subcarrier_offset(33 - ell, 32, b) ==
              Catch::Approx(0.0).margin(1e-6));
    CHECK_THROWS_AS(subcarrier_offset(0, 32, b), std::out_of_range);
    CHECK_THROWS_AS(subcarrier_offset(33, 32, b), std::out_of_range);
}

TEST_CASE("steering vector entries and norm") {
    SECTION("broadside gives constant entries") {
        const Vector a = steering_vector(16, 0.0, 0.5);
        for (int m = 0; m < 16; ++m)
            CHECK(std::abs(a(m) - cxd(0.25, 0.0)) < 1e-14);
    }
    SECTION("endfire two-element case") {
        const Vector a = steering_vector(2, M_PI / 2.0, 0.5);
        CHECK(std::abs(a(0) - cxd(1.0 / std::sqrt(2.0), 0.0)) < 1e-14);
        CHECK(std::abs(a(1) - cxd(-1.0 / std::sqrt(2.0), 0.0)) < 1e-14);
    }
    SECTION("unit norm for random angles") {
        SplitMix64 rng(3);
        for (int i = 0; i < 50; ++i) {
            const double ang = (rng.uniform() - 0.5) * M_PI;
            CHECK(steering_vector(11, ang, 0.37).norm() == Catch::Approx(1.0).margin(1e-12));
        }
    }
    SECTION("offset steering factors through a diagonal phase ramp") {
        SystemConfig c = small_config();
        const double ang = 0.4;
        const double kd_c = c.carrier_hz * c.spacing() / kSpeedOfLight;
        for (int ell = 1; ell <= c.n_subcarriers; ++ell) {
            const double xi = subcarrier_offset(ell, c.n_subcarriers, c.bandwidth_hz);
            const double kd = (c.carrier_hz + xi) * c.spacing() / kSpeedOfLight;
            const Vector exact = steering_vector(c.n_tx, ang, kd);
            const Vector center = steering_vector(c.n_tx, ang, kd_c);
            const double ramp = 2.0 * M_PI * xi * c.spacing() / kSpeedOfLight * std::sin(ang);
            for (int m = 0; m < c.n_tx; ++m)
                CHECK(std::abs(exact(m) - std::polar(1.0, ramp * m) * center(m)) < 1e-12);
        }
    }
}

TEST_CASE("channel matrix structure") {
    SystemConfig c = small_config();

    SECTION("single unit path without squint is a flat rank-one outer product") {
        c.n_paths = 1;
        c.beam_squint = false;
        ChannelRealization real;
        real.config = c;
        real.users.assign(c.n_users, {PathParams{0.3, -0.5, cxd(1.0, 0.0), 0.0}});
        const Matrix h1 = channel_matrix(real, 0, 1);
        CHECK(h1.norm() == Catch::Approx(1.0).margin(1e-12));
        CHECK(effective_rank(h1, 1e-10) == 1);
        for (int ell = 2; ell <= c.n_subcarriers; ++ell)
            CHECK((channel_matrix(real, 0, ell) - h1).norm() == 0.0);
        const double kd = c.carrier_hz * c.spacing() / kSpeedOfLight;
        const Matrix outer = steering_vector(c.n_rx, -0.5, kd) *
                             steering_vector(c.n_tx, 0.3, kd).adjoint();
        CHECK((h1 - outer).norm() < 1e-12);
    }

    SECTION("squint makes subcarriers differ, zero bandwidth restores equality") {
        const ChannelRealization real = generate_realization(c, 11);
        CHECK((channel_matrix(real, 0, 1) - channel_matrix(real, 0, 4)).norm() > 1e-6);

        SystemConfig flat = c;
        flat.bandwidth_hz = 0.0;
        ChannelRealization rflat = real;
        rflat.config = flat;
        CHECK((channel_matrix(rflat, 0, 1) - channel_matrix(rflat, 0, 4)).norm() == 0.0);
    }

    SECTION("rank bounded by the path count") {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const ChannelRealization real = generate_realization(c, seed);
            for (int ell = 1; ell <= c.n_subcarriers; ++ell)
                CHECK(effective_rank(channel_matrix(real, 0, ell), 1e-10) <= c.n_paths);
        }
    }

    SECTION("mean squared Frobenius norm matches the gain normalization") {
        double acc = 0.0;
        const int trials = 10000;
        for (int t = 0; t < trials; ++t) {
            const ChannelRealization real = generate_realization(c, derive_seed(77, t));
            acc += channel_matrix(real, 0, 1).squaredNorm() / trials;
        }
        const double expected = static_cast<double>(c.n_tx) * c.n_rx;
        CHECK(acc == Catch::Approx(expected).epsilon(0.05));
    }
}

TEST_CASE("realization generation is deterministic and well distributed") {
    const SystemConfig c = small_config();

    SECTION("same seed reproduces bitwise, different seeds differ") {
        const ChannelRealization a = generate_realization(c, 42);
        const ChannelRealization b = generate_realization(c, 42);
        const ChannelRealization d = generate_realization(c, 43);
        CHECK(realization_hash(a) == realization_hash(b));
        CHECK(a.users[0][0].aod == b.users[0][0].aod);
        CHECK(realization_hash(a) != realization_hash(d));
    }

    SECTION("angles uniform on (-pi/2, pi/2) by a chi-square check") {
        const int bins = 20;
        std::vector<int> hist(bins, 0);
        int total = 0;
        for (int t = 0; t < 10000; ++t) {
            const ChannelRealization real = generate_realization(c, derive_seed(5, t));
            for (const auto& paths : real.users)
                for (const PathParams& p : paths) {
                    REQUIRE(p.aod > -M_PI / 2.0);
                    REQUIRE(p.aod < M_PI / 2.0);
                    const int bin = static_cast<int>((p.aod / M_PI + 0.5) * bins);
                    ++hist[std::min(bins - 1, bin)];
                    ++total;
                }
        }
        const double expected = static_cast<double>(total) / bins;
        double chi2 = 0.0;
        for (int b = 0; b < bins; ++b)
            chi2 += (hist[b] - expected) * (hist[b] - expected) / expected;
        // 19 degrees of freedom; 43.8 is the 0.1% tail
        CHECK(chi2 < 43.8);
    }

    SECTION("delays populated only in delay-phase mode") {
        const ChannelRealization flat = generate_realization(c, 9, GainMode::Flat);
        const ChannelRealization dp = generate_realization(c, 9, GainMode::DelayPhase);
        CHECK(flat.users[0][0].delay == 0.0);
        CHECK(dp.users[0][0].delay > 0.0);
        CHECK(dp.users[0][0].delay <= c.n_subcarriers / c.bandwidth_hz);
    }
}

TEST_CASE("stacked channel blocks and effective rank") {
    SystemConfig c = small_config();
    const ChannelRealization real = generate_realization(c, 21);

    SECTION("block rows equal the per-subcarrier matrices") {
        const Matrix stack = stacked_channel(real, 1);
        REQUIRE(stack.rows() == c.n_rx * c.n_subcarriers);
        for (int ell = 1; ell <= c.n_subcarriers; ++ell)
            CHECK((stack.middleRows((ell - 1) * c.n_rx, c.n_rx) -
                   channel_matrix(real, 1, ell)).norm() == 0.0);
    }

    SECTION("single subcarrier stack is the channel matrix itself") {
        SystemConfig one = c;
        one.n_subcarriers = 1;
        const ChannelRealization r1 = generate_realization(one, 21);
        CHECK((stacked_channel(r1, 0) - channel_matrix(r1, 0, 1)).norm() == 0.0);
    }

    SECTION("effective rank basics") {
        CHECK(effective_rank(Matrix::Identity(6, 6)) == 6);
        const Vector a = steering_vector(6, 0.2, 0.5);
        const Vector b = steering_vector(4, -0.4, 0.5);
        CHECK(effective_rank(a * b.adjoint()) == 1);
        CHECK(effective_rank(Matrix::Zero(3, 3)) == 0);
        CHECK(effective_rank(stacked_channel(real, 0)) <=
              std::min(c.n_tx, c.n_rx * c.n_subcarriers));
    }

    SECTION("average effective rank grows with bandwidth") {
        double narrow = 0.0, wide = 0.0;
        const int trials = 200;
        for (int t = 0; t < trials; ++t) {
            SystemConfig cn = c, cw = c;
            cn.bandwidth_hz = 100e6;
            cw.bandwidth_hz = 3200e6;
            const std::uint64_t seed = derive_seed(2, t);
            narrow += effective_rank(stacked_channel(generate_realization(cn, seed), 0));
            wide += effective_rank(stacked_channel(generate_realization(cw, seed), 0));
        }
        CHECK(wide / trials > narrow / trials);
    }
}

TEST_CASE("config validation rejects inconsistent dimensions") {
    SystemConfig c = small_config();
    CHECK_NOTHROW(c.validate());
    c.rf_tx = c.n_tx + 1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = small_config();
    c.noise_var = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = small_config();
    c.carrier_hz = c.bandwidth_hz / 4.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
