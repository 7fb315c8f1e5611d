#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "dqpt/circuit.hpp"
#include "dqpt/constants.hpp"
#include "dqpt/device_config.hpp"
#include "dqpt/errors.hpp"

using namespace dqpt;
using Catch::Matchers::WithinRel;
using Catch::Matchers::WithinAbs;

namespace {
LineSpec line_at(double alpha, double fc = 20e9) { return {alpha * constants::R_Q, 0.2e9, 0.2e9, fc}; }
}  // namespace

TEST_CASE("resistance quantum is h/4e^2") {
    CHECK_THAT(constants::R_Q, WithinRel(6453.2, 1e-4));
    CHECK_THAT(line_at(1.0).alpha(), WithinRel(1.0, 1e-12));
}

TEST_CASE("flux map follows |cos(pi phi)|") {
    const JunctionSpec j(3e9, 40e9);
    CHECK_THAT(flux_map(j, {0.0}), WithinRel(3e9, 1e-14));
    CHECK_THAT(flux_map(j, {0.5}), WithinAbs(0.0, 1e-3));
    CHECK_THAT(flux_map(j, {0.25}), WithinRel(3e9 / std::sqrt(2.0), 1e-12));
    CHECK_THAT(flux_map(j, {1.0 / 3.0}), WithinRel(1.5e9, 1e-12));
}

TEST_CASE("flux map is periodic, even and bounded") {
    const JunctionSpec j(5e9, 40e9);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 200; ++i) {
        const double p = u(rng);
        const double e = flux_map(j, {p});
        CHECK(e >= 0.0);
        CHECK(e <= 5e9 * (1 + 1e-15));
        CHECK_THAT(flux_map(j, {p + 1.0}), WithinAbs(e, 1e-5 * 5e9));
        CHECK_THAT(flux_map(j, {-p}), WithinAbs(e, 1e-5 * 5e9));
        CHECK_THAT(e, WithinAbs(5e9 * std::abs(std::cos(std::numbers::pi * p)), 1e-6 * 5e9));
    }
}

TEST_CASE("mode ladder is n Delta with lambda^2 = 2 alpha Delta / f") {
    const LineSpec line = line_at(0.7, 3.05e9);
    const ModeSet ms = build_modes(line);
    REQUIRE(ms.size() == 15);
    for (std::size_t i = 0; i < ms.size(); ++i) {
        const Mode& m = ms.modes()[i];
        CHECK(m.n == static_cast<int>(i) + 1);
        CHECK_THAT(m.f, WithinRel(m.n * 0.2e9, 1e-14));
        CHECK_THAT(m.lambda2, WithinRel(2.0 * 0.7 / m.n, 1e-12));
        CHECK_THAT(m.lambda() * m.lambda(), WithinRel(m.lambda2, 1e-14));
        if (i) CHECK(m.f > ms.modes()[i - 1].f);
    }
    CHECK(ms.contains(15));
    CHECK_FALSE(ms.contains(16));
    CHECK(ms.at_index(4).n == 4);
}

TEST_CASE("coupling sum approaches the logarithmic ohmic sum rule") {
    // sum_n lambda_n^2 = 2 alpha H_N, H_N = ln N + gamma + 1/(2N) + O(N^-2).
    for (double a : {0.3, 1.0, 2.5}) {
        const ModeSet ms = build_modes(line_at(a, 400.1e9));
        const double N = static_cast<double>(ms.size());
        double H = 0.0;
        for (int n = 1; n <= static_cast<int>(N); ++n) H += 1.0 / n;
        CHECK_THAT(ms.coupling_sum(), WithinRel(2.0 * a * H, 1e-10));
        CHECK_THAT(ms.coupling_sum(),
                   WithinRel(2.0 * a * (std::log(N) + constants::euler_gamma + 0.5 / N), 1e-6));
    }
}

TEST_CASE("cutoff is 1/(2 pi Z C_J) unless capped") {
    const JunctionSpec j(3e9, 40e9);
    const double Z = 0.45 * constants::R_Q;
    const double expected = 1.0 / (2.0 * std::numbers::pi * Z * j.C_J());
    CHECK_THAT(default_cutoff(Z, j.C_J()), WithinRel(expected, 1e-14));
    CHECK_THAT(default_cutoff(Z, j.C_J(), 10e9), WithinRel(10e9, 1e-14));
    CHECK_THAT(default_cutoff(Z, j.C_J(), 1e15), WithinRel(expected, 1e-14));
    // E_C = e^2 / 2 C_J
    CHECK_THAT(constants::e * constants::e / (2.0 * j.C_J()) / constants::h, WithinRel(40e9, 1e-12));
}

TEST_CASE("invalid lines and junctions are rejected") {
    CHECK_THROWS_AS(LineSpec(-1.0, 0.2e9, 0.2e9, 1e10), InvalidConfiguration);
    CHECK_THROWS_AS(LineSpec(3000.0, 0.0, 0.2e9, 1e10), InvalidConfiguration);
    CHECK_THROWS_AS(LineSpec(3000.0, 0.2e9, 2e10, 1e10), InvalidConfiguration);
    CHECK_THROWS_AS(LineSpec(3000.0, 0.2e9, 0.2e9, 1e10, -1.0), InvalidConfiguration);
    CHECK_THROWS_AS(LineSpec(11.0 * constants::R_Q, 0.2e9, 0.2e9, 1e10), InvalidConfiguration);
    CHECK_THROWS_AS(JunctionSpec(1e9, -1.0), InvalidConfiguration);
    CHECK_THROWS_AS(JunctionSpec(10e9, 40e9, 0.0242), InvalidConfiguration);
    CHECK_NOTHROW(JunctionSpec(3e9, 40e9, 0.0242));
    CHECK_THROWS_AS(build_modes(LineSpec(3000.0, 0.2e9, 0.2e9, 0.3e9)), InvalidConfiguration);
}

TEST_CASE("junction from area uses 124 GHz per um^2") {
    const JunctionSpec j = JunctionSpec::from_area(0.0242, 40e9);
    CHECK_THAT(j.E_J_max(), WithinRel(3.0008e9, 1e-12));
    REQUIRE(j.area());
    CHECK_FALSE(j.with_E_J_max(1e9).area());
}

TEST_CASE("device config parsing") {
    const std::string text =
        "# comment\n"
        "device_id = demo\n"
        "Z_ohm = 2903.94  # trailing\n"
        "Delta_GHz = 0.2\n"
        "EC_GHz = 40\n"
        "area_um2 = 0.0242\n";
    const DeviceConfig d = parse_device_config(text);
    CHECK(d.device_id == "demo");
    CHECK_THAT(d.line.alpha(), WithinRel(0.45, 1e-4));
    CHECK_THAT(d.line.f_min(), WithinRel(0.2e9, 1e-14));
    CHECK_THAT(d.line.f_cutoff(), WithinRel(default_cutoff(2903.94, d.junction.C_J()), 1e-12));
    CHECK_THAT(d.kappa_ext, WithinRel(default_kappa_ext, 1e-14));
    CHECK_THAT(d.kappa_bg, WithinRel(default_kappa_bg, 1e-14));
    CHECK(d.line.T() == 0.0);

    CHECK_THROWS_AS(parse_device_config(text + "bogus = 1\n"), InvalidConfiguration);
    CHECK_THROWS_AS(parse_device_config(text + "Z_ohm = 1\n"), InvalidConfiguration);
    CHECK_THROWS_AS(parse_device_config(text + "T_K = warm\n"), InvalidConfiguration);
    CHECK_THROWS_AS(parse_device_config(text + "just words\n"), InvalidConfiguration);
    CHECK_THROWS_AS(parse_device_config("Z_ohm = 3000\nDelta_GHz = 0.2\nEC_GHz = 40\n"), InvalidConfiguration);
    CHECK_THROWS_AS(load_device_config("/nonexistent/file.cfg"), InvalidConfiguration);
    const DeviceConfig capped = parse_device_config(text + "f_cutoff_GHz = 10\n");
    CHECK_THAT(capped.line.f_cutoff(), WithinRel(10e9, 1e-14));
}

TEST_CASE("bundled device configs load") {
    for (const char* name : {"inductive_045", "capacitive_292", "critical_100", "fig1d", "fig3_d1", "fig3_d2",
                             "fig3_d3", "fig3_d4", "fig3_d5", "fig3_d6", "fig3_theory"}) {
        INFO(name);
        const DeviceConfig d =
            load_device_config(std::string(DQPT_TEST_CONFIG_DIR) + "/devices/" + name + ".cfg");
        CHECK(d.device_id == name);
        CHECK(build_modes(d.line).size() > 10);
    }
}
