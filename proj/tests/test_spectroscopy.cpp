#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "dqpt/constants.hpp"
#include "dqpt/device_config.hpp"
#include "dqpt/errors.hpp"
#include "dqpt/spectroscopy.hpp"

using namespace dqpt;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<double> window(double c, double half, std::size_t n) {
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = c - half + 2.0 * half * i / (n - 1.0);
    return f;
}

ResonanceModel resonance(int n, double f, double kext, double kint) {
    ResonanceModel r;
    r.n = n;
    r.f_bare = f;
    r.f = f;
    r.kappa_ext = kext;
    r.kappa_int = kint;
    return r;
}

DeviceConfig device(double alpha, double EJ = 3e9, double EC = 40e9, double kext = 1e6, double kbg = 0.1e6) {
    return parse_device_config(fmt::format("Z_ohm = {}\nDelta_GHz = 0.2\nEC_GHz = {}\nEJ_max_GHz = {}\n"
                                           "kappa_ext_MHz = {}\nkappa_bg_MHz = {}\n",
                                           alpha * constants::R_Q, EC / 1e9, EJ / 1e9, kext / 1e6, kbg / 1e6));
}

}  // namespace

TEST_CASE("single-port reflection on resonance") {
    CHECK_THAT(std::abs(single_mode_s11(6.7e9, 6.7e9, 1e6, 0.0) - std::complex<double>(-1.0, 0.0)), WithinAbs(0.0, 1e-15));
    for (double df : {-3e6, -1e5, 0.0, 2e5, 1e7}) CHECK_THAT(std::abs(single_mode_s11(6.7e9 + df, 6.7e9, 1e6, 0.0)), WithinAbs(1.0, 1e-14));
    CHECK(std::abs(single_mode_s11(6.7e9, 6.7e9, 1e6, 0.3e6)) < 1.0);
}

TEST_CASE("noiseless single-mode fit recovers all parameters") {
    const auto t = synthesize_from_resonances({resonance(7, 6.7e9, 1.0e6, 0.3e6)}, window(6.7e9, 20e6, 2001), 0.0, 0);
    const FitReport r = fit_modes(t, {{7, 6.7e9 + 0.2e6}});
    REQUIRE(r.modes.size() == 1);
    const ModeFit& m = r.modes[0];
    CHECK(m.accepted);
    CHECK_THAT(m.f, WithinRel(6.7e9, 1e-12));
    CHECK_THAT(m.kappa_ext, WithinRel(1.0e6, 1e-6));
    CHECK_THAT(m.kappa_int, WithinRel(0.3e6, 1e-6));
    CHECK(m.kappa_ext >= 0.0);
    CHECK(m.kappa_int >= 0.0);
}

TEST_CASE("noisy fits: median internal linewidth within 5% over 100 seeds") {
    std::vector<double> k;
    int accepted = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        auto t = synthesize_from_resonances({resonance(7, 6.7e9, 1.0e6, 0.3e6)}, window(6.7e9, 20e6, 2001), 0.01, seed);
        const FitReport r = fit_modes(t, {{7, 6.7e9}});
        accepted += r.modes[0].accepted;
        k.push_back(r.modes[0].kappa_int);
    }
    std::nth_element(k.begin(), k.begin() + 50, k.end());
    CHECK_THAT(k[50], WithinRel(0.3e6, 0.05));
    CHECK(accepted >= 95);
}

TEST_CASE("flat trace gives an explicit no-mode report") {
    const auto t = synthesize_from_resonances({}, window(6.7e9, 20e6, 501), 0.001, 3);
    const FitReport r = fit_modes(t, {{7, 6.7e9}});
    REQUIRE(r.modes.size() == 1);
    CHECK_FALSE(r.modes[0].accepted);
    CHECK(std::find(r.modes[0].flags.begin(), r.modes[0].flags.end(), "no_mode") != r.modes[0].flags.end());
}

TEST_CASE("passivity up to noise") {
    const DeviceConfig d = device(0.45);
    for (double sigma : {0.0, 0.01}) {
        const S11Trace t = synthesize_s11(d.line, d.junction, {0.0}, d.kappa_ext, d.kappa_bg, sigma, {6.0e9, 7.4e9, 20001}, 9);
        for (const auto& s : t.s11) CHECK(std::abs(s) <= 1.0 + 5.0 * sigma + 1e-12);
    }
}

TEST_CASE("half flux: dips at the baseline with width kappa_ext + kappa_bg") {
    const DeviceConfig d = device(0.45);
    const auto res = model_resonances(d.line, d.junction, {0.5}, d.kappa_ext, d.kappa_bg);
    for (const auto& r : res) {
        CHECK_THAT(r.f, WithinRel(r.n * 0.2e9, 1e-9));
        CHECK_THAT(r.kappa_ext + r.kappa_int, WithinRel(1.1e6, 1e-6));
    }
}

TEST_CASE("shift direction follows the impedance") {
    for (auto method : {PhaseShiftMethod::second_order_KK, PhaseShiftMethod::boundary_impedance}) {
        const DeviceConfig lo = device(0.45), hi = device(2.92);
        const auto a = model_resonances(lo.line, lo.junction, {0.0}, 1e6, 0.1e6, method, {33});
        const auto b = model_resonances(hi.line, hi.junction, {0.0}, 1e6, 0.1e6, method, {33});
        CHECK(a[0].f > a[0].f_bare);
        CHECK(b[0].f < b[0].f_bare);
    }
}

TEST_CASE("overlapping modes are flagged") {
    const auto t = synthesize_from_resonances({resonance(1, 6.7e9, 1e6, 1e6), resonance(2, 6.704e9, 1e6, 1e6)},
                                              window(6.702e9, 20e6, 501), 0.0, 0);
    CHECK(t.overlapping_modes);
    const auto u = synthesize_from_resonances({resonance(1, 6.7e9, 1e6, 1e6), resonance(2, 6.9e9, 1e6, 1e6)},
                                              window(6.8e9, 150e6, 501), 0.0, 0);
    CHECK_FALSE(u.overlapping_modes);
}

TEST_CASE("multi-mode trace with neighbours outside the window") {
    const DeviceConfig d = device(0.45);
    const S11Trace t = synthesize_s11(d.line, d.junction, {0.0}, d.kappa_ext, d.kappa_bg, 0.0, {6.55e9, 6.85e9, 6001}, 0);
    const auto truth = model_resonances(d.line, d.junction, {0.0}, d.kappa_ext, d.kappa_bg, PhaseShiftMethod::second_order_KK, {33, 34});
    const FitReport r = fit_modes(t, baseline_guesses(d.line, 6.55e9, 6.85e9));
    REQUIRE(r.modes.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(r.modes[i].accepted);
        CHECK_THAT(r.modes[i].f, WithinAbs(truth[i].f, 1e-3 * truth[i].kappa_int));
        CHECK_THAT(r.modes[i].kappa_int, WithinRel(truth[i].kappa_int, 1e-3));
    }
}

TEST_CASE("magnitude-only fit of an isolated mode") {
    const auto t = synthesize_from_resonances({resonance(7, 6.7e9, 1.0e6, 0.3e6)}, window(6.7e9, 20e6, 2001), 0.0, 0);
    FitOptions o;
    o.magnitude_only = true;
    const ModeFit m = fit_modes(t, {{7, 6.7e9}}, o).modes[0];
    CHECK(m.accepted);
    CHECK_THAT(m.f, WithinRel(6.7e9, 1e-9));
    CHECK_THAT(m.kappa_ext + m.kappa_int, WithinRel(1.3e6, 1e-3));
}

TEST_CASE("extraction definitions") {
    const auto t = synthesize_from_resonances({resonance(7, 6.7e9, 1.0e6, 0.3e6)}, window(6.7e9, 20e6, 2001), 0.0, 0);
    const FitReport r = fit_modes(t, {{7, 6.7e9}});
    const auto same = extract_observables(r, r, 0.2e9, 0.02);
    REQUIRE(same.size() == 1);
    CHECK(same[0].delta_over_pi == 0.0);
    CHECK(same[0].gamma_in == 0.0);
    FitReport none = r;
    none.modes[0].accepted = false;
    CHECK_THROWS_AS(extract_observables(r, none, 0.2e9), InvalidConfiguration);

    FitReport shifted = r;
    shifted.modes[0].f += 2e6;
    shifted.modes[0].kappa_int += 0.5e6;
    const auto o = extract_observables(shifted, r, 0.2e9, 0.02)[0];
    CHECK_THAT(o.delta_over_pi, WithinRel(0.01, 1e-9));
    CHECK_THAT(o.gamma_in, WithinRel(0.5e6, 1e-9));
    CHECK_THAT(*o.gamma_in_per_A2, WithinRel(0.5e6 / 4e-4, 1e-9));
}

TEST_CASE("pipeline round trip recovers the injected observables") {
    for (double a : {0.45, 2.92}) {
        for (auto method : {PhaseShiftMethod::second_order_KK, PhaseShiftMethod::boundary_impedance}) {
            const DeviceConfig d = device(a);
            PipelineOptions o;
            o.method = method;
            const auto recs = run_pipeline(d, {10, 33, 60}, o);
            REQUIRE(recs.size() == 3);
            for (const auto& r : recs) {
                INFO("alpha " << a << " mode " << r.extracted.n);
                REQUIRE(r.accepted);
                const double dinj = (r.injected_integer.f - r.injected_half.f) / 0.2e9;
                const double ginj = r.injected_integer.gamma_in - r.injected_half.gamma_in;
                CHECK_THAT(r.extracted.delta_over_pi, WithinAbs(dinj, 1e-4 * std::abs(dinj) + 1e-9));
                CHECK_THAT(r.extracted.delta_over_pi, WithinAbs(r.injected_integer.delta / pi, 0.01));
                CHECK_THAT(r.extracted.gamma_in, WithinRel(ginj, 0.01));
            }
        }
    }
}

TEST_CASE("extracted rate does not depend on the couplings") {
    std::vector<double> g;
    for (auto [ke, kb] : {std::pair{1e6, 0.1e6}, std::pair{2e6, 0.1e6}, std::pair{1e6, 0.5e6}}) {
        const DeviceConfig d = device(0.7, 3e9, 40e9, ke, kb);
        g.push_back(run_pipeline(d, {33})[0].extracted.gamma_in);
    }
    CHECK_THAT(g[1], WithinRel(g[0], 1e-3));
    CHECK_THAT(g[2], WithinRel(g[0], 1e-3));
}

TEST_CASE("observables are flux periodic and even") {
    const DeviceConfig d = device(0.6);
    PipelineOptions o;
    const auto base = run_pipeline(d, {20}, o)[0].extracted;
    o.integer_flux = 1.0;
    const auto shifted = run_pipeline(d, {20}, o)[0].extracted;
    CHECK_THAT(shifted.delta_over_pi, WithinRel(base.delta_over_pi, 1e-6));
    CHECK_THAT(shifted.gamma_in, WithinRel(base.gamma_in, 1e-6));
    const auto p = model_resonances(d.line, d.junction, {0.3}, 1e6, 0.1e6, PhaseShiftMethod::second_order_KK, {20});
    const auto m = model_resonances(d.line, d.junction, {-0.3}, 1e6, 0.1e6, PhaseShiftMethod::second_order_KK, {20});
    CHECK_THAT(p[0].f, WithinRel(m[0].f, 1e-15));
    CHECK_THAT(p[0].kappa_int, WithinRel(m[0].kappa_int, 1e-12));
}

TEST_CASE("tracking across flux follows the moving resonance") {
    const DeviceConfig d = device(0.45);
    std::vector<S11Trace> traces;
    for (double phi : {0.5, 0.4, 0.3, 0.2, 0.1, 0.0})
        traces.push_back(synthesize_s11(d.line, d.junction, {phi}, d.kappa_ext, d.kappa_bg, 1e-4, {6.55e9, 6.85e9, 6001}, 1));
    const auto reps = track_modes(traces, baseline_guesses(d.line, 6.55e9, 6.85e9));
    double prev = 0.0;
    for (const auto& r : reps) {
        const ModeFit* m = r.find(33);
        REQUIRE(m);
        CHECK(m->accepted);
        CHECK(m->f >= prev);
        prev = m->f;
    }
}

TEST_CASE("trace CSV and fit report JSON round trip") {
    const DeviceConfig d = device(0.45);
    S11Trace t = synthesize_s11(d.line, d.junction, {0.25}, 1e6, 0.1e6, 1e-3, {6.6e9, 6.8e9, 101}, 4);
    t.device_id = "demo";
    std::stringstream ss;
    write_csv(ss, t);
    const S11Trace back = read_s11_csv(ss);
    CHECK(back.device_id == "demo");
    CHECK(back.flux.phi_ratio == 0.25);
    CHECK(back.noise_sigma == 1e-3);
    REQUIRE(back.s11.size() == t.s11.size());
    for (std::size_t i = 0; i < t.s11.size(); ++i) {
        CHECK(back.frequencies[i] == t.frequencies[i]);
        CHECK(back.s11[i] == t.s11[i]);
    }
    const FitReport r = fit_modes(t, baseline_guesses(d.line, 6.6e9, 6.8e9));
    const FitReport rr = fit_report_from_json(to_json(r));
    REQUIRE(rr.modes.size() == r.modes.size());
    CHECK(rr.device_id == "demo");
    for (std::size_t i = 0; i < r.modes.size(); ++i) {
        CHECK(rr.modes[i].f == r.modes[i].f);
        CHECK(rr.modes[i].kappa_int == r.modes[i].kappa_int);
        CHECK(rr.modes[i].accepted == r.modes[i].accepted);
        CHECK(rr.modes[i].flags == r.modes[i].flags);
    }
}
