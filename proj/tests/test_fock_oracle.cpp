#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <sstream>

#include "dqpt/constants.hpp"
#include "dqpt/errors.hpp"
#include "dqpt/fock_oracle.hpp"

using namespace dqpt;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ModeSet ladder(int modes, double alpha = 1.0) {
    const double D = 1e9;
    return build_modes(LineSpec(alpha * constants::R_Q, D, D, (modes + 0.5) * D));
}

// <m|D(beta)|n> from the factorial form with the standard-library Laguerre polynomial.
std::complex<double> displacement_by_factorials(int m, int n, std::complex<double> beta) {
    const double x = std::norm(beta);
    const int lo = std::min(m, n), d = std::abs(m - n);
    const double ratio = std::exp(0.5 * (std::lgamma(lo + 1.0) - std::lgamma(lo + d + 1.0)));
    const std::complex<double> b = m >= n ? beta : -std::conj(beta);
    return ratio * std::pow(b, d) * std::exp(-0.5 * x) * std::assoc_laguerre(lo, d, x);
}

}  // namespace

TEST_CASE("displacement matrix elements match the factorial form") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int t = 0; t < 30; ++t) {
        const std::complex<double> beta(u(rng), u(rng));
        for (int m = 0; m <= 6; ++m)
            for (int n = 0; n <= 6; ++n) {
                const auto a = displacement_element(m, n, beta), b = displacement_by_factorials(m, n, beta);
                CHECK_THAT(std::abs(a - b), WithinAbs(0.0, 1e-12));
            }
    }
}

TEST_CASE("displacement operator is unitary on a converged truncation") {
    const std::complex<double> beta(0.4, -0.7);
    for (int n = 0; n <= 3; ++n) {
        double s = 0.0;
        for (int m = 0; m <= 60; ++m) s += std::norm(displacement_element(m, n, beta));
        CHECK_THAT(s, WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("dimension counts occupation tuples") {
    for (int k : {1, 3, 6, 8})
        for (int N : {1, 3, 6}) {
            std::vector<int> subset(k);
            std::iota(subset.begin(), subset.end(), 1);
            const TruncatedSystem s = TruncatedSystem::from_modes(ladder(8), subset, N);
            std::size_t c = 1;
            for (int i = 1; i <= k; ++i) c = c * (N + i) / i;
            CHECK(s.dimension() == c);
            CHECK(s.basis().size() == c);
            for (const auto& occ : s.basis()) CHECK(std::accumulate(occ.begin(), occ.end(), 0) <= N);
        }
}

TEST_CASE("oracle guards") {
    CHECK_THROWS_AS(TruncatedSystem::from_modes(ladder(8), {}, 7), InvalidConfiguration);
    CHECK_THROWS_AS(TruncatedSystem::from_modes(ladder(8), {}, 0), InvalidConfiguration);
    std::vector<Mode> odd = ladder(3).modes();
    odd[1].f *= 1.01;
    CHECK_THROWS_AS(TruncatedSystem(odd, 3), InvalidConfiguration);
    const ModeSet many = build_modes(LineSpec(constants::R_Q, 1e9, 1e9, 9.5e9));
    CHECK_THROWS_AS(TruncatedSystem::from_modes(many, {}, 3), InvalidConfiguration);
}

TEST_CASE("no junction or no channel gives zero") {
    const TruncatedSystem sys = TruncatedSystem::from_modes(ladder(6), {}, 6);
    CHECK(golden_rule_exact(sys, 0.0, 6).gamma == 0.0);
    const TruncatedSystem single = TruncatedSystem::from_modes(ladder(6), {6}, 6);
    const OracleResult r = golden_rule_exact(single, 1e7, 6);
    CHECK(r.gamma == 0.0);
    CHECK(r.sparse_spectrum);
}

TEST_CASE("matrix elements: hermiticity and photon parity") {
    const TruncatedSystem sys = TruncatedSystem::from_modes(ladder(4), {}, 4);
    const auto basis = sys.basis();
    for (std::size_t a = 0; a < basis.size(); a += 3)
        for (std::size_t b = 0; b < basis.size(); b += 2) {
            const auto fi = cos_phi_element(sys, basis[a], basis[b]);
            const auto if_ = cos_phi_element(sys, basis[b], basis[a]);
            CHECK_THAT(std::abs(fi), WithinAbs(std::abs(if_), 1e-14));
            const int na = std::accumulate(basis[a].begin(), basis[a].end(), 0);
            const int nb = std::accumulate(basis[b].begin(), basis[b].end(), 0);
            if ((na - nb) % 2 != 0) CHECK(std::abs(fi) < 1e-12);
        }
}

TEST_CASE("rate scales as E_J^2 and is stable in N_ph") {
    const TruncatedSystem s6 = TruncatedSystem::from_modes(ladder(6), {}, 6);
    const double g1 = golden_rule_exact(s6, 1e7, 6).gamma, g2 = golden_rule_exact(s6, 2e7, 6).gamma;
    CHECK_THAT(g2 / g1, WithinRel(4.0, 1e-12));
    const TruncatedSystem s5 = TruncatedSystem::from_modes(ladder(6), {}, 5);
    CHECK_THAT(golden_rule_exact(s5, 1e7, 6).gamma, WithinRel(g1, 0.03));
}

TEST_CASE("final states conserve energy and exclude the initial state") {
    const TruncatedSystem sys = TruncatedSystem::from_modes(ladder(6), {}, 6);
    const OracleResult r = golden_rule_exact(sys, 1e7, 6, true);
    CHECK(r.final_states == r.records.size());
    CHECK(r.final_states == 10);  // partitions of 6 into parts 1..5 other than {6}
    for (const auto& rec : r.records) {
        CHECK(std::abs(rec.detuning) <= 0.5 * r.epsilon);
        CHECK(rec.occupation != std::vector<int>({0, 0, 0, 0, 0, 1}));
    }
    CHECK(r.gamma_wide > 0.0);
    CHECK(r.gamma_narrow > 0.0);
    std::ostringstream ss;
    write_records_csv(ss, sys, r);
    CHECK(ss.str().find("occupation,M2_Hz2,detuning_Hz") != std::string::npos);
}
