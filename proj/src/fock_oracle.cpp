#include "dqpt/fock_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>

#include <fmt/format.h>

#include "dqpt/calibration.hpp"
#include "dqpt/constants.hpp"
#include "dqpt/errors.hpp"
#include "dqpt/inelastic.hpp"
#include "dqpt/pe.hpp"

namespace dqpt {

namespace {

// Number of tuples of k non-negative integers with sum <= n, i.e. C(n + k, k).
std::size_t count_tuples(std::size_t k, int n) {
    double c = 1.0;
    for (std::size_t i = 1; i <= k; ++i) c = c * static_cast<double>(static_cast<std::size_t>(n) + i) / static_cast<double>(i);
    return static_cast<std::size_t>(std::llround(c));
}

void for_each_tuple(std::size_t k, int n, const std::function<void(const std::vector<int>&)>& visit) {
    std::vector<int> occ(k, 0);
    std::function<void(std::size_t, int)> rec = [&](std::size_t pos, int left) {
        if (pos == k) {
            visit(occ);
            return;
        }
        for (int q = 0; q <= left; ++q) {
            occ[pos] = q;
            rec(pos + 1, left - q);
        }
        occ[pos] = 0;
    };
    rec(0, n);
}

// Generalized Laguerre L_n^(a)(x) by the three-term recurrence.
double laguerre(int n, int a, double x) {
    if (n == 0) return 1.0;
    double prev = 1.0, cur = 1.0 + a - x;
    for (int k = 1; k < n; ++k) {
        const double next = ((2.0 * k + 1.0 + a - x) * cur - (k + a) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    return cur;
}

}  // namespace

TruncatedSystem::TruncatedSystem(std::vector<Mode> modes, int max_photons, double epsilon)
    : modes_(std::move(modes)), max_photons_(max_photons), epsilon_(epsilon) {
    if (modes_.empty() || modes_.size() > max_modes)
        throw InvalidConfiguration(fmt::format("oracle: need 1..{} modes, got {}", max_modes, modes_.size()));
    if (max_photons_ < 1 || max_photons_ > max_photon_bound)
        throw InvalidConfiguration(fmt::format("oracle: N_ph must be in 1..{}", max_photon_bound));
    dimension_ = count_tuples(modes_.size(), max_photons_);
    if (dimension_ > max_dimension)
        throw InvalidConfiguration(fmt::format("oracle: dimension {} above bound {}", dimension_, max_dimension));
    // Incommensurate ladders have no exact multiphoton resonances and are refused.
    const double D = modes_.front().f / modes_.front().n;
    for (const Mode& m : modes_)
        if (std::abs(m.f - m.n * D) > 1e-9 * m.f)
            throw InvalidConfiguration("oracle: mode ladder is not commensurate");
    if (epsilon_ <= 0.0) {
        std::vector<double> E;
        for_each_tuple(modes_.size(), max_photons_, [&](const std::vector<int>& occ) { E.push_back(energy(occ)); });
        std::sort(E.begin(), E.end());
        const double merge = 1e-9 * D;
        double best = 0.0;
        for (std::size_t i = 1; i < E.size(); ++i) {
            const double d = E[i] - E[i - 1];
            if (d > merge && (best == 0.0 || d < best)) best = d;
        }
        epsilon_ = best > 0.0 ? best : D;
    }
}

TruncatedSystem TruncatedSystem::from_modes(const ModeSet& set, const std::vector<int>& subset, int max_photons,
                                            double epsilon) {
    std::vector<Mode> chosen;
    if (subset.empty()) chosen = set.modes();
    else
        for (int n : subset) chosen.push_back(set.at_index(n));
    std::sort(chosen.begin(), chosen.end(), [](const Mode& a, const Mode& b) { return a.n < b.n; });
    return TruncatedSystem(std::move(chosen), max_photons, epsilon);
}

TruncatedSystem TruncatedSystem::with_epsilon(double epsilon) const {
    return TruncatedSystem(modes_, max_photons_, epsilon);
}

std::vector<std::vector<int>> TruncatedSystem::basis() const {
    std::vector<std::vector<int>> out;
    out.reserve(dimension_);
    for_each_tuple(modes_.size(), max_photons_, [&](const std::vector<int>& occ) { out.push_back(occ); });
    return out;
}

double TruncatedSystem::energy(const std::vector<int>& occ) const {
    double E = 0.0;
    for (std::size_t k = 0; k < modes_.size(); ++k) E += occ[k] * modes_[k].f;
    return E;
}

std::complex<double> displacement_element(int m, int n, std::complex<double> beta) {
    if (m < 0 || n < 0) throw InvalidConfiguration("displacement_element: negative occupation");
    const double x = std::norm(beta);
    const double damp = std::exp(-0.5 * x);
    if (m >= n) {
        // sqrt(n!/m!) beta^(m-n), accumulated factor by factor.
        std::complex<double> pre = 1.0;
        for (int k = n + 1; k <= m; ++k) pre *= beta / std::sqrt(static_cast<double>(k));
        return pre * damp * laguerre(n, m - n, x);
    }
    std::complex<double> pre = 1.0;
    for (int k = m + 1; k <= n; ++k) pre *= -std::conj(beta) / std::sqrt(static_cast<double>(k));
    return pre * damp * laguerre(m, n - m, x);
}

std::complex<double> cos_phi_element(const TruncatedSystem& sys, const std::vector<int>& f,
                                     const std::vector<int>& i) {
    std::complex<double> plus = 1.0, minus = 1.0;
    for (std::size_t k = 0; k < sys.modes().size(); ++k) {
        const double lam = sys.modes()[k].lambda();
        plus *= displacement_element(f[k], i[k], {0.0, lam});
        minus *= displacement_element(f[k], i[k], {0.0, -lam});
    }
    return 0.5 * (plus + minus);
}

namespace {

double windowed_rate(const TruncatedSystem& sys, double E_J, const std::vector<int>& init, double eps,
                     std::size_t* count, std::vector<FinalStateRecord>* records) {
    const double Ei = sys.energy(init);
    const double half = 0.5 * eps * (1.0 + 1e-9);
    double sum = 0.0;
    std::size_t n = 0;
    for_each_tuple(sys.modes().size(), sys.max_photons(), [&](const std::vector<int>& occ) {
        if (occ == init) return;
        const double d = sys.energy(occ) - Ei;
        if (std::abs(d) > half) return;
        const double M2 = E_J * E_J * std::norm(cos_phi_element(sys, occ, init));
        sum += M2;
        ++n;
        if (records) records->push_back({occ, M2, d});
    });
    if (count) *count = n;
    return 2.0 * std::numbers::pi * sum / eps;
}

}  // namespace

OracleResult golden_rule_exact(const TruncatedSystem& sys, double E_J, int n, bool keep_records) {
    if (!(E_J >= 0.0)) throw InvalidConfiguration("oracle: E_J must be >= 0");
    std::vector<int> init(sys.modes().size(), 0);
    bool found = false;
    for (std::size_t k = 0; k < sys.modes().size(); ++k)
        if (sys.modes()[k].n == n) {
            init[k] = 1;
            found = true;
        }
    if (!found) throw InvalidConfiguration(fmt::format("oracle: initial mode {} not in the system", n));

    OracleResult r;
    r.epsilon = sys.epsilon();
    r.gamma = windowed_rate(sys, E_J, init, sys.epsilon(), &r.final_states, keep_records ? &r.records : nullptr);
    r.gamma_wide = windowed_rate(sys, E_J, init, 2.0 * sys.epsilon(), nullptr, nullptr);
    r.gamma_narrow = windowed_rate(sys, E_J, init, 0.5 * sys.epsilon(), nullptr, nullptr);
    r.sparse_spectrum = r.final_states == 0;
    return r;
}

double calibrate_c0() {
    using namespace calibration;
    const double Delta = 1e9;
    const LineSpec line(reference_alpha * constants::R_Q, Delta, Delta, reference_cutoff_over_Delta * Delta, 0.0);
    const ModeSet modes = build_modes(line);
    const TruncatedSystem sys = TruncatedSystem::from_modes(modes, {}, reference_modes);
    const double E_J = 0.01 * Delta;
    const double oracle = golden_rule_exact(sys, E_J, reference_modes).gamma;
    const JunctionSpec j(E_J, 40e9);
    const PEFunction pe = environment_pe(line);
    const double analytic = inelastic_rate(modes, j, E_J, pe, reference_modes, 1.0);
    return oracle / analytic;
}

void write_records_csv(std::ostream& out, const TruncatedSystem& sys, const OracleResult& r) {
    out << fmt::format("# epsilon_Hz={:.17g}\n", r.epsilon);
    out << "occupation,M2_Hz2,detuning_Hz\n";
    for (const auto& rec : r.records) {
        std::string occ;
        for (std::size_t k = 0; k < rec.occupation.size(); ++k) {
            if (k) occ += ' ';
            occ += fmt::format("{}:{}", sys.modes()[k].n, rec.occupation[k]);
        }
        out << fmt::format("{},{:.12g},{:.12g}\n", occ, rec.M2, rec.detuning);
    }
}

}  // namespace dqpt
