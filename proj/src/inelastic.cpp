#include "dqpt/inelastic.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include <fmt/format.h>

#include "dqpt/boundary.hpp"
#include "dqpt/constants.hpp"
#include "dqpt/errors.hpp"

namespace dqpt {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;
}

std::string scatter_flags_string(unsigned flags) {
    std::string s;
    auto add = [&](unsigned bit, const char* name) {
        if (flags & bit) {
            if (!s.empty()) s += '|';
            s += name;
        }
    };
    add(scatter_flag::probability_above_one, "p_above_one");
    add(scatter_flag::below_crossover, "below_crossover");
    add(scatter_flag::non_perturbative, "non_perturbative");
    add(scatter_flag::outside_pe_grid, "outside_pe_grid");
    add(scatter_flag::below_pe_floor, "below_pe_floor");
    return s.empty() ? "ok" : s;
}

double inelastic_rate(const ModeSet& modes, const JunctionSpec&, double E_J, const PEFunction& pe, int n,
                      double c0) {
    if (E_J < 0.0) throw InvalidConfiguration("inelastic_rate: E_J must be >= 0");
    if (std::abs(pe.alpha() - modes.line().alpha()) > 1e-12 * modes.line().alpha() ||
        std::abs(pe.T() - modes.line().T()) > 1e-12 * std::max(1.0, modes.line().T()))
        throw InvalidConfiguration("inelastic_rate: P(E) built for a different alpha or T");
    const Mode& m = modes.at_index(n);
    const double E = constants::h * m.f;
    const double P = pe(E);  // refuses energies outside the table
    return c0 * two_pi * two_pi * 0.25 * E_J * E_J * m.lambda2 * P * constants::h;
}

double inelastic_rate_per_spacing(double alpha, double E_J, const PEFunction& pe, double f, double c0) {
    const double P = pe(constants::h * f);
    return c0 * two_pi * two_pi * 0.25 * E_J * E_J * (2.0 * alpha / f) * P * constants::h;
}

ScatteringResult compute_scattering(const ModeSet& modes, const JunctionSpec& j, double E_J, const PEFunction& pe,
                                    double f_lo, double f_hi) {
    const LineSpec& line = modes.line();
    ScatteringResult r;
    r.alpha = line.alpha();
    r.E_J = E_J;
    r.E_C = j.E_C();
    r.T = line.T();
    r.Delta = line.Delta();

    unsigned common = 0;
    double EJ_star = 0.0;
    if (E_J > 0.3 * line.f_cutoff()) common |= scatter_flag::non_perturbative;
    try {
        EJ_star = renormalize_EJ(line, j, E_J);
    } catch (const OutOfRegime&) {
        common |= scatter_flag::non_perturbative;
    }

    for (const Mode& m : modes.modes()) {
        if (m.f < f_lo || (f_hi > 0.0 && m.f > f_hi)) continue;
        unsigned flags = common;
        double g = 0.0;
        if (pe.covers(constants::h * m.f)) {
            g = inelastic_rate(modes, j, E_J, pe, m.n);
            if (pe(constants::h * m.f) < pe.resolution_floor()) flags |= scatter_flag::below_pe_floor;
        } else {
            flags |= scatter_flag::outside_pe_grid;
        }
        const double p = g / line.Delta();
        if (p > 1.0) flags |= scatter_flag::probability_above_one;
        if (EJ_star > m.f) flags |= scatter_flag::below_crossover;
        r.mode_index.push_back(m.n);
        r.frequencies.push_back(m.f);
        r.gamma_in.push_back(g);
        r.gamma_in_over_Delta.push_back(p);
        r.p_inelastic.push_back(p);
        r.flags.push_back(flags);
    }
    return r;
}

SlopeFit scaling_exponent(const ScatteringResult& result, double f_lo, double f_hi) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < result.size(); ++i) {
        const double f = result.frequencies[i];
        if (f < f_lo || f > f_hi) continue;
        if (!(result.gamma_in[i] > 0.0))
            throw InvalidConfiguration(fmt::format("scaling_exponent: non-positive rate at {:.6g} GHz", f / 1e9));
        x.push_back(std::log(f));
        y.push_back(std::log(result.gamma_in[i]));
    }
    if (x.size() < 8)
        throw InvalidConfiguration(fmt::format("scaling_exponent: {} points in range, need >= 8", x.size()));
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double res = y[i] - fit.intercept - fit.slope * x[i];
        rss += res * res;
    }
    fit.stderr_slope = std::sqrt(rss / (n - 2.0) / sxx);
    fit.points = x.size();
    return fit;
}

double mismatch_resistance(double p, double Z) {
    const double L = two_pi * p;
    if (!(L > 0.0) || L > 1.0) throw OutOfRegime(fmt::format("mismatch_resistance: loss {:.3g} outside (0, 1]", L));
    return Z * ((2.0 - L) + 2.0 * std::sqrt(1.0 - L)) / L;
}

CriticalResistance critical_resistance(const JunctionSpec& j, double E_J) {
    if (!(E_J > 0.0)) throw InvalidConfiguration("critical_resistance: E_J must be positive");
    CriticalResistance c;
    const double ratio = E_J / j.E_C();
    c.R_eff = constants::R_Q / (ratio * ratio);
    if (ratio > 0.3) {
        c.out_of_validity = true;
        c.warning = fmt::format("E_J/E_C = {:.3g} above the 0.3 validity bound", ratio);
    }
    // Cross-check: a line at Z = R_Q with the junction's RC cutoff, where gamma/Delta is flat.
    const double fc = default_cutoff(constants::R_Q, j.C_J());
    const PEFunction pe = pe_zero_T_matched(1.0, constants::h * fc);
    c.p_plateau = inelastic_rate_per_spacing(1.0, E_J, pe, 0.1 * fc);
    try {
        c.R_plateau = mismatch_resistance(c.p_plateau, constants::R_Q);
    } catch (const OutOfRegime& e) {
        c.out_of_validity = true;
        c.warning += (c.warning.empty() ? "" : "; ") + std::string(e.what());
    }
    return c;
}

void write_csv(std::ostream& out, const ScatteringResult& r) {
    out << fmt::format("# alpha={:.17g}\n# E_J_GHz={:.17g}\n# E_C_GHz={:.17g}\n# T_K={:.17g}\n# c0={:.17g}\n",
                       r.alpha, r.E_J / 1e9, r.E_C / 1e9, r.T, r.c0);
    out << "f_GHz,gamma_in_MHz,gamma_over_Delta,flags\n";
    for (std::size_t i = 0; i < r.size(); ++i)
        out << fmt::format("{:.12g},{:.12g},{:.12g},{}\n", r.frequencies[i] / 1e9, r.gamma_in[i] / 1e6,
                           r.gamma_in_over_Delta[i], scatter_flags_string(r.flags[i]));
}

}  // namespace dqpt
