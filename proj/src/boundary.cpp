#include "dqpt/boundary.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <numbers>
#include <ostream>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include "dqpt/constants.hpp"
#include "dqpt/errors.hpp"
#include "dqpt/inelastic.hpp"

namespace dqpt {

namespace {

constexpr double pi = std::numbers::pi;

// ---- Bloch band -------------------------------------------------------------------------------

// Slope dE_0/dn_g, in units of E_C, of H(n_g) - 4 E_C n_g^2 on charges m in [-M, M], from
// Hellmann-Feynman: <psi_0| -8 m |psi_0>. Removing the n_g^2 term leaves only the band's own
// curvature for the difference quotient.
long double shifted_ground_slope(long double r, long double ng, int M) {
    const int n = 2 * M + 1;
    Eigen::Matrix<long double, Eigen::Dynamic, 1> diag(n), sub(n - 1);
    for (int i = 0; i < n; ++i) {
        const long double m = i - M;
        diag(i) = 4.0L * (m * m - 2.0L * m * ng);
    }
    sub.setConstant(-r / 2.0L);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw NumericalFailure("Bloch band: tridiagonal solver failed");
    long double s = 0.0L;
    for (int i = 0; i < n; ++i) {
        const long double v = es.eigenvectors()(i, 0);
        s += v * v * static_cast<long double>(i - M);
    }
    return -8.0L * s;
}

// Band curvature in units of E_C: symmetric difference [E'(h) - E'(-h)] / 2h = E'(h)/h of the
// slope (the band is even in n_g), Richardson-refined while halving h from 1e-3.
long double band_curvature(long double r, int M) {
    if (r == 0.0L) return 8.0L;
    auto quotient = [&](long double h) { return shifted_ground_slope(r, h, M) / h; };
    long double h = 1e-3L;
    long double d_prev = quotient(h);
    long double rich_prev = std::numeric_limits<long double>::quiet_NaN();
    for (int it = 0; it < 12; ++it) {
        const long double d = quotient(h / 2.0L);
        const long double rich = (4.0L * d - d_prev) / 3.0L;
        if (std::isfinite(static_cast<double>(rich_prev)) &&
            std::fabs(rich - rich_prev) <= 1e-8L * std::fabs(8.0L + rich))
            return 8.0L + rich;
        rich_prev = rich;
        d_prev = d;
        h /= 2.0L;
    }
    throw NumericalFailure("Bloch band: curvature step refinement did not converge");
}

// ---- Kramers-Kronig ---------------------------------------------------------------------------

struct AbsorptionParams {
    double alpha;
    const PEFunction* pe;
    double lo, hi;  // support of delta''
    double f;       // evaluation frequency, for the x + f kernel
};

// delta'' at unit E_J.
double absorptive_unit(double x, void* p) {
    const auto* a = static_cast<const AbsorptionParams*>(p);
    if (x < a->lo || x > a->hi) return 0.0;
    return 0.5 * pi * inelastic_rate_per_spacing(a->alpha, 1.0, *a->pe, x);
}

double absorptive_over_sum(double x, void* p) {
    const auto* a = static_cast<const AbsorptionParams*>(p);
    return absorptive_unit(x, p) / (x + a->f);
}

double absorptive_over_difference2(double x, void* p) {
    const auto* a = static_cast<const AbsorptionParams*>(p);
    return absorptive_unit(x, p) / (x * x - a->f * a->f);
}

class Workspace {
public:
    Workspace() : w_(gsl_integration_workspace_alloc(4000)) {}
    ~Workspace() { gsl_integration_workspace_free(w_); }
    Workspace(const Workspace&) = delete;
    Workspace& operator=(const Workspace&) = delete;
    gsl_integration_workspace* get() { return w_; }

private:
    gsl_integration_workspace* w_;
};

void check_quadrature(int status, double result, double abserr, const char* what) {
    if (status == GSL_SUCCESS) return;
    // Round-off limited results on tabulated data are accepted when the error bound is small.
    if ((status == GSL_EROUND || status == GSL_EMAXITER) && abserr <= 1e-6 * std::abs(result) + 1e-300) return;
    throw NumericalFailure(fmt::format("Kramers-Kronig {}: {} (error {:.3g} on {:.3g})", what,
                                       gsl_strerror(status), abserr, result));
}

// delta'(f) at unit E_J.
double reactive_unit(AbsorptionParams prm) {
    static const bool handler_off = [] {
        gsl_set_error_handler_off();
        return true;
    }();
    (void)handler_off;
    Workspace w;
    constexpr double rel = 1e-10;
    gsl_function F;
    F.params = &prm;
    double r1 = 0.0, e1 = 0.0;
    const double f = prm.f;
    if (f > prm.lo && f < prm.hi) {
        // 1/(x^2 - f^2) = [1/(x - f) - 1/(x + f)] / 2f
        F.function = absorptive_unit;
        check_quadrature(gsl_integration_qawc(&F, prm.lo, prm.hi, f, 0.0, rel, 4000, w.get(), &r1, &e1), r1, e1,
                         "principal value");
        double r2 = 0.0, e2 = 0.0;
        F.function = absorptive_over_sum;
        check_quadrature(gsl_integration_qags(&F, prm.lo, prm.hi, 0.0, rel, 4000, w.get(), &r2, &e2), r2, e2,
                         "regular part");
        return -(r1 - r2) / pi;
    }
    F.function = absorptive_over_difference2;
    check_quadrature(gsl_integration_qags(&F, prm.lo, prm.hi, 0.0, rel, 4000, w.get(), &r1, &e1), r1, e1,
                     "off-support");
    return -(2.0 * f / pi) * r1;
}

}  // namespace

const char* to_string(BoundarySide side) {
    switch (side) {
        case BoundarySide::superconducting: return "superconducting";
        case BoundarySide::insulating: return "insulating";
        case BoundarySide::critical: return "critical";
    }
    return "?";
}

const char* to_string(PhaseShiftMethod method) {
    return method == PhaseShiftMethod::boundary_impedance ? "boundary_impedance" : "second_order_KK";
}

std::string phase_flags_string(unsigned flags) {
    std::string s;
    auto add = [&](unsigned bit, const char* name) {
        if (flags & bit) {
            if (!s.empty()) s += '|';
            s += name;
        }
    };
    add(phase_flag::exceeds_half_pi, "exceeds_half_pi");
    add(phase_flag::p_above_one, "p_above_one");
    add(phase_flag::non_perturbative, "non_perturbative");
    return s.empty() ? "ok" : s;
}

BoundarySide classify_side(double alpha, double tol) {
    if (std::abs(alpha - 1.0) < tol) return BoundarySide::critical;
    return alpha < 1.0 ? BoundarySide::superconducting : BoundarySide::insulating;
}

double renormalize_EJ(const LineSpec& line, const JunctionSpec&, double E_J) {
    if (!(E_J >= 0.0)) throw InvalidConfiguration("renormalize_EJ: E_J must be >= 0");
    const double a = line.alpha();
    if (a >= 1.0 || E_J == 0.0) return 0.0;
    const double fc = line.f_cutoff();
    if (E_J > fc)
        throw OutOfRegime(fmt::format("renormalize_EJ: E_J = {:.4g} GHz above f_cutoff = {:.4g} GHz", E_J / 1e9,
                                      fc / 1e9));
    return fc * std::exp(std::log(E_J / fc) / (1.0 - a));
}

double josephson_inductance(double E_J) {
    if (!(E_J > 0.0)) return std::numeric_limits<double>::infinity();
    const double p = constants::Phi_0 / (2.0 * pi);
    return p * p / (constants::h * E_J);
}

double bloch_capacitance(const JunctionSpec& j, double E_J, int charge_cutoff) {
    if (charge_cutoff < 10) throw InvalidConfiguration("bloch_capacitance: charge_cutoff must be >= 10");
    if (!(E_J >= 0.0)) throw InvalidConfiguration("bloch_capacitance: E_J must be >= 0");
    const long double r = E_J / j.E_C();
    int M = charge_cutoff;
    long double curv = band_curvature(r, M);
    for (; M <= 400; M += 5) {
        const long double next = band_curvature(r, M + 5);
        const bool ok = std::fabs(next - curv) <= 1e-8L * std::fabs(next);
        curv = next;
        if (ok) return j.C_J() * static_cast<double>(8.0L / curv);
    }
    throw NumericalFailure(fmt::format("bloch_capacitance: not converged in charge cutoff at E_J/E_C = {:.4g}",
                                       static_cast<double>(r)));
}

RenormalizedJunction renormalize_junction(const LineSpec& line, const JunctionSpec& j, double E_J,
                                          const RenormalizeOptions& opt) {
    RenormalizedJunction rj;
    rj.E_J = E_J;
    rj.side = classify_side(line.alpha(), opt.critical_tolerance);
    rj.bare_EJ = opt.use_bare_EJ;
    rj.E_J_star = renormalize_EJ(line, j, E_J);
    const double inductive_E = rj.side == BoundarySide::superconducting ? (opt.use_bare_EJ ? E_J : rj.E_J_star) : 0.0;
    rj.L_star = josephson_inductance(inductive_E);
    rj.C_star = bloch_capacitance(j, E_J, opt.charge_cutoff);
    return rj;
}

double boundary_phase_shift(const LineSpec& line, const RenormalizedJunction& rj, double f) {
    if (!(f > 0.0)) throw InvalidConfiguration("boundary_phase_shift: f must be positive");
    const double Z = line.Z();
    switch (rj.side) {
        case BoundarySide::superconducting:
            // pi/2 - arctan(x) written as arctan(1/x) so a huge L* stays positive.
            if (!std::isfinite(rj.L_star)) return 0.0;
            return std::atan(Z / (2.0 * pi * f * rj.L_star));
        case BoundarySide::insulating: return -std::atan(2.0 * pi * f * rj.C_star * Z);
        case BoundarySide::critical: break;
    }
    throw OutOfRegime("boundary_phase_shift: no linear boundary at the critical point");
}

double PhaseShiftCurve::delta_over_pi(std::size_t i) const { return delta.at(i) / pi; }

PhaseShiftCurve boundary_phase_shift_curve(const LineSpec& line, const RenormalizedJunction& rj,
                                           const std::vector<double>& f_grid) {
    PhaseShiftCurve c;
    c.method = PhaseShiftMethod::boundary_impedance;
    for (double f : f_grid) {
        c.frequencies.push_back(f);
        c.delta.push_back(boundary_phase_shift(line, rj, f));
        c.delta_imag.push_back(0.0);
        c.flags.push_back(0);
    }
    return c;
}

PhaseShiftCurve second_order_phase_shift(const LineSpec& line, const JunctionSpec& j, double E_J,
                                         const std::vector<double>& f_grid, const PEFunction* pe_in) {
    if (!(E_J >= 0.0)) throw InvalidConfiguration("second_order_phase_shift: E_J must be >= 0");
    for (double f : f_grid)
        if (f < line.f_min() * (1 - 1e-12) || f > line.f_cutoff() * (1 + 1e-12))
            throw InvalidConfiguration(
                fmt::format("second_order_phase_shift: f = {:.6g} GHz outside [f_min, f_cutoff]", f / 1e9));
    std::optional<PEFunction> own;
    if (!pe_in) own.emplace(environment_pe(line));
    const PEFunction& pe = pe_in ? *pe_in : *own;
    (void)j;

    PhaseShiftCurve c;
    c.method = PhaseShiftMethod::second_order_KK;
    const unsigned common = E_J > 0.3 * line.f_cutoff() ? phase_flag::non_perturbative : 0u;
    AbsorptionParams prm{line.alpha(), &pe, line.f_min() - 0.5 * line.Delta(), pe.support_max() / constants::h, 0.0};
    const double EJ2 = E_J * E_J;
    const bool truncated = pe.form() != CutoffForm::sharp;

    for (double f : f_grid) {
        double re = 0.0, im = 0.0;
        if (EJ2 > 0.0) {
            prm.f = f;
            const double re_unit = reactive_unit(prm);
            const double im_unit = absorptive_unit(f, &prm);
            if (truncated) {
                // delta'' falls as x^-4 beyond the table; estimate what the integral misses.
                const double tail = (2.0 * f / pi) * absorptive_unit(prm.hi, &prm) / (5.0 * prm.hi);
                if (tail > 0.05 * std::max(std::abs(re_unit), im_unit))
                    throw NumericalFailure(fmt::format(
                        "second_order_phase_shift: truncation error {:.3g} at {:.6g} GHz", tail, f / 1e9));
            }
            re = EJ2 * re_unit;
            im = EJ2 * im_unit;
        }
        unsigned flags = common;
        if (std::abs(re) > 0.5 * pi) flags |= phase_flag::exceeds_half_pi;
        if (im / (0.5 * pi) > 1.0) flags |= phase_flag::p_above_one;
        c.frequencies.push_back(f);
        c.delta.push_back(re);
        c.delta_imag.push_back(im);
        c.flags.push_back(flags);
    }
    return c;
}

void write_csv(std::ostream& out, const PhaseShiftCurve& c) {
    out << "f_GHz,delta_over_pi,method,flags\n";
    for (std::size_t i = 0; i < c.size(); ++i)
        out << fmt::format("{:.12g},{:.12g},{},{}\n", c.frequencies[i] / 1e9, c.delta_over_pi(i), to_string(c.method),
                           phase_flags_string(c.flags[i]));
}

}  // namespace dqpt
