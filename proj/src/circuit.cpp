#include "dqpt/circuit.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <fmt/format.h>

#include "dqpt/constants.hpp"
#include "dqpt/errors.hpp"

namespace dqpt {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidConfiguration(what);
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

LineSpec::LineSpec(double Z, double Delta, double f_min, double f_cutoff, double T)
    : Z_(Z), Delta_(Delta), f_min_(f_min), f_cutoff_(f_cutoff), T_(T) {
    require(finite_positive(Z), "line: Z must be positive");
    require(finite_positive(Delta), "line: Delta must be positive");
    require(finite_positive(f_min), "line: f_min must be positive");
    require(std::isfinite(f_cutoff) && f_cutoff > f_min, "line: need f_min < f_cutoff");
    require(std::isfinite(T) && T >= 0.0, "line: T must be non-negative");
    const double a = alpha();
    require(a > 0.0 && a < 10.0, fmt::format("line: alpha = {:.4g} outside (0, 10)", a));
}

double LineSpec::alpha() const { return Z_ / constants::R_Q; }
double LineSpec::E_cutoff() const { return constants::h * f_cutoff_; }

LineSpec LineSpec::with_Z(double Z) const { return {Z, Delta_, f_min_, f_cutoff_, T_}; }
LineSpec LineSpec::with_T(double T) const { return {Z_, Delta_, f_min_, f_cutoff_, T}; }
LineSpec LineSpec::with_cutoff(double fc) const { return {Z_, Delta_, f_min_, fc, T_}; }

JunctionSpec::JunctionSpec(double E_J_max, double E_C, std::optional<double> area_um2,
                           double area_scale, double area_tolerance)
    : E_J_max_(E_J_max), E_C_(E_C), area_(area_um2), area_scale_(area_scale),
      area_tolerance_(area_tolerance) {
    require(std::isfinite(E_J_max) && E_J_max >= 0.0, "junction: E_J_max must be >= 0");
    require(finite_positive(E_C), "junction: E_C must be positive");
    require(finite_positive(area_scale), "junction: area_scale must be positive");
    if (area_) {
        require(finite_positive(*area_), "junction: area must be positive");
        const double expected = area_scale_ * *area_;
        require(std::abs(E_J_max_ - expected) <= area_tolerance_ * expected,
                fmt::format("junction: E_J_max = {:.4g} GHz inconsistent with area "
                            "{:.4g} um^2 x {:.4g} GHz/um^2",
                            E_J_max_ / 1e9, *area_, area_scale_ / 1e9));
    }
}

JunctionSpec JunctionSpec::from_area(double area_um2, double E_C, double area_scale) {
    return {area_scale * area_um2, E_C, area_um2, area_scale};
}

double JunctionSpec::C_J() const {
    return constants::e * constants::e / (2.0 * constants::h * E_C_);
}

JunctionSpec JunctionSpec::with_E_J_max(double E_J_max) const {
    // Changing E_J by hand detaches the spec from its area.
    return {E_J_max, E_C_, std::nullopt, area_scale_, area_tolerance_};
}

double Mode::lambda() const { return std::sqrt(lambda2); }

ModeSet::ModeSet(std::vector<Mode> modes, LineSpec line)
    : modes_(std::move(modes)), line_(line) {
    require(!modes_.empty(), "mode set is empty");
    for (std::size_t i = 1; i < modes_.size(); ++i)
        require(modes_[i].f > modes_[i - 1].f, "mode frequencies must increase");
}

const Mode& ModeSet::at_index(int n) const {
    for (const auto& m : modes_)
        if (m.n == n) return m;
    throw InvalidConfiguration(fmt::format("mode n = {} not retained", n));
}

bool ModeSet::contains(int n) const {
    for (const auto& m : modes_)
        if (m.n == n) return true;
    return false;
}

double ModeSet::coupling_sum() const {
    double s = 0.0;
    for (const auto& m : modes_) s += m.lambda2;
    return s;
}

double flux_map(const JunctionSpec& j, FluxPoint phi) {
    const double r = phi.phi_ratio - std::round(phi.phi_ratio);  // in [-1/2, 1/2]
    return j.E_J_max() * std::sin(std::numbers::pi * (0.5 - std::abs(r)));
}

double mode_coupling2(double alpha, double Delta, double f) { return 2.0 * alpha * Delta / f; }

ModeSet build_modes(const LineSpec& line) {
    const double D = line.Delta();
    if (line.f_cutoff() < line.f_min() + D)
        throw InvalidConfiguration(fmt::format(
            "mode set is empty: f_cutoff = {:.6g} GHz below f_min + Delta", line.f_cutoff() / 1e9));
    constexpr double slack = 1e-9;  // absorbs rounding in f/Delta
    const long n_lo = static_cast<long>(std::ceil(line.f_min() / D - slack));
    const long n_hi = static_cast<long>(std::floor(line.f_cutoff() / D + slack));
    if (n_hi - n_lo > 50'000'000) throw InvalidConfiguration("mode set too large");
    std::vector<Mode> modes;
    modes.reserve(static_cast<std::size_t>(std::max(0L, n_hi - n_lo + 1)));
    for (long n = std::max(1L, n_lo); n <= n_hi; ++n) {
        const double f = static_cast<double>(n) * D;
        modes.push_back({static_cast<int>(n), f, mode_coupling2(line.alpha(), D, f)});
    }
    return ModeSet(std::move(modes), line);
}

double default_cutoff(double Z, double C_J, std::optional<double> override_hz) {
    if (!(Z > 0.0) || !(C_J > 0.0)) throw InvalidConfiguration("cutoff: Z and C_J must be positive");
    const double rc = 1.0 / (2.0 * std::numbers::pi * Z * C_J);
    if (override_hz) {
        if (!(*override_hz > 0.0)) throw InvalidConfiguration("cutoff override must be positive");
        return std::min(rc, *override_hz);
    }
    return rc;
}

}  // namespace dqpt
