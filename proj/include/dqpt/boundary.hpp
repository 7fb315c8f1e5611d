#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "dqpt/circuit.hpp"
#include "dqpt/pe.hpp"

namespace dqpt {

enum class BoundarySide { superconducting, insulating, critical };

const char* to_string(BoundarySide side);

struct RenormalizeOptions {
    double critical_tolerance = 0.01;  // |alpha - 1| below this is critical
    int charge_cutoff = 20;
    bool use_bare_EJ = false;  // inductive branch from E_J instead of E_J*
};

struct RenormalizedJunction {
    double E_J = 0.0;       // Hz
    double E_J_star = 0.0;  // Hz
    double L_star = 0.0;    // H; infinite when the inductive energy vanishes
    double C_star = 0.0;    // F
    BoundarySide side = BoundarySide::critical;
    bool bare_EJ = false;
};

BoundarySide classify_side(double alpha, double critical_tolerance = 0.01);

// One-loop flow with unit prefactor: f_c (E_J/f_c)^(1/(1-alpha)) below alpha = 1, else 0.
double renormalize_EJ(const LineSpec& line, const JunctionSpec& j, double E_J);

// (Phi_0 / 2 pi)^2 / (h E_J).
double josephson_inductance(double E_J);

// Lowest Bloch band curvature of the charge-basis Hamiltonian; returns (2e)^2 / E_0''(0).
double bloch_capacitance(const JunctionSpec& j, double E_J, int charge_cutoff = 20);

RenormalizedJunction renormalize_junction(const LineSpec& line, const JunctionSpec& j, double E_J,
                                          const RenormalizeOptions& opt = {});

// Elastic phase from the linear termination; refuses the critical side.
double boundary_phase_shift(const LineSpec& line, const RenormalizedJunction& rj, double f);

enum class PhaseShiftMethod { boundary_impedance, second_order_KK };

const char* to_string(PhaseShiftMethod method);

namespace phase_flag {
inline constexpr unsigned exceeds_half_pi = 1u << 0;   // |delta| > pi/2, second order has failed
inline constexpr unsigned p_above_one = 1u << 1;       // absorptive part above unit probability
inline constexpr unsigned non_perturbative = 1u << 2;  // E_J above 0.3 f_cutoff
}  // namespace phase_flag

std::string phase_flags_string(unsigned flags);

struct PhaseShiftCurve {
    std::vector<double> frequencies;  // Hz
    std::vector<double> delta;        // rad
    std::vector<double> delta_imag;   // rad, absorptive part (second order only)
    std::vector<unsigned> flags;
    PhaseShiftMethod method = PhaseShiftMethod::boundary_impedance;

    std::size_t size() const { return frequencies.size(); }
    double delta_over_pi(std::size_t i) const;
};

PhaseShiftCurve boundary_phase_shift_curve(const LineSpec& line, const RenormalizedJunction& rj,
                                           const std::vector<double>& f_grid);

// Second order in E_J. The absorptive part is delta'' = (pi/2) gamma_in/Delta, taken as zero
// below f_min - Delta/2 and above the support of P(E); the reactive part follows from
//   delta'(f) = -(2f/pi) PV int_0^inf delta''(x) / (x^2 - f^2) dx.
// Uses environment_pe(line) when pe is null.
PhaseShiftCurve second_order_phase_shift(const LineSpec& line, const JunctionSpec& j, double E_J,
                                         const std::vector<double>& f_grid, const PEFunction* pe = nullptr);

void write_csv(std::ostream& out, const PhaseShiftCurve& curve);

}  // namespace dqpt
