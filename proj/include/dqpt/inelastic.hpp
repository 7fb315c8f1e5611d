#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "dqpt/calibration.hpp"
#include "dqpt/circuit.hpp"
#include "dqpt/pe.hpp"

namespace dqpt {

namespace scatter_flag {
inline constexpr unsigned probability_above_one = 1u << 0;  // gamma/Delta > 1, perturbation theory fails
inline constexpr unsigned below_crossover = 1u << 1;        // h f < E_J*, power law not expected
inline constexpr unsigned non_perturbative = 1u << 2;       // E_J above 0.3 f_cutoff
inline constexpr unsigned outside_pe_grid = 1u << 3;        // P(hf) not tabulated, rate not computed
inline constexpr unsigned below_pe_floor = 1u << 4;         // P(hf) under the table's resolution floor
}  // namespace scatter_flag

std::string scatter_flags_string(unsigned flags);

// Linewidths (FWHM) in Hz.
struct ScatteringResult {
    std::vector<int> mode_index;
    std::vector<double> frequencies;
    std::vector<double> gamma_in;
    std::vector<double> gamma_in_over_Delta;
    std::vector<double> p_inelastic;  // equal to gamma_in_over_Delta; values above 1 are flagged
    std::vector<unsigned> flags;
    double alpha = 0.0, E_J = 0.0, E_C = 0.0, T = 0.0, Delta = 0.0;
    double c0 = calibration::c0;

    std::size_t size() const { return frequencies.size(); }
};

// gamma_n = c0 (2 pi)^2 (E_J/2)^2 lambda_n^2 P(h f_n) h.
double inelastic_rate(const ModeSet& modes, const JunctionSpec& j, double E_J, const PEFunction& pe, int n,
                      double c0 = calibration::c0);

// gamma/Delta at an arbitrary frequency, using lambda^2/Delta = 2 alpha / f.
double inelastic_rate_per_spacing(double alpha, double E_J, const PEFunction& pe, double f,
                                  double c0 = calibration::c0);

// All retained modes with f_lo <= f_n <= f_hi (whole set by default).
ScatteringResult compute_scattering(const ModeSet& modes, const JunctionSpec& j, double E_J, const PEFunction& pe,
                                    double f_lo = 0.0, double f_hi = 0.0);

struct SlopeFit {
    double slope = 0.0;
    double stderr_slope = 0.0;
    double intercept = 0.0;
    std::size_t points = 0;
};

// OLS slope of log gamma_in against log f over [f_lo, f_hi].
SlopeFit scaling_exponent(const ScatteringResult& result, double f_lo, double f_hi);

struct CriticalResistance {
    double R_eff = 0.0;       // R_Q (E_C/E_J)^2
    double R_plateau = 0.0;   // from the alpha = 1 plateau probability
    double p_plateau = 0.0;   // gamma/Delta on the plateau
    bool out_of_validity = false;
    std::string warning;
};

CriticalResistance critical_resistance(const JunctionSpec& j, double E_J);

// Resistance R >> Z whose reflection loss 4RZ/(R+Z)^2 equals 2 pi p, i.e. the fraction of
// energy lost per round trip for a mode of FWHM p Delta.
double mismatch_resistance(double p, double Z);

void write_csv(std::ostream& out, const ScatteringResult& result);

}  // namespace dqpt
