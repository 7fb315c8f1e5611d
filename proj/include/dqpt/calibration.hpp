#pragma once

namespace dqpt::calibration {

// Prefactor c0 of the analytic inelastic rate, fixed against golden_rule_exact.
//
// Reference configuration:
//   alpha = 1, line f_min = Delta, f_cutoff = 6.5 Delta (modes n = 1..6),
//   photon in n = 6, N_ph = 6, energy window = Delta,
//   P(E) = sharp form at the matched edge for E_c = h * 6.5 Delta.
// The oracle and the analytic rate were evaluated there with c0 = 1 and the ratio frozen
// below. tests/test_calibration.cpp recomputes it.
inline constexpr double c0 = 0.3353344184796866;

inline constexpr double reference_alpha = 1.0;
inline constexpr int reference_modes = 6;
inline constexpr double reference_cutoff_over_Delta = 6.5;

}  // namespace dqpt::calibration
