#pragma once

#include <numbers>

namespace dqpt::constants {

// SI 2019 exact values.
inline constexpr double h = 6.62607015e-34;
inline constexpr double hbar = h / (2.0 * std::numbers::pi);
inline constexpr double e = 1.602176634e-19;
inline constexpr double k_B = 1.380649e-23;

inline constexpr double R_Q = h / (4.0 * e * e);
inline constexpr double Phi_0 = h / (2.0 * e);

inline constexpr double euler_gamma = 0.57721566490153286061;

}  // namespace dqpt::constants
