#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "dqpt/circuit.hpp"

namespace dqpt {

enum class CutoffForm { sharp, lorentzian };

const char* to_string(CutoffForm form);

// Tabulated P(E) of an ohmic environment. Energies in J, density in 1/J.
class PEFunction {
public:
    PEFunction(double alpha, double T, double E_cutoff, double edge, CutoffForm form,
               std::vector<double> E, std::vector<double> P, std::string note = {});

    double alpha() const { return alpha_; }
    double T() const { return T_; }
    double E_cutoff() const { return E_cutoff_; }  // hbar omega_c
    double edge() const { return edge_; }           // support edge of the sharp form
    CutoffForm form() const { return form_; }
    const std::string& note() const { return note_; }

    const std::vector<double>& energies() const { return E_; }
    const std::vector<double>& values() const { return P_; }

    // Largest E at which P can be nonzero on this table.
    double support_max() const;
    bool covers(double E) const;

    // Sharp form: closed form on (0, edge], zero above the edge and for E < 0; the table
    // is only a sampling of it.
    // Lorentzian form: cubic interpolation on the uniform grid.
    // Throws OutOfRegime for energies outside the table.
    double operator()(double E) const;

    // Trapezoid on the stored grid plus, for the Lorentzian form, the analytic high-energy
    // tail beyond the last grid point.
    double normalization() const;
    double first_moment() const;  // same for E P(E)
    double tail_mass() const { return tail_mass_; }
    // Densities below this are numerical residue (Lorentzian form; zero for the sharp form).
    double resolution_floor() const { return alias_floor_; }
    // Max |P(-E) / (exp(-E/kT) P(E)) - 1| over grid points 0 < E <= window_kT kT that lie
    // above the resolution floor. Zero at T = 0.
    double detailed_balance_error(double window_kT = 10.0) const;

private:
    double alpha_, T_, E_cutoff_, edge_;
    CutoffForm form_;
    std::vector<double> E_, P_;
    std::string note_;
    double alias_floor_ = 0.0;
    double tail_mass_ = 0.0;    // analytic c / x^3 tail beyond the table
    double tail_moment_ = 0.0;
    friend PEFunction pe_finite_T(double, double, double, std::size_t);
};

// Sharp closed form with support edge E_cutoff.
PEFunction pe_zero_T(double alpha, double E_cutoff, std::size_t grid_size = 8192);

// Edge at which the sharp form has the same low-energy amplitude as an ohmic bath
// with cutoff frequency E_cutoff/hbar: E_c [Gamma(2a+1) exp(2a gamma_E)]^(1/(2a)).
double matched_sharp_edge(double alpha, double E_cutoff);

// Sharp closed form placed at the matched edge; records E_cutoff as the physical cutoff.
PEFunction pe_zero_T_matched(double alpha, double E_cutoff, std::size_t grid_size = 8192);

// Lorentzian window, finite temperature, via FFT of exp(J(t)).
PEFunction pe_finite_T(double alpha, double E_cutoff, double T, std::size_t grid_size = 1u << 18);

// Picks the matched sharp form at T = 0 and the Lorentzian FFT form at T > 0.
PEFunction environment_pe(const LineSpec& line, std::size_t grid_size = 0);

// i hbar J'(0) for the Lorentzian window, by quadrature of the window itself.
double pe_first_moment_reference(double alpha, double E_cutoff);

void write_csv(std::ostream& out, const PEFunction& pe);

}  // namespace dqpt
