#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include "dqpt/circuit.hpp"

namespace dqpt {

// A few modes of the ladder, truncated to at most max_photons quanta in total.
class TruncatedSystem {
public:
    static constexpr std::size_t max_modes = 8;
    static constexpr int max_photon_bound = 6;
    static constexpr std::size_t max_dimension = 500000;

    // epsilon <= 0 selects the smallest positive spacing of the basis energies.
    TruncatedSystem(std::vector<Mode> modes, int max_photons, double epsilon = 0.0);

    // Modes of `set` with ladder index in `subset` (all modes when empty).
    static TruncatedSystem from_modes(const ModeSet& set, const std::vector<int>& subset, int max_photons,
                                      double epsilon = 0.0);

    const std::vector<Mode>& modes() const { return modes_; }
    int max_photons() const { return max_photons_; }
    double epsilon() const { return epsilon_; }
    std::size_t dimension() const { return dimension_; }
    TruncatedSystem with_epsilon(double epsilon) const;

    // Every occupation tuple with total photon number <= max_photons.
    std::vector<std::vector<int>> basis() const;
    double energy(const std::vector<int>& occupation) const;  // Hz

private:
    std::vector<Mode> modes_;
    int max_photons_;
    double epsilon_;
    std::size_t dimension_;
};

// <m| D(beta) |n> from the associated-Laguerre closed form.
std::complex<double> displacement_element(int m, int n, std::complex<double> beta);

// <f| cos(sum_k lambda_k (a_k + a_k^dag)) |i>.
std::complex<double> cos_phi_element(const TruncatedSystem& sys, const std::vector<int>& final_occ,
                                     const std::vector<int>& initial_occ);

struct FinalStateRecord {
    std::vector<int> occupation;
    double M2;        // |<f|E_J cos phi|i>|^2, Hz^2
    double detuning;  // E_f - E_i, Hz
};

struct OracleResult {
    double gamma = 0.0;       // FWHM linewidth, Hz
    double gamma_wide = 0.0;  // window epsilon x 2
    double gamma_narrow = 0.0;  // window epsilon / 2
    double epsilon = 0.0;
    std::size_t final_states = 0;
    bool sparse_spectrum = false;
    std::vector<FinalStateRecord> records;
};

// gamma = 2 pi sum_f |M_fi|^2 / epsilon over final states with |E_f - E_i| <= epsilon/2,
// starting from one photon in ladder mode n.
OracleResult golden_rule_exact(const TruncatedSystem& sys, double E_J, int n, bool keep_records = false);

// Reference ratio oracle / analytic(c0 = 1); see calibration.hpp.
double calibrate_c0();

void write_records_csv(std::ostream& out, const TruncatedSystem& sys, const OracleResult& result);

}  // namespace dqpt
