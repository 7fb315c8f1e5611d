#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace dqpt {

class LineSpec {
public:
    // Z in Ohm; Delta, f_min, f_cutoff in Hz; T in K.
    LineSpec(double Z, double Delta, double f_min, double f_cutoff, double T = 0.0);

    double Z() const { return Z_; }
    double Delta() const { return Delta_; }
    double f_min() const { return f_min_; }
    double f_cutoff() const { return f_cutoff_; }
    double T() const { return T_; }
    double alpha() const;
    double E_cutoff() const;  // h f_cutoff in J

    LineSpec with_Z(double Z) const;
    LineSpec with_T(double T) const;
    LineSpec with_cutoff(double f_cutoff) const;

private:
    double Z_, Delta_, f_min_, f_cutoff_, T_;
};

class JunctionSpec {
public:
    static constexpr double default_area_scale = 124e9;     // Hz per um^2
    static constexpr double default_area_tolerance = 0.15;  // relative

    // Energies in Hz (E/h). area_um2 optional; when present E_J_max must match area_scale * area.
    JunctionSpec(double E_J_max, double E_C, std::optional<double> area_um2 = std::nullopt,
                 double area_scale = default_area_scale,
                 double area_tolerance = default_area_tolerance);

    // E_J_max derived from the area.
    static JunctionSpec from_area(double area_um2, double E_C,
                                  double area_scale = default_area_scale);

    double E_J_max() const { return E_J_max_; }
    double E_C() const { return E_C_; }
    double C_J() const;
    std::optional<double> area() const { return area_; }
    double area_scale() const { return area_scale_; }

    JunctionSpec with_E_J_max(double E_J_max) const;

private:
    double E_J_max_, E_C_;
    std::optional<double> area_;
    double area_scale_, area_tolerance_;
};

struct FluxPoint {
    double phi_ratio = 0.0;  // Phi / Phi_0
};

struct Mode {
    int n;
    double f;        // Hz
    double lambda2;  // squared coupling
    double lambda() const;
};

class ModeSet {
public:
    ModeSet(std::vector<Mode> modes, LineSpec line);

    const std::vector<Mode>& modes() const { return modes_; }
    const LineSpec& line() const { return line_; }
    std::size_t size() const { return modes_.size(); }
    const Mode& at_index(int n) const;  // by ladder index n
    bool contains(int n) const;
    double coupling_sum() const;

private:
    std::vector<Mode> modes_;
    LineSpec line_;
};

// E_J(Phi) = E_J_max |cos(pi Phi/Phi_0)|, exactly zero at half-integer flux.
double flux_map(const JunctionSpec& j, FluxPoint phi);

ModeSet build_modes(const LineSpec& line);

// Squared coupling of a mode at frequency f for a line with spacing Delta.
double mode_coupling2(double alpha, double Delta, double f);

// 1/(2 pi Z C_J), optionally capped by a user value.
double default_cutoff(double Z, double C_J, std::optional<double> override_hz = std::nullopt);

}  // namespace dqpt
