#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dqpt/boundary.hpp"
#include "dqpt/circuit.hpp"
#include "dqpt/device_config.hpp"

namespace dqpt {

struct S11Trace {
    FluxPoint flux;
    std::string device_id;
    std::vector<double> frequencies;  // Hz
    std::vector<std::complex<double>> s11;
    double noise_sigma = 0.0;  // per real component
    bool overlapping_modes = false;
};

struct FrequencyWindow {
    double f_lo = 0.0, f_hi = 0.0;  // Hz
    std::size_t points = 0;
};

// One resonance as injected into a synthetic trace. Widths are FWHM in Hz.
struct ResonanceModel {
    int n = 0;
    double f_bare = 0.0;  // n Delta
    double f = 0.0;       // shifted resonance
    double delta = 0.0;   // rad
    double gamma_in = 0.0;
    double kappa_ext = 0.0;
    double kappa_int = 0.0;
    unsigned flags = 0;  // phase_flag bits
};

// Resonance parameters of every line mode at a flux point.
std::vector<ResonanceModel> model_resonances(const LineSpec& line, const JunctionSpec& j, FluxPoint flux,
                                             double kappa_ext, double kappa_bg,
                                             PhaseShiftMethod method = PhaseShiftMethod::second_order_KK,
                                             const std::vector<int>& only = {});

// S11(f) = prod_n [1 - k_ext / (i (f - f_n) + (k_ext + k_int)/2)] plus N(0, sigma^2) per component.
S11Trace synthesize_from_resonances(const std::vector<ResonanceModel>& modes, const std::vector<double>& f,
                                    double noise_sigma, std::uint64_t seed);

S11Trace synthesize_s11(const LineSpec& line, const JunctionSpec& j, FluxPoint flux, double kappa_ext,
                        double kappa_bg, double noise_sigma, const FrequencyWindow& window, std::uint64_t seed,
                        PhaseShiftMethod method = PhaseShiftMethod::second_order_KK);

std::complex<double> single_mode_s11(double f, double f0, double kappa_ext, double kappa_int);

struct ModeGuess {
    int n = 0;
    double f = 0.0;  // Hz
};

std::vector<ModeGuess> baseline_guesses(const LineSpec& line, double f_lo, double f_hi);

struct ModeFit {
    int n = 0;
    double f_guess = 0.0;
    double f = 0.0;
    double kappa_ext = 0.0;
    double kappa_int = 0.0;
    double residual_rms = 0.0;
    int evaluations = 0;
    bool converged = false;
    bool accepted = false;
    std::vector<std::string> flags;
};

struct FitReport {
    std::string device_id;
    FluxPoint flux;
    double noise_floor = 0.0;  // rms of complex noise
    std::vector<ModeFit> modes;

    const ModeFit* find(int n) const;
};

struct FitOptions {
    double acceptance_factor = 5.0;  // reject when rms residual exceeds this times the noise floor
    double guard = 0.0;              // max |f - f_guess|; 0 means half the guess spacing
    int max_sweeps = 4;
    bool magnitude_only = false;
    double window_in_linewidths = 15.0;  // fit within this many linewidths of the dip; 0 uses the whole cell
    bool fit_background = true;          // slowly varying quadratic factor from unfitted tails
};

// Fits each guessed resonance with the others held fixed, sweeping until parameters settle.
FitReport fit_modes(const S11Trace& trace, const std::vector<ModeGuess>& guesses, const FitOptions& opt = {});

// Fits a flux-ordered trace sequence, continuing each mode from its previous fitted frequency.
std::vector<FitReport> track_modes(const std::vector<S11Trace>& traces, const std::vector<ModeGuess>& start,
                                   const FitOptions& opt = {});

struct Observable {
    int n = 0;
    double f = 0.0;  // frequency at the reference (half-integer) flux, Hz
    double delta_over_pi = 0.0;
    double gamma_in = 0.0;  // Hz
    std::optional<double> delta_over_pi_per_A2;  // per um^4
    std::optional<double> gamma_in_per_A2;
};

// delta/pi = (f(int) - f(half)) / Delta, gamma_in = kappa_int(int) - kappa_int(half).
std::vector<Observable> extract_observables(const FitReport& at_integer, const FitReport& at_half, double Delta,
                                            std::optional<double> area_um2 = std::nullopt);

// Model -> two synthetic traces per mode -> fit -> extract.
struct PipelineOptions {
    PhaseShiftMethod method = PhaseShiftMethod::second_order_KK;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    std::size_t points = 2001;
    double half_width_in_kappa = 12.0;  // window half width in units of the larger linewidth
    double integer_flux = 0.0;
};

struct PipelineRecord {
    ResonanceModel injected_integer;
    ResonanceModel injected_half;
    Observable extracted;
    bool accepted = false;
};

std::vector<PipelineRecord> run_pipeline(const DeviceConfig& device, const std::vector<int>& modes,
                                         const PipelineOptions& opt = {});

void write_csv(std::ostream& out, const S11Trace& trace);
S11Trace read_s11_csv(std::istream& in);
S11Trace read_s11_csv(const std::filesystem::path& path);

std::string to_json(const FitReport& report);
FitReport fit_report_from_json(const std::string& text);

void write_csv(std::ostream& out, const std::vector<Observable>& obs);

}  // namespace dqpt
