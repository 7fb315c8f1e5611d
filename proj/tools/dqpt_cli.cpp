// dqpt: command-line front end for the junction scattering workbench.
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dqpt/boundary.hpp"
#include "dqpt/constants.hpp"
#include "dqpt/device_config.hpp"
#include "dqpt/errors.hpp"
#include "dqpt/fock_oracle.hpp"
#include "dqpt/inelastic.hpp"
#include "dqpt/manifest.hpp"
#include "dqpt/recipes.hpp"
#include "dqpt/spectroscopy.hpp"
#include "dqpt/sweep.hpp"

namespace fs = std::filesystem;
using namespace dqpt;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitNumerical = 3;

struct Common {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    std::size_t budget = 100000;
};

// Writes to --out/<name> when --out is given, else to stdout.
void emit(const Common& c, const std::string& name, const std::string& text) {
    if (c.out.empty()) {
        std::cout << text;
        return;
    }
    write_text_file(c.out, name, text);
    std::cerr << "wrote " << (fs::path(c.out) / name).string() << "\n";
}

DeviceConfig need_config(const Common& c) {
    if (c.config.empty()) throw InvalidConfiguration("--config is required");
    return load_device_config(c.config);
}

std::vector<double> grid(double lo, double hi, int n, bool log) {
    if (n < 1 || !(hi >= lo) || !(lo > 0.0)) throw InvalidConfiguration("bad frequency grid");
    std::vector<double> v;
    for (int i = 0; i < n; ++i) {
        const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
        v.push_back(log ? lo * std::pow(hi / lo, t) : lo + (hi - lo) * t);
    }
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Josephson junction at the end of a high-impedance line: scattering workbench"};
    app.require_subcommand(1);
    Common c;
    auto common = [&](CLI::App* sub, bool config = true) {
        if (config) sub->add_option("--config", c.config, "device config file (key = value)");
        sub->add_option("--out", c.out, "output directory (default: stdout)");
        sub->add_option("--seed", c.seed, "noise seed");
        sub->add_option("--jobs", c.jobs, "worker threads");
        sub->add_option("--budget", c.budget, "maximum sweep grid points");
    };

    auto* modes = app.add_subcommand("modes", "mode ladder and couplings");
    common(modes);

    double flux = 0.0, f_lo = 0.0, f_hi = 0.0;
    int points = 50;
    std::string method = "kk";
    bool bare = false;
    auto* phase = app.add_subcommand("phase-shift", "elastic phase shift against frequency");
    common(phase);
    phase->add_option("--flux", flux, "flux Phi/Phi_0");
    phase->add_option("--method", method, "kk (second order) or boundary")->check(CLI::IsMember({"kk", "boundary"}));
    phase->add_option("--f-lo", f_lo, "lowest frequency, GHz (default f_min)");
    phase->add_option("--f-hi", f_hi, "highest frequency, GHz (default f_cutoff)");
    phase->add_option("--points", points, "grid points (log spaced)");
    phase->add_flag("--bare-ej", bare, "inductive branch from the bare E_J");

    auto* inel = app.add_subcommand("inelastic", "inelastic rate per mode and its scaling exponent");
    common(inel);
    inel->add_option("--flux", flux, "flux Phi/Phi_0");
    inel->add_option("--f-lo", f_lo, "lowest mode frequency, GHz");
    inel->add_option("--f-hi", f_hi, "highest mode frequency, GHz");

    int n_modes = 6, nph = 6, photon = 0;
    double alpha = 1.0, cutoff_over_delta = 0.0;
    std::vector<int> subset;
    auto* oracle = app.add_subcommand("oracle-check", "exact truncated golden rule against the analytic rate");
    common(oracle, false);
    oracle->add_option("--modes", n_modes, "line modes (f_cutoff = (modes + 0.5) Delta unless --cutoff)");
    oracle->add_option("--cutoff", cutoff_over_delta, "f_cutoff in units of Delta");
    oracle->add_option("--subset", subset, "mode indices kept in the truncated system");
    oracle->add_option("--nph", nph, "maximum total photons");
    oracle->add_option("--photon", photon, "initially excited mode (default: highest)");
    oracle->add_option("--alpha", alpha, "Z/R_Q");

    double noise = 0.0;
    auto* synth = app.add_subcommand("s11-synth", "synthetic reflection trace");
    common(synth);
    synth->add_option("--flux", flux, "flux Phi/Phi_0");
    synth->add_option("--f-lo", f_lo, "window start, GHz")->required();
    synth->add_option("--f-hi", f_hi, "window end, GHz")->required();
    synth->add_option("--points", points, "frequency points")->default_val(4001);
    synth->add_option("--noise", noise, "noise sigma per component");
    synth->add_option("--method", method, "kk or boundary")->check(CLI::IsMember({"kk", "boundary"}));

    std::string trace_path;
    bool magnitude = false;
    auto* fit = app.add_subcommand("s11-fit", "fit resonances in a reflection trace");
    common(fit);
    fit->add_option("--trace", trace_path, "S11 csv")->required();
    fit->add_flag("--magnitude-only", magnitude, "fit |S11| only");

    std::string rep_int, rep_half;
    auto* extract = app.add_subcommand("extract", "phase shift and inelastic rate from two fit reports");
    common(extract);
    extract->add_option("--integer", rep_int, "fit report at integer flux")->required();
    extract->add_option("--half", rep_half, "fit report at half-integer flux")->required();

    std::string spec_path;
    auto* sweep = app.add_subcommand("sweep", "parameter sweep from a JSON spec");
    common(sweep, false);
    sweep->add_option("--spec", spec_path, "sweep spec (JSON)")->required();

    std::string figure, config_dir = default_config_dir().string();
    auto* repro = app.add_subcommand("reproduce", "figure recipes with manifests");
    common(repro, false);
    repro->add_option("figure", figure, "figure id")->required()->check(CLI::IsMember(figure_ids));
    repro->add_option("--config-dir", config_dir, "bundled config directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInvalid;
    }

    try {
        if (*modes) {
            const DeviceConfig d = need_config(c);
            const ModeSet ms = build_modes(d.line);
            std::string out = fmt::format("# alpha={:.10g}\n# f_cutoff_GHz={:.10g}\n# coupling_sum={:.10g}\n"
                                          "# log_sum_rule={:.10g}\n",
                                          d.line.alpha(), d.line.f_cutoff() / 1e9, ms.coupling_sum(),
                                          2.0 * d.line.alpha() * std::log(d.line.f_cutoff() / d.line.f_min()));
            out += "n,f_GHz,lambda2\n";
            for (const Mode& m : ms.modes()) out += fmt::format("{},{:.12g},{:.12g}\n", m.n, m.f / 1e9, m.lambda2);
            emit(c, "modes.csv", out);
        } else if (*phase) {
            const DeviceConfig d = need_config(c);
            const double lo = f_lo > 0 ? f_lo * 1e9 : d.line.f_min();
            const double hi = f_hi > 0 ? f_hi * 1e9 : d.line.f_cutoff();
            const auto f = grid(lo, hi, points, true);
            const double E_J = flux_map(d.junction, {flux});
            PhaseShiftCurve curve;
            if (method == "kk") curve = second_order_phase_shift(d.line, d.junction, E_J, f);
            else {
                RenormalizeOptions o;
                o.use_bare_EJ = bare;
                curve = boundary_phase_shift_curve(d.line, renormalize_junction(d.line, d.junction, E_J, o), f);
            }
            std::ostringstream ss;
            ss << fmt::format("# device_id={}\n# alpha={:.10g}\n# E_J_GHz={:.10g}\n", d.device_id, d.line.alpha(), E_J / 1e9);
            write_csv(ss, curve);
            emit(c, "phase_shift.csv", ss.str());
        } else if (*inel) {
            const DeviceConfig d = need_config(c);
            const double E_J = flux_map(d.junction, {flux});
            const double lo = f_lo > 0 ? f_lo * 1e9 : d.line.f_min();
            const double hi = f_hi > 0 ? f_hi * 1e9 : d.line.f_cutoff();
            const auto res = compute_scattering(build_modes(d.line), d.junction, E_J, environment_pe(d.line), lo, hi);
            std::ostringstream ss;
            try {
                const SlopeFit s = scaling_exponent(res, lo, hi);
                ss << fmt::format("# slope={:.10g}\n# slope_stderr={:.10g}\n# expected_2_alpha_minus_1={:.10g}\n", s.slope,
                                  s.stderr_slope, 2.0 * (d.line.alpha() - 1.0));
            } catch (const InvalidConfiguration& e) {
                ss << "# slope=unavailable (" << e.what() << ")\n";
            }
            write_csv(ss, res);
            emit(c, "inelastic.csv", ss.str());
        } else if (*oracle) {
            const double Delta = 1e9;
            const double fc = (cutoff_over_delta > 0 ? cutoff_over_delta : n_modes + 0.5) * Delta;
            const LineSpec line(alpha * constants::R_Q, Delta, Delta, fc, 0.0);
            const ModeSet ms = build_modes(line);
            const int n = photon > 0 ? photon : (subset.empty() ? ms.modes().back().n : *std::max_element(subset.begin(), subset.end()));
            const TruncatedSystem sys = TruncatedSystem::from_modes(ms, subset, nph);
            const double E_J = 0.01 * Delta;
            const OracleResult o = golden_rule_exact(sys, E_J, n);
            const JunctionSpec j(E_J, 40e9);
            const double a = inelastic_rate(ms, j, E_J, environment_pe(line), n);
            std::string out = "modes,photon,nph,dimension,final_states,gamma_oracle_over_Delta,gamma_analytic_over_Delta,"
                              "relative_difference,gamma_wide_over_Delta,gamma_narrow_over_Delta\n";
            std::string sub;
            for (const Mode& m : sys.modes()) sub += (sub.empty() ? "" : " ") + std::to_string(m.n);
            out += fmt::format("{},{},{},{},{},{:.10g},{:.10g},{:.6g},{:.10g},{:.10g}\n", sub, n, nph, sys.dimension(),
                               o.final_states, o.gamma / Delta, a / Delta, a / o.gamma - 1.0,
                               o.gamma_wide / Delta, o.gamma_narrow / Delta);
            emit(c, "oracle_check.csv", out);
        } else if (*synth) {
            const DeviceConfig d = need_config(c);
            const S11Trace base = synthesize_s11(d.line, d.junction, {flux}, d.kappa_ext, d.kappa_bg, noise,
                                                 {f_lo * 1e9, f_hi * 1e9, static_cast<std::size_t>(points)}, c.seed,
                                                 method == "kk" ? PhaseShiftMethod::second_order_KK
                                                                : PhaseShiftMethod::boundary_impedance);
            S11Trace t = base;
            t.device_id = d.device_id;
            if (t.overlapping_modes) std::cerr << "warning: overlapping modes, fits unreliable\n";
            std::ostringstream ss;
            write_csv(ss, t);
            emit(c, fmt::format("s11_flux_{:.4f}.csv", flux), ss.str());
        } else if (*fit) {
            const S11Trace t = read_s11_csv(trace_path);
            if (t.frequencies.empty()) throw InvalidConfiguration("trace has no points");
            std::vector<ModeGuess> g;
            if (!c.config.empty()) {
                const DeviceConfig d = load_device_config(c.config);
                g = baseline_guesses(d.line, t.frequencies.front() - 0.5 * d.line.Delta(), t.frequencies.back() + 0.5 * d.line.Delta());
            } else {
                // Without a config, a single resonance at the strongest deviation.
                std::size_t k = 0;
                for (std::size_t i = 0; i < t.s11.size(); ++i)
                    if (std::norm(t.s11[i] - 1.0) > std::norm(t.s11[k] - 1.0)) k = i;
                g.push_back({0, t.frequencies[k]});
            }
            FitOptions fo;
            fo.magnitude_only = magnitude;
            const FitReport r = fit_modes(t, g, fo);
            emit(c, "fit_report.json", to_json(r) + "\n");
        } else if (*extract) {
            auto read = [](const std::string& p) {
                std::ifstream in(p);
                if (!in) throw InvalidConfiguration(fmt::format("cannot open '{}'", p));
                std::stringstream ss;
                ss << in.rdbuf();
                return fit_report_from_json(ss.str());
            };
            const DeviceConfig d = need_config(c);
            const auto obs = extract_observables(read(rep_int), read(rep_half), d.line.Delta(), d.junction.area());
            std::ostringstream ss;
            write_csv(ss, obs);
            emit(c, "observables.csv", ss.str());
        } else if (*sweep) {
            SweepSpec s = load_sweep_spec(spec_path);
            if (app.get_subcommand("sweep")->get_option("--budget")->count()) {
                s.budget = c.budget;
                if (s.points() > s.budget)
                    throw InvalidConfiguration(fmt::format("sweep: {} grid points exceed budget {}", s.points(), s.budget));
            }
            if (app.get_subcommand("sweep")->get_option("--seed")->count()) s.seed = c.seed;
            const SweepTable t = run_sweep(s, c.jobs);
            emit(c, s.name + ".csv", t.to_csv(s.name));
            if (t.failed_points) {
                std::cerr << t.failed_points << " grid point(s) failed; see the flags column\n";
                return kExitNumerical;
            }
        } else if (*repro) {
            if (c.out.empty()) throw InvalidConfiguration("reproduce needs --out");
            const Manifest m = reproduce(figure, config_dir, c.out, c.jobs);
            std::cout << fmt::format("{}: {} file(s), content hash {}\n", figure, m.files.size(), m.content_hash());
        }
    } catch (const InvalidConfiguration& e) {
        std::cerr << "invalid configuration: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const OutOfRegime& e) {
        std::cerr << "out of regime: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return 0;
}
