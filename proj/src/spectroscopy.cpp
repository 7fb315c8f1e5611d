#include "dqpt/spectroscopy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Core>
#include <fmt/format.h>
#include <json.hpp>
#include <unsupported/Eigen/NonLinearOptimization>

#include "dqpt/constants.hpp"
#include "dqpt/errors.hpp"
#include "dqpt/inelastic.hpp"
#include "dqpt/pe.hpp"

namespace dqpt {

using cplx = std::complex<double>;

namespace {
constexpr double pi = std::numbers::pi;
constexpr double kNoiselessFloor = 2e-5;  // systematic floor from tails of modes outside the trace
}  // namespace

std::complex<double> single_mode_s11(double f, double f0, double kext, double kint) {
    return 1.0 - kext / cplx(0.5 * (kext + kint), f - f0);
}

std::vector<ResonanceModel> model_resonances(const LineSpec& line, const JunctionSpec& j, FluxPoint flux,
                                             double kappa_ext, double kappa_bg, PhaseShiftMethod method,
                                             const std::vector<int>& only) {
    if (!(kappa_ext > 0.0) || kappa_bg < 0.0) throw InvalidConfiguration("resonances: need kappa_ext > 0, kappa_bg >= 0");
    const ModeSet modes = build_modes(line);
    std::vector<Mode> chosen;
    if (only.empty()) chosen = modes.modes();
    else
        for (int n : only) chosen.push_back(modes.at_index(n));

    const double E_J = flux_map(j, flux);
    std::vector<double> delta(chosen.size(), 0.0), gamma(chosen.size(), 0.0);
    std::vector<unsigned> flags(chosen.size(), 0);
    if (E_J > 0.0) {
        const PEFunction pe = environment_pe(line);
        std::vector<double> f;
        for (const Mode& m : chosen) f.push_back(m.f);
        if (method == PhaseShiftMethod::second_order_KK) {
            const PhaseShiftCurve c = second_order_phase_shift(line, j, E_J, f, &pe);
            delta = c.delta;
            flags = c.flags;
        } else {
            // The E_J = 0 boundary is subtracted so the half-flux baseline stays at n Delta.
            const RenormalizedJunction rj = renormalize_junction(line, j, E_J);
            const RenormalizedJunction r0 = renormalize_junction(line, j, 0.0);
            for (std::size_t i = 0; i < f.size(); ++i)
                delta[i] = boundary_phase_shift(line, rj, f[i]) - boundary_phase_shift(line, r0, f[i]);
        }
        for (std::size_t i = 0; i < chosen.size(); ++i) gamma[i] = inelastic_rate(modes, j, E_J, pe, chosen[i].n);
    }
    std::vector<ResonanceModel> out;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        ResonanceModel r;
        r.n = chosen[i].n;
        r.f_bare = chosen[i].f;
        r.delta = delta[i];
        r.f = chosen[i].f + delta[i] / pi * line.Delta();
        r.gamma_in = gamma[i];
        r.kappa_ext = kappa_ext;
        r.kappa_int = gamma[i] + kappa_bg;
        r.flags = flags[i];
        out.push_back(r);
    }
    return out;
}

S11Trace synthesize_from_resonances(const std::vector<ResonanceModel>& modes, const std::vector<double>& f,
                                    double noise_sigma, std::uint64_t seed) {
    if (noise_sigma < 0.0) throw InvalidConfiguration("synthesize: noise_sigma must be >= 0");
    S11Trace t;
    t.frequencies = f;
    t.noise_sigma = noise_sigma;
    t.s11.assign(f.size(), cplx(1.0, 0.0));
    if (f.empty()) return t;
    const double lo = f.front(), hi = f.back();
    std::vector<const ResonanceModel*> in;
    for (const auto& m : modes) {
        const double k = m.kappa_ext + m.kappa_int;
        if (m.f >= lo - 50.0 * k && m.f <= hi + 50.0 * k) in.push_back(&m);
    }
    std::sort(in.begin(), in.end(), [](auto* a, auto* b) { return a->f < b->f; });
    for (std::size_t i = 1; i < in.size(); ++i) {
        const double k = std::max(in[i]->kappa_ext + in[i]->kappa_int, in[i - 1]->kappa_ext + in[i - 1]->kappa_int);
        if (in[i]->f - in[i - 1]->f < 3.0 * k) t.overlapping_modes = true;
    }
    for (std::size_t p = 0; p < f.size(); ++p)
        for (const auto* m : in) t.s11[p] *= single_mode_s11(f[p], m->f, m->kappa_ext, m->kappa_int);
    if (noise_sigma > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g(0.0, noise_sigma);
        for (auto& s : t.s11) {
            const double re = g(rng);
            const double im = g(rng);
            s += cplx(re, im);
        }
    }
    return t;
}

S11Trace synthesize_s11(const LineSpec& line, const JunctionSpec& j, FluxPoint flux, double kappa_ext,
                        double kappa_bg, double noise_sigma, const FrequencyWindow& w, std::uint64_t seed,
                        PhaseShiftMethod method) {
    if (!(w.f_hi > w.f_lo) || w.points < 2) throw InvalidConfiguration("synthesize: bad frequency window");
    const ModeSet all = build_modes(line);
    std::vector<int> near;
    const double margin = line.Delta();
    for (const Mode& m : all.modes())
        if (m.f >= w.f_lo - margin && m.f <= w.f_hi + margin) near.push_back(m.n);
    std::vector<ResonanceModel> res;
    if (!near.empty()) res = model_resonances(line, j, flux, kappa_ext, kappa_bg, method, near);
    std::vector<double> f(w.points);
    for (std::size_t i = 0; i < w.points; ++i)
        f[i] = w.f_lo + (w.f_hi - w.f_lo) * static_cast<double>(i) / static_cast<double>(w.points - 1);
    S11Trace t = synthesize_from_resonances(res, f, noise_sigma, seed);
    t.flux = flux;
    return t;
}

std::vector<ModeGuess> baseline_guesses(const LineSpec& line, double f_lo, double f_hi) {
    std::vector<ModeGuess> g;
    for (const Mode& m : build_modes(line).modes())
        if (m.f >= f_lo && m.f <= f_hi) g.push_back({m.n, m.f});
    return g;
}

const ModeFit* FitReport::find(int n) const {
    for (const auto& m : modes)
        if (m.n == n) return &m;
    return nullptr;
}

namespace {

// Residuals of one resonance against data with the other resonances divided out.
// Parameters x = (u, a, b): f0 = f_ref + u s, kext = s a^2, kint = s b^2.
struct ModeFunctor {
    using Scalar = double;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    const std::vector<double>* f;
    std::vector<cplx> data;    // measured / background
    std::vector<cplx> scale;   // background, weights the complex residual
    double f_ref, s, width;    // width normalizes the background slope
    bool magnitude_only;
    int background_terms = 0;  // 0, 3 (magnitude polynomial) or 6 (complex polynomial), quadratic in t
    mutable int evaluations = 0;

    int inputs() const { return 3 + background_terms; }
    int values() const { return static_cast<int>(magnitude_only ? data.size() : 2 * data.size()); }

    // Slowly varying factor multiplying the resonance: 1 + c0 + c1 t + c2 t^2.
    cplx baseline(std::size_t i, const Eigen::VectorXd& x) const {
        if (background_terms == 0) return 1.0;
        const double t = ((*f)[i] - f_ref) / width;
        if (background_terms == 3) return 1.0 + x(3) + (x(4) + x(5) * t) * t;
        return cplx(1.0 + x(3), x(4)) + (cplx(x(5), x(6)) + cplx(x(7), x(8)) * t) * t;
    }

    cplx resonance(std::size_t i, const Eigen::VectorXd& x) const {
        return single_mode_s11((*f)[i], f_ref + x(0) * s, s * x(1) * x(1), s * x(2) * x(2));
    }

    cplx model(std::size_t i, const Eigen::VectorXd& x) const { return resonance(i, x) * baseline(i, x); }

    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& r) const {
        ++evaluations;
        for (std::size_t i = 0; i < data.size(); ++i) {
            const cplx m = model(i, x);
            if (magnitude_only) {
                r(static_cast<long>(i)) = std::abs(m * scale[i]) - std::abs(data[i] * scale[i]);
            } else {
                const cplx d = (m - data[i]) * scale[i];
                r(static_cast<long>(2 * i)) = d.real();
                r(static_cast<long>(2 * i + 1)) = d.imag();
            }
        }
        return 0;
    }

    int df(const Eigen::VectorXd& x, Eigen::MatrixXd& J) const {
        const double kext = s * x(1) * x(1), kint = s * x(2) * x(2);
        const double f0 = f_ref + x(0) * s;
        const int P = inputs();
        std::vector<cplx> g(static_cast<std::size_t>(P));
        for (std::size_t i = 0; i < data.size(); ++i) {
            const cplx D(0.5 * (kext + kint), (*f)[i] - f0);
            const cplx D2 = D * D;
            // S = 1 - kext / D
            const cplx dS_df0 = -kext * cplx(0.0, 1.0) / D2;
            const cplx dS_dkext = -1.0 / D + kext * 0.5 / D2;
            const cplx dS_dkint = kext * 0.5 / D2;
            const cplx B = baseline(i, x) * scale[i];
            const cplx S = resonance(i, x) * scale[i];
            const double t = ((*f)[i] - f_ref) / width;
            g[0] = dS_df0 * s * B;
            g[1] = dS_dkext * (2.0 * s * x(1)) * B;
            g[2] = dS_dkint * (2.0 * s * x(2)) * B;
            if (background_terms == 3) {
                g[3] = S;
                g[4] = S * t;
                g[5] = S * t * t;
            } else if (background_terms == 6) {
                g[3] = S;
                g[4] = S * cplx(0.0, 1.0);
                g[5] = S * t;
                g[6] = S * cplx(0.0, t);
                g[7] = S * t * t;
                g[8] = S * cplx(0.0, t * t);
            }
            if (magnitude_only) {
                const cplx m = model(i, x) * scale[i];
                const double a = std::abs(m);
                for (int k = 0; k < P; ++k)
                    J(static_cast<long>(i), k) = a > 0.0 ? (std::conj(m) * g[k]).real() / a : 0.0;
            } else {
                for (int k = 0; k < P; ++k) {
                    J(static_cast<long>(2 * i), k) = g[k].real();
                    J(static_cast<long>(2 * i + 1), k) = g[k].imag();
                }
            }
        }
        return 0;
    }
};

struct LocalData {
    std::vector<double> f;
    std::vector<cplx> s;
    std::vector<cplx> background;
};

// Width at half maximum of |S - 1|^2 around index k.
double half_max_width(const std::vector<double>& f, const std::vector<double>& y, std::size_t k) {
    const double half = 0.5 * y[k];
    std::size_t lo = k, hi = k;
    while (lo > 0 && y[lo] > half) --lo;
    while (hi + 1 < y.size() && y[hi] > half) ++hi;
    auto cross = [&](std::size_t a, std::size_t b) {
        if (y[a] == y[b]) return f[a];
        return f[a] + (half - y[a]) * (f[b] - f[a]) / (y[b] - y[a]);
    };
    const double fl = lo < k ? cross(lo, lo + 1) : f[lo];
    const double fh = hi > k ? cross(hi - 1, hi) : f[hi];
    return fh - fl;
}

ModeFit fit_one(const LocalData& L, const ModeGuess& g, double guard, double noise_floor, const FitOptions& opt) {
    ModeFit out;
    out.n = g.n;
    out.f_guess = g.f;
    if (L.f.size() < 6) {
        out.flags.push_back("too_few_points");
        return out;
    }
    std::vector<cplx> d(L.f.size());
    std::vector<double> dev2(L.f.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < L.f.size(); ++i) {
        d[i] = L.s[i] / L.background[i];
        dev2[i] = std::norm(d[i] - 1.0);
        if (dev2[i] > dev2[k]) k = i;
    }
    const double detect = std::max(5.0 * noise_floor, 1e-6);
    if (std::sqrt(dev2[k]) < detect) {
        out.flags.push_back("no_mode");
        return out;
    }
    const double df = (L.f.back() - L.f.front()) / static_cast<double>(L.f.size() - 1);
    const double ktot = std::max(half_max_width(L.f, dev2, k), 2.0 * df);
    const double peak = std::sqrt(dev2[k]);
    const double kext0 = std::clamp(0.5 * peak * ktot, 0.05 * ktot, ktot);
    const double kint0 = std::max(ktot - kext0, 0.02 * ktot);

    // Fit only the neighbourhood of the dip; far tails of other resonances stay in the baseline.
    std::vector<double> fw;
    std::vector<cplx> dw, bw;
    const double half = opt.window_in_linewidths > 0.0 ? opt.window_in_linewidths * ktot : INFINITY;
    for (std::size_t i = 0; i < L.f.size(); ++i) {
        if (std::abs(L.f[i] - L.f[k]) > half) continue;
        fw.push_back(L.f[i]);
        dw.push_back(d[i]);
        bw.push_back(L.background[i]);
    }
    if (fw.size() < 8) {
        out.flags.push_back("too_few_points");
        return out;
    }

    ModeFunctor fn;
    fn.f = &fw;
    fn.data = dw;
    fn.scale = bw;
    fn.f_ref = L.f[k];
    fn.s = ktot;
    fn.width = std::max(fw.back() - fw.front(), ktot);
    fn.magnitude_only = opt.magnitude_only;
    fn.background_terms = opt.fit_background ? (opt.magnitude_only ? 3 : 6) : 0;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(fn.inputs());
    x(1) = std::sqrt(kext0 / ktot);
    x(2) = std::sqrt(kint0 / ktot);
    Eigen::LevenbergMarquardt<ModeFunctor> lm(fn);
    lm.parameters.xtol = 1e-9;
    lm.parameters.gtol = 1e-12;
    lm.parameters.ftol = 1e-15;
    lm.parameters.maxfev = 2000;
    const auto status = lm.minimize(x);

    out.f = fn.f_ref + x(0) * fn.s;
    out.kappa_ext = fn.s * x(1) * x(1);
    out.kappa_int = fn.s * x(2) * x(2);
    out.evaluations = fn.evaluations;
    using St = Eigen::LevenbergMarquardtSpace::Status;
    out.converged = status == St::RelativeReductionTooSmall || status == St::RelativeErrorTooSmall ||
                    status == St::RelativeErrorAndReductionTooSmall || status == St::CosinusTooSmall ||
                    status == St::FtolTooSmall || status == St::XtolTooSmall || status == St::GtolTooSmall;
    if (!out.converged) out.flags.push_back(fmt::format("not_converged(status={})", static_cast<int>(status)));

    double ss = 0.0;
    for (std::size_t i = 0; i < fw.size(); ++i)
        ss += std::norm((fn.model(i, x) - dw[i]) * bw[i]);
    out.residual_rms = std::sqrt(ss / static_cast<double>(fw.size()));

    const double limit = opt.acceptance_factor * std::max(noise_floor, kNoiselessFloor);
    bool ok = out.converged;
    if (out.residual_rms > limit) {
        out.flags.push_back("residual_above_limit");
        ok = false;
    }
    if (std::abs(out.f - g.f) > guard) {
        out.flags.push_back("tracking_guard");
        ok = false;
    }
    out.accepted = ok;
    return out;
}

}  // namespace

FitReport fit_modes(const S11Trace& trace, const std::vector<ModeGuess>& guesses_in, const FitOptions& opt) {
    FitReport rep;
    rep.device_id = trace.device_id;
    rep.flux = trace.flux;
    rep.noise_floor = std::sqrt(2.0) * trace.noise_sigma;
    if (trace.frequencies.size() != trace.s11.size()) throw InvalidConfiguration("fit: trace size mismatch");
    std::vector<ModeGuess> guesses = guesses_in;
    std::sort(guesses.begin(), guesses.end(), [](auto& a, auto& b) { return a.f < b.f; });

    // Each mode owns the frequencies closer to it than to its neighbours.
    const std::size_t G = guesses.size();
    std::vector<double> cell_lo(G), cell_hi(G), guard(G);
    for (std::size_t i = 0; i < G; ++i) {
        const double left = i > 0 ? guesses[i].f - guesses[i - 1].f : 0.0;
        const double right = i + 1 < G ? guesses[i + 1].f - guesses[i].f : 0.0;
        cell_lo[i] = i > 0 ? guesses[i].f - 0.5 * left : -INFINITY;
        cell_hi[i] = i + 1 < G ? guesses[i].f + 0.5 * right : INFINITY;
        double nearest = INFINITY;
        if (left > 0.0) nearest = left;
        if (right > 0.0) nearest = std::min(nearest, right);
        guard[i] = opt.guard > 0.0 ? opt.guard : 0.5 * nearest;
    }

    std::vector<ModeFit> fits(G);
    for (int sweep = 0; sweep < std::max(1, opt.max_sweeps); ++sweep) {
        double change = 0.0;
        for (std::size_t i = 0; i < G; ++i) {
            LocalData L;
            for (std::size_t p = 0; p < trace.frequencies.size(); ++p) {
                const double f = trace.frequencies[p];
                if (f < cell_lo[i] || f >= cell_hi[i]) continue;
                cplx bg = 1.0;
                if (sweep > 0)
                    for (std::size_t o = 0; o < G; ++o)
                        if (o != i && fits[o].converged)
                            bg *= single_mode_s11(f, fits[o].f, fits[o].kappa_ext, fits[o].kappa_int);
                L.f.push_back(f);
                L.s.push_back(trace.s11[p]);
                L.background.push_back(bg);
            }
            ModeFit nf = fit_one(L, guesses[i], guard[i], rep.noise_floor, opt);
            if (sweep > 0 && fits[i].converged && nf.converged) {
                const double w = nf.kappa_ext + nf.kappa_int;
                change = std::max({change, std::abs(nf.f - fits[i].f) / w, std::abs(nf.kappa_ext - fits[i].kappa_ext) / w,
                                   std::abs(nf.kappa_int - fits[i].kappa_int) / w});
            } else if (sweep > 0) {
                change = INFINITY;
            }
            fits[i] = nf;
        }
        if (G <= 1 || (sweep > 0 && change < 1e-10)) break;
    }
    rep.modes = std::move(fits);
    return rep;
}

std::vector<FitReport> track_modes(const std::vector<S11Trace>& traces, const std::vector<ModeGuess>& start,
                                   const FitOptions& opt) {
    std::vector<FitReport> out;
    std::vector<ModeGuess> g = start;
    for (const auto& t : traces) {
        FitReport r = fit_modes(t, g, opt);
        for (auto& guess : g)
            if (const ModeFit* m = r.find(guess.n); m && m->accepted) guess.f = m->f;
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<Observable> extract_observables(const FitReport& at_int, const FitReport& at_half, double Delta,
                                            std::optional<double> area) {
    auto accepted = [](const FitReport& r) {
        std::map<int, const ModeFit*> m;
        for (const auto& f : r.modes)
            if (f.accepted) m[f.n] = &f;
        return m;
    };
    const auto a = accepted(at_int), b = accepted(at_half);
    if (a.size() != b.size())
        throw InvalidConfiguration(fmt::format("extract: {} accepted modes at integer flux, {} at half flux", a.size(), b.size()));
    std::vector<Observable> out;
    for (const auto& [n, fi] : a) {
        auto it = b.find(n);
        if (it == b.end()) throw InvalidConfiguration(fmt::format("extract: mode {} missing at half flux", n));
        const ModeFit* fh = it->second;
        Observable o;
        o.n = n;
        o.f = fh->f;
        o.delta_over_pi = (fi->f - fh->f) / Delta;
        o.gamma_in = fi->kappa_int - fh->kappa_int;
        if (area) {
            const double A2 = *area * *area;
            o.delta_over_pi_per_A2 = o.delta_over_pi / A2;
            o.gamma_in_per_A2 = o.gamma_in / A2;
        }
        out.push_back(o);
    }
    return out;
}

std::vector<PipelineRecord> run_pipeline(const DeviceConfig& dev, const std::vector<int>& modes,
                                         const PipelineOptions& opt) {
    const FluxPoint fint{opt.integer_flux}, fhalf{opt.integer_flux + 0.5};
    const auto inj_i = model_resonances(dev.line, dev.junction, fint, dev.kappa_ext, dev.kappa_bg, opt.method, modes);
    const auto inj_h = model_resonances(dev.line, dev.junction, fhalf, dev.kappa_ext, dev.kappa_bg, opt.method, modes);
    std::vector<PipelineRecord> out;
    for (std::size_t k = 0; k < modes.size(); ++k) {
        // One narrow window per mode; both flux points share the window and grid.
        const double w = opt.half_width_in_kappa *
                         std::max(inj_i[k].kappa_ext + inj_i[k].kappa_int, inj_h[k].kappa_ext + inj_h[k].kappa_int);
        const double c = 0.5 * (inj_i[k].f + inj_h[k].f);
        const double half = 0.5 * std::abs(inj_i[k].f - inj_h[k].f) + w;
        std::vector<double> f(opt.points);
        for (std::size_t p = 0; p < opt.points; ++p)
            f[p] = c - half + 2.0 * half * static_cast<double>(p) / static_cast<double>(opt.points - 1);
        const std::uint64_t s = opt.seed * 1000003ULL + static_cast<std::uint64_t>(modes[k]) * 2ULL;
        S11Trace ti = synthesize_from_resonances({inj_i[k]}, f, opt.noise_sigma, s);
        S11Trace th = synthesize_from_resonances({inj_h[k]}, f, opt.noise_sigma, s + 1);
        ti.flux = fint;
        th.flux = fhalf;
        ti.device_id = th.device_id = dev.device_id;
        FitOptions fo;
        fo.guard = 0.5 * dev.line.Delta();
        const FitReport ri = fit_modes(ti, {{modes[k], inj_h[k].f_bare}}, fo);
        const FitReport rh = fit_modes(th, {{modes[k], inj_h[k].f_bare}}, fo);
        PipelineRecord rec;
        rec.injected_integer = inj_i[k];
        rec.injected_half = inj_h[k];
        rec.accepted = ri.modes[0].accepted && rh.modes[0].accepted;
        if (rec.accepted) rec.extracted = extract_observables(ri, rh, dev.line.Delta(), dev.junction.area())[0];
        else rec.extracted.n = modes[k];
        out.push_back(rec);
    }
    return out;
}

void write_csv(std::ostream& out, const S11Trace& t) {
    out << fmt::format("# flux_ratio={:.17g}\n# device_id={}\n# noise_sigma={:.17g}\n", t.flux.phi_ratio, t.device_id,
                       t.noise_sigma);
    if (t.overlapping_modes) out << "# warning=overlapping_modes\n";
    out << "f_GHz,re_s11,im_s11\n";
    for (std::size_t i = 0; i < t.frequencies.size(); ++i)
        out << fmt::format("{:.17g},{:.17g},{:.17g}\n", t.frequencies[i] / 1e9, t.s11[i].real(), t.s11[i].imag());
}

S11Trace read_s11_csv(std::istream& in) {
    S11Trace t;
    std::string line;
    bool header = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            std::string k = line.substr(1, eq - 1);
            k.erase(0, k.find_first_not_of(' '));
            const std::string v = line.substr(eq + 1);
            if (k == "flux_ratio") t.flux.phi_ratio = std::stod(v);
            else if (k == "device_id") t.device_id = v;
            else if (k == "noise_sigma") t.noise_sigma = std::stod(v);
            else if (k == "warning" && v == "overlapping_modes") t.overlapping_modes = true;
            continue;
        }
        if (!header) {
            if (line.rfind("f_GHz,re_s11,im_s11", 0) != 0)
                throw InvalidConfiguration(fmt::format("S11 csv line {}: expected column header", lineno));
            header = true;
            continue;
        }
        std::istringstream ss(line);
        std::string a, b, c;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ','))
            throw InvalidConfiguration(fmt::format("S11 csv line {}: expected three columns", lineno));
        try {
            t.frequencies.push_back(std::stod(a) * 1e9);
            t.s11.emplace_back(std::stod(b), std::stod(c));
        } catch (const std::exception&) {
            throw InvalidConfiguration(fmt::format("S11 csv line {}: bad number", lineno));
        }
    }
    if (!header) throw InvalidConfiguration("S11 csv: missing column header");
    return t;
}

S11Trace read_s11_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfiguration(fmt::format("cannot open '{}'", path.string()));
    return read_s11_csv(in);
}

std::string to_json(const FitReport& r) {
    nlohmann::ordered_json j;
    j["device_id"] = r.device_id;
    j["flux_ratio"] = r.flux.phi_ratio;
    j["noise_floor"] = r.noise_floor;
    j["modes"] = nlohmann::ordered_json::array();
    for (const auto& m : r.modes) {
        nlohmann::ordered_json e;
        e["n"] = m.n;
        e["f_guess_GHz"] = m.f_guess / 1e9;
        e["f_GHz"] = m.f / 1e9;
        e["kappa_ext_MHz"] = m.kappa_ext / 1e6;
        e["kappa_int_MHz"] = m.kappa_int / 1e6;
        e["residual_rms"] = m.residual_rms;
        e["evaluations"] = m.evaluations;
        e["converged"] = m.converged;
        e["accepted"] = m.accepted;
        e["flags"] = m.flags;
        j["modes"].push_back(e);
    }
    return j.dump(2);
}

FitReport fit_report_from_json(const std::string& text) {
    FitReport r;
    try {
        const auto j = nlohmann::json::parse(text);
        r.device_id = j.value("device_id", "");
        r.flux.phi_ratio = j.at("flux_ratio").get<double>();
        r.noise_floor = j.value("noise_floor", 0.0);
        for (const auto& e : j.at("modes")) {
            ModeFit m;
            m.n = e.at("n").get<int>();
            m.f_guess = e.value("f_guess_GHz", 0.0) * 1e9;
            m.f = e.at("f_GHz").get<double>() * 1e9;
            m.kappa_ext = e.at("kappa_ext_MHz").get<double>() * 1e6;
            m.kappa_int = e.at("kappa_int_MHz").get<double>() * 1e6;
            m.residual_rms = e.value("residual_rms", 0.0);
            m.evaluations = e.value("evaluations", 0);
            m.converged = e.value("converged", false);
            m.accepted = e.at("accepted").get<bool>();
            m.flags = e.value("flags", std::vector<std::string>{});
            r.modes.push_back(m);
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfiguration(fmt::format("fit report: {}", e.what()));
    }
    return r;
}

void write_csv(std::ostream& out, const std::vector<Observable>& obs) {
    out << "n,f_GHz,delta_over_pi,gamma_in_MHz,delta_over_pi_per_A2,gamma_in_MHz_per_A2\n";
    for (const auto& o : obs) {
        out << fmt::format("{},{:.12g},{:.12g},{:.12g},", o.n, o.f / 1e9, o.delta_over_pi, o.gamma_in / 1e6);
        out << (o.delta_over_pi_per_A2 ? fmt::format("{:.12g}", *o.delta_over_pi_per_A2) : std::string()) << ',';
        out << (o.gamma_in_per_A2 ? fmt::format("{:.12g}", *o.gamma_in_per_A2 / 1e6) : std::string()) << '\n';
    }
}

}  // namespace dqpt
