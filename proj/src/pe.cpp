#include "dqpt/pe.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <ostream>

#include <fftw3.h>
#include <fmt/format.h>
#include <Eigen/Dense>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>
#include <gsl/gsl_sf_zeta.h>

#include "dqpt/constants.hpp"
#include "dqpt/errors.hpp"

namespace dqpt {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double kNormTol = 1e-6;
constexpr double kBalanceTol = 1e-4;
constexpr double kNegativeTol = 1e-6;  // relative to the peak
constexpr double kMissingMass = 1e-10;  // zero-T mass left below the first grid point
constexpr std::size_t kMaxZeroTGrid = 1u << 22;
constexpr std::size_t kMaxFFTGrid = 1u << 23;

// FFTW planning is not thread safe; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return s;
}

double sharp_closed_form(double alpha, double edge, double E) {
    if (E <= 0.0 || E > edge) return 0.0;
    return 2.0 * alpha / edge * std::pow(E / edge, 2.0 * alpha - 1.0);
}

// coth(y) - 1/y, accurate for small y.
double coth_minus_inverse(double y) {
    if (y < 1e-2) {
        const double y2 = y * y;
        return y * (1.0 / 3.0 - y2 * (1.0 / 45.0 - y2 * (2.0 / 945.0)));
    }
    if (y > 40.0) return 1.0 - 1.0 / y;
    return 1.0 / std::tanh(y) - 1.0 / y;
}

}  // namespace

const char* to_string(CutoffForm form) {
    return form == CutoffForm::sharp ? "sharp" : "lorentzian";
}

PEFunction::PEFunction(double alpha, double T, double E_cutoff, double edge, CutoffForm form,
                       std::vector<double> E, std::vector<double> P, std::string note)
    : alpha_(alpha), T_(T), E_cutoff_(E_cutoff), edge_(edge), form_(form), E_(std::move(E)),
      P_(std::move(P)), note_(std::move(note)) {
    if (E_.size() != P_.size() || E_.size() < 2) throw InvalidConfiguration("P(E): bad table");
    for (std::size_t i = 1; i < E_.size(); ++i)
        if (!(E_[i] > E_[i - 1])) throw InvalidConfiguration("P(E): grid must increase");
    for (double p : P_)
        if (!(p >= 0.0)) throw NumericalFailure("P(E): negative or non-finite density");
}

double PEFunction::support_max() const { return form_ == CutoffForm::sharp ? edge_ : E_.back(); }

bool PEFunction::covers(double E) const {
    if (form_ == CutoffForm::sharp) return true;  // closed form everywhere
    return E >= E_.front() && E <= E_.back();
}

double PEFunction::operator()(double E) const {
    if (!covers(E))
        throw OutOfRegime(fmt::format("P(E): E/E_c = {:.4g} outside tabulated range", E / E_cutoff_));
    if (form_ == CutoffForm::sharp) return sharp_closed_form(alpha_, edge_, E);

    // Four-point Lagrange interpolation on the uniform FFT grid.
    const double dE = E_[1] - E_[0];
    const double s = (E - E_.front()) / dE;
    const auto n = static_cast<long>(E_.size());
    long i = std::clamp(static_cast<long>(std::floor(s)), 1L, n - 3);
    const double t = s - static_cast<double>(i);
    const double p0 = P_[i - 1], p1 = P_[i], p2 = P_[i + 1], p3 = P_[i + 2];
    const double v = p1 + 0.5 * t * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
                                                    t * (3.0 * (p1 - p2) + p3 - p0)));
    return std::max(v, 0.0);
}

double PEFunction::normalization() const { return trapezoid(E_, P_) + tail_mass_; }

double PEFunction::first_moment() const {
    std::vector<double> EP(E_.size());
    for (std::size_t i = 0; i < E_.size(); ++i) EP[i] = E_[i] * P_[i];
    return trapezoid(E_, EP) + tail_moment_;
}

double PEFunction::detailed_balance_error(double window_kT) const {
    if (T_ <= 0.0 || form_ == CutoffForm::sharp) return 0.0;
    const double kT = constants::k_B * T_;
    const std::size_t c = E_.size() / 2;  // E_[c] == 0
    double worst = 0.0;
    for (std::size_t m = 1; c + m < E_.size() && m <= c; ++m) {
        const double E = E_[c + m];
        if (E > window_kT * kT) break;
        const double lo = P_[c - m];
        if (lo < alias_floor_) continue;
        const double r = lo / (std::exp(-E / kT) * P_[c + m]) - 1.0;
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

double matched_sharp_edge(double alpha, double E_cutoff) {
    if (!(alpha > 0.0) || !(E_cutoff > 0.0)) throw InvalidConfiguration("edge: need alpha, E_c > 0");
    const double la = std::lgamma(2.0 * alpha + 1.0) + 2.0 * alpha * constants::euler_gamma;
    return E_cutoff * std::exp(la / (2.0 * alpha));
}

PEFunction pe_zero_T(double alpha, double E_cutoff, std::size_t grid_size) {
    if (!(alpha > 0.0) || !(E_cutoff > 0.0)) throw InvalidConfiguration("pe_zero_T: need alpha, E_c > 0");
    if (grid_size < 256) throw InvalidConfiguration("pe_zero_T: grid_size must be >= 256");
    // The lowest grid point leaves kMissingMass below it.
    const double log_ratio = std::log(kMissingMass) / (2.0 * alpha);
    if (alpha <= 0.01 || log_ratio < std::log(1e-300))
        throw NumericalFailure(fmt::format(
            "pe_zero_T: resolution failure, alpha = {:.4g} puts the singular region below double range", alpha));
    const double edge = E_cutoff;
    const double u0 = std::log(edge) + std::min(log_ratio, std::log(1e-6));
    const double u1 = std::log(edge);

    for (std::size_t n = grid_size; n <= kMaxZeroTGrid; n *= 2) {
        std::vector<double> E(n), P(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = u0 + (u1 - u0) * static_cast<double>(i) / static_cast<double>(n - 1);
            E[i] = i + 1 == n ? edge : std::exp(u);
            P[i] = sharp_closed_form(alpha, edge, E[i]);
        }
        PEFunction pe(alpha, 0.0, E_cutoff, edge, CutoffForm::sharp, std::move(E), std::move(P),
                      "sharp cutoff closed form");
        if (std::abs(pe.normalization() - 1.0) <= kNormTol) return pe;
    }
    throw NumericalFailure(fmt::format("pe_zero_T: normalization not reached for alpha = {:.4g}", alpha));
}

PEFunction pe_zero_T_matched(double alpha, double E_cutoff, std::size_t grid_size) {
    PEFunction raw = pe_zero_T(alpha, matched_sharp_edge(alpha, E_cutoff), grid_size);
    return PEFunction(alpha, 0.0, E_cutoff, raw.edge(), CutoffForm::sharp, raw.energies(), raw.values(),
                      "sharp cutoff closed form at the low-energy matched edge");
}

namespace {

struct FFTResult {
    std::vector<double> x;  // E / E_c
    std::vector<double> p;  // P E_c
    double ReJ_end;
    double dtau;
    double x_max;
    std::array<double, 3> tail{};  // c_3, c_4, c_5
};

// The periodic grid folds the high-energy tail sum_m c_m / x^m (m = 3, 4, 5) back onto the window:
// p(x) picks up the tail at x + 2k x_max for k >= 1. The c_m are read off at negative energies,
// where the true density is the detailed-balance image of p(-x), and the folded tail is removed.
void subtract_tail_images(FFTResult& r, double theta) {
    const std::size_t N = r.x.size();
    const double L = 2.0 * r.x_max;
    auto img = [&](int m, double x) { return gsl_sf_hzeta(m, 1.0 + x / L) / std::pow(L, m); };
    const std::size_t at[3] = {N / 16, N / 4, 7 * N / 16};  // x = -7/8, -1/2, -1/8 of x_max
    Eigen::Matrix3d A;
    Eigen::Vector3d b;
    for (int row = 0; row < 3; ++row) {
        const std::size_t i = at[row];
        for (int m = 0; m < 3; ++m) A(row, m) = img(3 + m, r.x[i]);
        b(row) = r.p[i] - std::exp(r.x[i] / theta) * r.p[N - i];
    }
    const Eigen::Vector3d c = A.colPivHouseholderQr().solve(b);
    if (!c.allFinite()) return;
    r.tail = {c(0), c(1), c(2)};
    for (std::size_t i = 0; i < N; ++i)
        r.p[i] -= c(0) * img(3, r.x[i]) + c(1) * img(4, r.x[i]) + c(2) * img(5, r.x[i]);
}

// Dimensionless P(x) with x = E/E_c and tau = E_c t / hbar, theta = k_B T / E_c.
FFTResult fft_pe(double alpha, double theta, double tau_max, std::size_t N) {
    const std::size_t M = N / 2;
    const double dtau = 2.0 * tau_max / static_cast<double>(N);
    const double dx = pi / tau_max;
    const double X = pi / dtau;

    // Quantum part of Re J from a DCT-I of the subtracted kernel.
    std::vector<double> g(M + 1), C(M + 1);
    g[0] = 1.0 / (6.0 * theta);
    for (std::size_t j = 1; j <= M; ++j) {
        const double x = static_cast<double>(j) * dx;
        g[j] = coth_minus_inverse(x / (2.0 * theta)) / (x * (1.0 + x * x));
    }
    {
        fftw_plan plan;
        {
            std::lock_guard lock(planner_mutex());
            plan = fftw_plan_r2r_1d(static_cast<int>(M + 1), g.data(), C.data(), FFTW_REDFT00, FFTW_ESTIMATE);
        }
        fftw_execute(plan);
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    const double tail = 1.0 / (2.0 * X * X) - 2.0 * theta / (3.0 * X * X * X);
    const double C0 = C[0] * dx / 2.0;

    std::vector<std::complex<double>> f(N);
    double ReJ_end = 0.0;
    for (std::size_t k = 0; k <= M; ++k) {
        const double tau = static_cast<double>(k) * dtau;
        const double em = std::exp(-tau);
        double Rq = C[k] * dx / 2.0 - C0;
        if (k > 0) Rq -= tail;
        const double Rcl = -pi * theta * (tau + std::expm1(-tau));
        const double ReJ = 2.0 * alpha * (Rcl + Rq);
        const double ImJ = -alpha * pi * (1.0 - em);
        const std::complex<double> v = std::exp(std::complex<double>(ReJ, ImJ));
        if (k < M) f[k] = v;
        if (k > 0 && k < M) f[N - k] = std::conj(v);
        if (k == M) ReJ_end = ReJ;
    }
    f[M] = std::exp(ReJ_end);  // tau = +-tau_max fold together; keep the symmetric real part

    std::vector<std::complex<double>> out(N);
    {
        fftw_plan plan;
        {
            std::lock_guard lock(planner_mutex());
            plan = fftw_plan_dft_1d(static_cast<int>(N), reinterpret_cast<fftw_complex*>(f.data()),
                                    reinterpret_cast<fftw_complex*>(out.data()), FFTW_BACKWARD, FFTW_ESTIMATE);
        }
        fftw_execute(plan);
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }

    FFTResult r;
    r.x.resize(N);
    r.p.resize(N);
    const double dE = 2.0 * pi / (static_cast<double>(N) * dtau);
    for (std::size_t i = 0; i < N; ++i) {
        const std::size_t src = (i + M) % N;
        r.x[i] = (static_cast<double>(i) - static_cast<double>(M)) * dE;
        r.p[i] = out[src].real() * dtau / (2.0 * pi);
    }
    r.ReJ_end = ReJ_end;
    r.dtau = dtau;
    r.x_max = static_cast<double>(M) * dE;
    subtract_tail_images(r, theta);
    return r;
}

}  // namespace

PEFunction pe_finite_T(double alpha, double E_cutoff, double T, std::size_t grid_size) {
    if (!(alpha > 0.0) || !(E_cutoff > 0.0)) throw InvalidConfiguration("pe_finite_T: need alpha, E_c > 0");
    if (!(T > 0.0)) throw InvalidConfiguration("pe_finite_T: requires T > 0");
    const double theta = constants::k_B * T / E_cutoff;

    // The window must hold the thermal decay of exp(J) and resolve kT and E_c in energy.
    double tau_max = std::max(40.0 / (2.0 * alpha * pi * theta), 2.0 * pi / std::min(theta, 1.0));
    auto pow2_at_least = [](double v) { return std::bit_ceil(static_cast<std::size_t>(std::ceil(v))); };
    std::size_t N = std::max({pow2_at_least(static_cast<double>(grid_size)), std::size_t{1024},
                              pow2_at_least(40.0 * tau_max), pow2_at_least(32.0 * tau_max / pi)});

    std::string last_issue = "grid limit";
    while (N <= kMaxFFTGrid) {
        FFTResult r = fft_pe(alpha, theta, tau_max, N);
        if (r.ReJ_end > -7.0) {
            last_issue = fmt::format("exp(J(t_max)) = {:.3g} > 1e-3", std::exp(r.ReJ_end));
            tau_max *= 2.0;
            N *= 2;
            continue;
        }
        const double pmax = *std::max_element(r.p.begin(), r.p.end());
        bool clean = true;
        double worst = 0.0;
        for (double& v : r.p) {
            if (v < 0.0) {
                worst = std::min(worst, v);
                if (v < -kNegativeTol * pmax) clean = false;
                v = 0.0;
            }
        }
        std::vector<double> E(N), P(N);
        for (std::size_t i = 0; i < N; ++i) {
            E[i] = r.x[i] * E_cutoff;
            P[i] = r.p[i] / E_cutoff;
        }
        PEFunction pe(alpha, T, E_cutoff, 0.0, CutoffForm::lorentzian, std::move(E), std::move(P),
                      "Lorentzian window, FFT of exp(J(t)); stand-in for the exact thermal treatment");
        // Spectral tail 2 alpha / x^3 folded back from beyond the window edge.
        // Clipped negatives measure what the folded-tail removal leaves behind.
        pe.alias_floor_ = 10.0 * std::abs(worst) / E_cutoff;
        // Tail beyond the window.
        const double xm = r.x_max;
        pe.tail_mass_ = 0.0;
        pe.tail_moment_ = 0.0;
        for (int m = 3; m <= 5; ++m) {
            pe.tail_mass_ += r.tail[m - 3] / ((m - 1) * std::pow(xm, m - 1));
            pe.tail_moment_ += r.tail[m - 3] / ((m - 2) * std::pow(xm, m - 2)) * E_cutoff;
        }
        const double norm_err = std::abs(pe.normalization() - 1.0);
        const double db = pe.detailed_balance_error();
        if (clean && norm_err <= kNormTol && db <= kBalanceTol) return pe;
        last_issue = fmt::format("normalization error {:.2e}, detailed balance error {:.2e}{}", norm_err, db,
                                 clean ? "" : fmt::format(", negative density {:.2e} of peak", worst / pmax));
        N *= 2;
    }
    throw NumericalFailure(fmt::format("pe_finite_T: not converged for alpha = {:.4g}, kT/E_c = {:.4g} ({})",
                                       alpha, theta, last_issue));
}

PEFunction environment_pe(const LineSpec& line, std::size_t grid_size) {
    const double Ec = constants::h * line.f_cutoff();
    if (line.T() <= 0.0) return pe_zero_T_matched(line.alpha(), Ec, grid_size ? grid_size : 8192);
    return pe_finite_T(line.alpha(), Ec, line.T(), grid_size ? grid_size : 1u << 18);
}

double pe_first_moment_reference(double alpha, double E_cutoff) {
    // i hbar J'(0) = 2 alpha hbar int_0^inf L(omega/omega_c) d omega, with x = hbar omega / E_c.
    gsl_function F;
    F.function = [](double x, void*) { return 1.0 / (1.0 + x * x); };
    F.params = nullptr;
    gsl_integration_workspace* w = gsl_integration_workspace_alloc(1000);
    double result = 0.0, abserr = 0.0;
    gsl_error_handler_t* old = gsl_set_error_handler_off();
    const int status = gsl_integration_qagiu(&F, 0.0, 0.0, 1e-12, 1000, w, &result, &abserr);
    gsl_set_error_handler(old);
    gsl_integration_workspace_free(w);
    if (status != GSL_SUCCESS) throw NumericalFailure("first moment quadrature failed");
    return 2.0 * alpha * result * E_cutoff;
}

void write_csv(std::ostream& out, const PEFunction& pe) {
    out << fmt::format("# alpha={:.17g}\n# T_K={:.17g}\n# cutoff_form={}\n# E_cutoff_J={:.17g}\n", pe.alpha(),
                       pe.T(), to_string(pe.form()), pe.E_cutoff());
    if (pe.form() == CutoffForm::sharp) out << fmt::format("# edge_over_Ec={:.17g}\n", pe.edge() / pe.E_cutoff());
    if (!pe.note().empty()) out << "# note=" << pe.note() << "\n";
    out << "E_over_Ec,P_times_Ec\n";
    const auto& E = pe.energies();
    const auto& P = pe.values();
    for (std::size_t i = 0; i < E.size(); ++i)
        out << fmt::format("{:.12g},{:.12g}\n", E[i] / pe.E_cutoff(), P[i] * pe.E_cutoff());
}

}  // namespace dqpt
