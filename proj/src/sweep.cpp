#include "dqpt/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "dqpt/boundary.hpp"
#include "dqpt/constants.hpp"
#include "dqpt/errors.hpp"
#include "dqpt/inelastic.hpp"
#include "dqpt/spectroscopy.hpp"

namespace dqpt {

using json = nlohmann::json;

namespace {

constexpr double pi = std::numbers::pi;

double interp(const std::vector<double>& x, const std::vector<double>& y, double v) {
    if (v <= x.front()) return y.front();
    if (v >= x.back()) return y.back();
    const auto it = std::upper_bound(x.begin(), x.end(), v);
    const std::size_t i = static_cast<std::size_t>(it - x.begin());
    const double t = (v - x[i - 1]) / (x[i] - x[i - 1]);
    return y[i - 1] + t * (y[i] - y[i - 1]);
}

std::string num(double v) { return std::isfinite(v) ? fmt::format("{:.10g}", v) : std::string(); }

std::string clean(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

const std::vector<std::string> known_axes = {"Z_ohm", "alpha", "EJ_GHz", "EJ_over_EC", "EC_GHz",
                                             "T_K",   "flux",  "f_GHz",  "B"};
const std::vector<std::string> known_outputs = {"side", "delta", "gamma_in", "slope", "extracted"};

void check_axis_values(const SweepAxis& a) {
    for (double v : a.values) {
        bool ok = std::isfinite(v);
        if (a.name == "alpha") ok = ok && v > 0.0 && v < 10.0;
        else if (a.name == "Z_ohm") ok = ok && v > 0.0 && v < 10.0 * constants::R_Q;
        else if (a.name == "EC_GHz" || a.name == "f_GHz") ok = ok && v > 0.0;
        else if (a.name == "EJ_GHz" || a.name == "EJ_over_EC" || a.name == "T_K") ok = ok && v >= 0.0;
        if (!ok) throw InvalidConfiguration(fmt::format("sweep: axis {} value {} outside its valid range", a.name, v));
    }
}

std::vector<double> axis_values(const json& a, const std::optional<FieldTable>& table, const std::string& name) {
    if (a.contains("values")) {
        if (a["values"].is_string() && a["values"] == "table") {
            if (name != "B" || !table) throw InvalidConfiguration("sweep: 'table' values need a B axis and a table");
            return table->B;
        }
        return a["values"].get<std::vector<double>>();
    }
    const double from = a.at("from").get<double>(), to = a.at("to").get<double>();
    const int n = a.at("points").get<int>();
    if (n < 1) throw InvalidConfiguration("sweep: axis needs points >= 1");
    const std::string scale = a.value("scale", "linear");
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
        if (scale == "log") {
            if (!(from > 0.0 && to > 0.0)) throw InvalidConfiguration("sweep: log axis needs positive bounds");
            v[static_cast<std::size_t>(i)] = from * std::pow(to / from, t);
        } else if (scale == "linear") {
            v[static_cast<std::size_t>(i)] = from + (to - from) * t;
        } else {
            throw InvalidConfiguration(fmt::format("sweep: unknown axis scale '{}'", scale));
        }
    }
    return v;
}

std::map<std::string, std::string> keys_from_json(const json& j) {
    std::map<std::string, std::string> keys;
    for (const auto& [k, v] : j.items()) {
        if (v.is_number()) keys[k] = fmt::format("{:.17g}", v.get<double>());
        else if (v.is_string()) keys[k] = v.get<std::string>();
        else throw InvalidConfiguration(fmt::format("sweep: device key '{}' must be a number or string", k));
    }
    return keys;
}

std::map<std::string, std::string> keys_from_file(const std::filesystem::path& p) {
    // Reuse the config parser for validation, then keep its raw key map.
    return load_device_config(p).raw;
}

}  // namespace

double FieldTable::Z_at(double b) const { return interp(B, Z_ohm, b); }

std::optional<double> FieldTable::EJ_max_at(double b) const {
    if (EJ_max_GHz.empty()) return std::nullopt;
    return interp(B, EJ_max_GHz, b);
}

std::optional<double> FieldTable::flux_at(double b) const {
    if (!(flux_period_B > 0.0)) return std::nullopt;
    return (b - flux_offset_B) / flux_period_B;
}

std::size_t SweepSpec::points() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.values.size();
    return axes.empty() ? 0 : n;
}

SweepSpec parse_sweep_spec(const std::string& text, const std::filesystem::path& base_dir) {
    SweepSpec s;
    try {
        const json j = json::parse(text);
        for (const auto& [k, v] : j.items()) {
            static const std::vector<std::string> allowed = {"name", "device", "device_config", "axes", "outputs",
                                                             "probe_f_GHz", "slope_range_GHz", "table", "table_file", "seed",
                                                             "noise_sigma", "budget", "note"};
            if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
                throw InvalidConfiguration(fmt::format("sweep: unknown key '{}'", k));
            (void)v;
        }
        s.name = j.value("name", "sweep");
        if (j.contains("device_config")) {
            const std::filesystem::path p = base_dir / j["device_config"].get<std::string>();
            s.device_keys = keys_from_file(p);
            s.device_source = j["device_config"].get<std::string>();
        }
        if (j.contains("device"))
            for (const auto& [k, v] : keys_from_json(j["device"])) s.device_keys[k] = v;
        if (s.device_keys.empty()) throw InvalidConfiguration("sweep: needs 'device' or 'device_config'");
        if (s.device_source.empty()) s.device_source = "inline";
        device_from_keys(s.device_keys);  // validate the base device

        json table_json;
        if (j.contains("table_file")) {
            const std::filesystem::path p = base_dir / j["table_file"].get<std::string>();
            std::ifstream tin(p);
            if (!tin) throw InvalidConfiguration(fmt::format("sweep: cannot open table '{}'", p.string()));
            table_json = json::parse(tin);
        }
        if (j.contains("table")) table_json = j["table"];
        if (!table_json.is_null()) {
            const json& t = table_json;
            FieldTable ft;
            ft.B = t.at("B").get<std::vector<double>>();
            ft.Z_ohm = t.at("Z_ohm").get<std::vector<double>>();
            if (t.contains("EJ_max_GHz")) ft.EJ_max_GHz = t["EJ_max_GHz"].get<std::vector<double>>();
            ft.flux_period_B = t.value("flux_period_B", 0.0);
            ft.flux_offset_B = t.value("flux_offset_B", 0.0);
            if (ft.B.size() < 2 || ft.Z_ohm.size() != ft.B.size() ||
                (!ft.EJ_max_GHz.empty() && ft.EJ_max_GHz.size() != ft.B.size()))
                throw InvalidConfiguration("sweep: table columns must have equal length >= 2");
            for (std::size_t i = 1; i < ft.B.size(); ++i)
                if (!(ft.B[i] > ft.B[i - 1])) throw InvalidConfiguration("sweep: table B must increase");
            for (double z : ft.Z_ohm)
                if (!(z > 0.0 && z < 10.0 * constants::R_Q)) throw InvalidConfiguration("sweep: table Z outside (0, 10 R_Q)");
            for (double e : ft.EJ_max_GHz)
                if (!(e >= 0.0)) throw InvalidConfiguration("sweep: table E_J must be >= 0");
            s.table = ft;
        }

        for (const auto& a : j.at("axes")) {
            SweepAxis ax;
            ax.name = a.at("name").get<std::string>();
            if (std::find(known_axes.begin(), known_axes.end(), ax.name) == known_axes.end())
                throw InvalidConfiguration(fmt::format("sweep: unknown axis '{}'", ax.name));
            if (ax.name == "B" && !s.table) throw InvalidConfiguration("sweep: B axis needs a table");
            ax.values = axis_values(a, s.table, ax.name);
            if (ax.values.empty()) throw InvalidConfiguration(fmt::format("sweep: axis '{}' is empty", ax.name));
            check_axis_values(ax);
            s.axes.push_back(ax);
        }
        if (s.axes.empty()) throw InvalidConfiguration("sweep: needs at least one axis");
        s.outputs = j.value("outputs", std::vector<std::string>{"side", "delta", "gamma_in"});
        for (const auto& o : s.outputs)
            if (std::find(known_outputs.begin(), known_outputs.end(), o) == known_outputs.end())
                throw InvalidConfiguration(fmt::format("sweep: unknown output '{}'", o));
        s.probe_f = j.value("probe_f_GHz", 6.7) * 1e9;
        if (j.contains("slope_range_GHz")) {
            const auto r = j["slope_range_GHz"].get<std::vector<double>>();
            if (r.size() != 2 || !(r[1] > r[0])) throw InvalidConfiguration("sweep: slope_range_GHz needs [lo, hi]");
            s.slope_range = std::make_pair(r[0] * 1e9, r[1] * 1e9);
        }
        s.seed = j.value("seed", std::uint64_t{0});
        s.noise_sigma = j.value("noise_sigma", 0.0);
        s.budget = j.value("budget", std::size_t{100000});
    } catch (const json::exception& e) {
        throw InvalidConfiguration(fmt::format("sweep spec: {}", e.what()));
    }
    if (s.points() > s.budget)
        throw InvalidConfiguration(fmt::format("sweep: {} grid points exceed budget {}", s.points(), s.budget));
    return s;
}

SweepSpec load_sweep_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfiguration(fmt::format("cannot open sweep spec '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_sweep_spec(ss.str(), path.parent_path());
}

namespace {

struct PointResult {
    std::vector<std::string> cells;
    bool failed = false;
};

std::vector<std::string> output_columns(const SweepSpec& s) {
    std::vector<std::string> c = {"Z_over_RQ", "EJ_GHz", "EC_GHz", "f_cutoff_GHz"};
    for (const auto& o : s.outputs) {
        if (o == "side")
            c.insert(c.end(), {"side", "delta_lowf_boundary_over_pi", "delta_lowf_kk_over_pi", "side_from_delta"});
        else if (o == "delta")
            c.insert(c.end(), {"delta_over_pi", "delta_over_pi_per_A2"});
        else if (o == "gamma_in")
            c.insert(c.end(), {"gamma_in_MHz", "gamma_over_Delta"});
        else if (o == "slope")
            c.insert(c.end(), {"slope", "slope_stderr"});
        else if (o == "extracted")
            c.insert(c.end(), {"delta_extracted_over_pi", "gamma_extracted_MHz"});
    }
    c.push_back("flags");
    return c;
}

PointResult evaluate_point(const SweepSpec& s, const std::vector<double>& at) {
    PointResult r;
    std::vector<std::string> flags;
    auto fail = [&](const std::string& what, const std::exception& e) {
        flags.push_back(clean(what + ": " + e.what()));
        r.failed = true;
    };

    auto keys = s.device_keys;
    double flux = 0.0;
    bool flux_set = false;
    double probe = s.probe_f;
    std::optional<double> EJ_override, EJ_ratio;
    for (std::size_t k = 0; k < s.axes.size(); ++k) {
        const std::string& n = s.axes[k].name;
        const double v = at[k];
        if (n == "Z_ohm") keys["Z_ohm"] = fmt::format("{:.17g}", v);
        else if (n == "alpha") keys["Z_ohm"] = fmt::format("{:.17g}", v * constants::R_Q);
        else if (n == "EC_GHz") keys["EC_GHz"] = fmt::format("{:.17g}", v);
        else if (n == "T_K") keys["T_K"] = fmt::format("{:.17g}", v);
        else if (n == "EJ_GHz") EJ_override = v;
        else if (n == "EJ_over_EC") EJ_ratio = v;
        else if (n == "f_GHz") probe = v * 1e9;
        else if (n == "flux") {
            flux = v;
            flux_set = true;
        } else if (n == "B") {
            keys["Z_ohm"] = fmt::format("{:.17g}", s.table->Z_at(v));
            if (auto e = s.table->EJ_max_at(v)) EJ_override = *e;
            if (auto f = s.table->flux_at(v); f && !flux_set) flux = *f;
        }
    }
    if (EJ_ratio) EJ_override = *EJ_ratio * std::stod(keys.at("EC_GHz"));
    if (EJ_override) {
        keys["EJ_max_GHz"] = fmt::format("{:.17g}", *EJ_override);
        keys.erase("area_um2");
    }

    std::optional<DeviceConfig> dev;
    try {
        dev.emplace(device_from_keys(keys));
    } catch (const std::exception& e) {
        fail("device", e);
    }
    const auto cols = output_columns(s);
    if (!dev) {
        r.cells.assign(cols.size() - 1, "");
        r.cells.push_back(fmt::format("{}", fmt::join(flags, ";")));
        return r;
    }
    const LineSpec& line = dev->line;
    const JunctionSpec& j = dev->junction;
    const double E_J = flux_map(j, {flux});
    r.cells = {num(line.alpha()), num(E_J / 1e9), num(j.E_C() / 1e9), num(line.f_cutoff() / 1e9)};

    std::optional<PEFunction> pe;
    auto get_pe = [&]() -> const PEFunction& {
        if (!pe) pe.emplace(environment_pe(line));
        return *pe;
    };

    for (const auto& o : s.outputs) {
        if (o == "side") {
            const BoundarySide side = classify_side(line.alpha());
            const double f_low = std::max(0.05 * line.f_cutoff(), line.f_min());
            double db = NAN, dk = NAN;
            bool kk_valid = false;
            if (side != BoundarySide::critical) {
                try {
                    db = boundary_phase_shift(line, renormalize_junction(line, j, E_J), f_low);
                } catch (const std::exception& e) {
                    flags.push_back(clean(std::string("boundary: ") + e.what()));
                }
            }
            try {
                const auto c = second_order_phase_shift(line, j, E_J, {f_low}, &get_pe());
                dk = c.delta[0];
                kk_valid = c.flags[0] == 0;
                if (!kk_valid) flags.push_back("kk_lowf:" + phase_flags_string(c.flags[0]));
            } catch (const std::exception& e) {
                fail("kk_lowf", e);
            }
            const double d = kk_valid ? dk : db;
            std::string from_delta = "undetermined";
            if (d > 0.0) from_delta = "superconducting";
            else if (d < 0.0) from_delta = "insulating";
            r.cells.insert(r.cells.end(), {to_string(side), num(db / pi), num(dk / pi), from_delta});
        } else if (o == "delta") {
            double d = NAN, dA = NAN;
            try {
                const auto c = second_order_phase_shift(line, j, E_J, {probe}, &get_pe());
                d = c.delta_over_pi(0);
                if (c.flags[0]) flags.push_back("delta:" + phase_flags_string(c.flags[0]));
                if (j.area()) dA = d / (*j.area() * *j.area());
            } catch (const std::exception& e) {
                fail("delta", e);
            }
            r.cells.insert(r.cells.end(), {num(d), num(dA)});
        } else if (o == "gamma_in") {
            double g = NAN, p = NAN;
            try {
                p = inelastic_rate_per_spacing(line.alpha(), E_J, get_pe(), probe);
                g = p * line.Delta();
                if (p > 1.0) flags.push_back("gamma:p_above_one");
            } catch (const std::exception& e) {
                fail("gamma_in", e);
            }
            r.cells.insert(r.cells.end(), {num(g / 1e6), num(p)});
        } else if (o == "slope") {
            double sl = NAN, se = NAN;
            try {
                double lo, hi;
                if (s.slope_range) std::tie(lo, hi) = *s.slope_range;
                else {
                    lo = probe / std::sqrt(10.0);
                    hi = probe * std::sqrt(10.0);
                }
                lo = std::max(lo, line.f_min());
                hi = std::min(hi, line.f_cutoff());
                const auto res = compute_scattering(build_modes(line), j, E_J, get_pe(), lo, hi);
                const SlopeFit fit = scaling_exponent(res, lo, hi);
                sl = fit.slope;
                se = fit.stderr_slope;
            } catch (const std::exception& e) {
                fail("slope", e);
            }
            r.cells.insert(r.cells.end(), {num(sl), num(se)});
        } else if (o == "extracted") {
            double d = NAN, g = NAN;
            try {
                const int n = static_cast<int>(std::lround(probe / line.Delta()));
                PipelineOptions po;
                po.noise_sigma = s.noise_sigma;
                po.seed = s.seed;
                po.integer_flux = std::round(flux);
                DeviceConfig d2 = *dev;
                const auto rec = run_pipeline(d2, {n}, po);
                if (!rec[0].accepted) throw NumericalFailure("fit rejected");
                d = rec[0].extracted.delta_over_pi;
                g = rec[0].extracted.gamma_in;
            } catch (const std::exception& e) {
                fail("extracted", e);
            }
            r.cells.insert(r.cells.end(), {num(d), num(g / 1e6)});
        }
    }
    r.cells.push_back(flags.empty() ? "ok" : fmt::format("{}", fmt::join(flags, ";")));
    return r;
}

}  // namespace

std::string SweepTable::to_csv(const std::string& title) const {
    std::string out;
    if (!title.empty()) out += "# " + title + "\n";
    out += fmt::format("{}\n", fmt::join(columns, ","));
    for (const auto& r : rows) out += fmt::format("{}\n", fmt::join(r, ","));
    return out;
}

std::size_t SweepTable::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw InvalidConfiguration(fmt::format("sweep table: no column '{}'", name));
    return static_cast<std::size_t>(it - columns.begin());
}

double SweepTable::number(std::size_t row, const std::string& col) const {
    const std::string& c = rows.at(row).at(column(col));
    if (c.empty()) return std::numeric_limits<double>::quiet_NaN();
    return std::stod(c);
}

SweepTable run_sweep(const SweepSpec& s, unsigned jobs) {
    const std::size_t N = s.points();
    if (N > s.budget) throw InvalidConfiguration(fmt::format("sweep: {} points exceed budget {}", N, s.budget));
    SweepTable t;
    for (const auto& a : s.axes) t.columns.push_back(a.name);
    for (const auto& c : output_columns(s)) t.columns.push_back(c);

    std::vector<PointResult> results(N);
    auto coords = [&](std::size_t idx) {
        std::vector<double> at(s.axes.size());
        for (std::size_t k = s.axes.size(); k-- > 0;) {
            const std::size_t m = s.axes[k].values.size();
            at[k] = s.axes[k].values[idx % m];
            idx /= m;
        }
        return at;
    };
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < N;) results[i] = evaluate_point(s, coords(i));
    };
    jobs = std::max(1u, jobs);
    if (jobs == 1) worker();
    else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < N; ++i) {
        std::vector<std::string> row;
        for (double v : coords(i)) row.push_back(num(v));
        row.insert(row.end(), results[i].cells.begin(), results[i].cells.end());
        if (results[i].failed) ++t.failed_points;
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace dqpt
