#include "dqpt/device_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "dqpt/errors.hpp"

namespace dqpt {

namespace {

const std::set<std::string> numeric_keys = {
    "Z_ohm", "Delta_GHz", "EJ_max_GHz", "EC_GHz", "area_um2", "T_K",
    "f_cutoff_GHz", "f_min_GHz", "kappa_ext_MHz", "kappa_bg_MHz"};
const std::set<std::string> text_keys = {"device_id", "note"};

std::string trim(std::string s) {
    auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
    return s;
}

double to_number(const std::string& key, const std::string& value) {
    double x = 0.0;
    const char* first = value.data();
    const char* last = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(first, last, x);
    if (ec != std::errc() || ptr != last || !std::isfinite(x))
        throw InvalidConfiguration(fmt::format("config: {} = '{}' is not a number", key, value));
    return x;
}

}  // namespace

DeviceConfig device_from_keys(const std::map<std::string, std::string>& keys,
                              const std::string& fallback_id) {
    std::map<std::string, double> num;
    for (const auto& [k, v] : keys) {
        if (numeric_keys.count(k)) num[k] = to_number(k, v);
        else if (!text_keys.count(k)) throw InvalidConfiguration(fmt::format("config: unknown key '{}'", k));
    }
    auto need = [&](const char* k) {
        auto it = num.find(k);
        if (it == num.end()) throw InvalidConfiguration(fmt::format("config: missing key '{}'", k));
        return it->second;
    };
    auto opt = [&](const char* k) -> std::optional<double> {
        auto it = num.find(k);
        if (it == num.end()) return std::nullopt;
        return it->second;
    };

    const double Z = need("Z_ohm");
    const double Delta = need("Delta_GHz") * 1e9;
    const double EC = need("EC_GHz") * 1e9;
    const auto EJ = opt("EJ_max_GHz");
    const auto area = opt("area_um2");
    if (!EJ && !area) throw InvalidConfiguration("config: need EJ_max_GHz or area_um2");
    JunctionSpec j = EJ ? JunctionSpec(*EJ * 1e9, EC, area) : JunctionSpec::from_area(*area, EC);

    std::optional<double> fc_override;
    if (auto v = opt("f_cutoff_GHz")) fc_override = *v * 1e9;
    const double fc = default_cutoff(Z, j.C_J(), fc_override);
    const double f_min = opt("f_min_GHz").value_or(Delta / 1e9) * 1e9;
    const double T = opt("T_K").value_or(0.0);

    const double kext = opt("kappa_ext_MHz").value_or(default_kappa_ext / 1e6) * 1e6;
    const double kbg = opt("kappa_bg_MHz").value_or(default_kappa_bg / 1e6) * 1e6;
    if (!(kext > 0.0)) throw InvalidConfiguration("config: kappa_ext_MHz must be positive");
    if (kbg < 0.0) throw InvalidConfiguration("config: kappa_bg_MHz must be >= 0");

    auto text = [&](const char* k, const std::string& dflt) {
        auto it = keys.find(k);
        return it == keys.end() ? dflt : it->second;
    };
    return DeviceConfig{text("device_id", fallback_id), text("note", ""),
                        LineSpec(Z, Delta, f_min, fc, T), j, kext, kbg, keys};
}

DeviceConfig parse_device_config(const std::string& text, const std::string& fallback_id) {
    std::map<std::string, std::string> keys;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidConfiguration(fmt::format("config line {}: expected key = value", lineno));
        std::string k = trim(line.substr(0, eq));
        std::string v = trim(line.substr(eq + 1));
        if (k.empty() || v.empty())
            throw InvalidConfiguration(fmt::format("config line {}: empty key or value", lineno));
        if (!keys.emplace(k, v).second)
            throw InvalidConfiguration(fmt::format("config line {}: duplicate key '{}'", lineno, k));
    }
    return device_from_keys(keys, fallback_id);
}

DeviceConfig load_device_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfiguration(fmt::format("cannot open config '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_device_config(ss.str(), path.stem().string());
}

}  // namespace dqpt
