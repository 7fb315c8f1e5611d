#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dqpt/device_config.hpp"

namespace dqpt {

// Z(B) and optional E_J,max(B) for a single field-tuned device; linear interpolation.
struct FieldTable {
    std::vector<double> B;
    std::vector<double> Z_ohm;
    std::vector<double> EJ_max_GHz;  // empty: keep the device value
    double flux_period_B = 0.0;      // B per flux quantum; 0 disables the flux map
    double flux_offset_B = 0.0;

    double Z_at(double b) const;
    std::optional<double> EJ_max_at(double b) const;
    std::optional<double> flux_at(double b) const;
};

struct SweepAxis {
    std::string name;  // Z_ohm, alpha, EJ_GHz, EJ_over_EC, EC_GHz, T_K, flux, f_GHz, B
    std::vector<double> values;
};

struct SweepSpec {
    std::string name = "sweep";
    std::map<std::string, std::string> device_keys;
    std::string device_source;  // for manifests
    std::vector<SweepAxis> axes;
    std::vector<std::string> outputs;  // side, delta, gamma_in, slope, extracted
    double probe_f = 6.7e9;            // Hz
    std::optional<std::pair<double, double>> slope_range;  // Hz
    std::optional<FieldTable> table;
    std::uint64_t seed = 0;
    double noise_sigma = 0.0;  // for the extracted output
    std::size_t budget = 100000;

    std::size_t points() const;
};

// Parses the JSON sweep format; a "device_config" path is resolved against base_dir.
SweepSpec parse_sweep_spec(const std::string& json_text, const std::filesystem::path& base_dir = {});
SweepSpec load_sweep_spec(const std::filesystem::path& path);

struct SweepTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;  // formatted cells
    std::size_t failed_points = 0;

    std::string to_csv(const std::string& title = {}) const;
    std::size_t column(const std::string& name) const;
    double number(std::size_t row, const std::string& col) const;  // NaN when blank
};

// One row per grid point, row order fixed by the axes (last axis fastest). Failures are
// recorded in the row's flags column and never stop the sweep.
SweepTable run_sweep(const SweepSpec& spec, unsigned jobs = 1);

}  // namespace dqpt
