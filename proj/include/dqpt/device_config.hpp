#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "dqpt/circuit.hpp"

namespace dqpt {

// A device as described by a key = value config file.
//
//   Z_ohm, Delta_GHz, EC_GHz       required
//   EJ_max_GHz and/or area_um2     at least one
//   T_K                            default 0
//   f_min_GHz                      default Delta_GHz
//   f_cutoff_GHz                   caps the 1/(2 pi Z C_J) cutoff
//   kappa_ext_MHz, kappa_bg_MHz    spectroscopy couplings, default 1 and 0.1
//   device_id, note                free text
struct DeviceConfig {
    std::string device_id;
    std::string note;
    LineSpec line;
    JunctionSpec junction;
    double kappa_ext;  // Hz
    double kappa_bg;   // Hz
    std::map<std::string, std::string> raw;  // parsed keys, for manifests
};

inline constexpr double default_kappa_ext = 1.0e6;
inline constexpr double default_kappa_bg = 0.1e6;

DeviceConfig parse_device_config(const std::string& text, const std::string& fallback_id = "device");
DeviceConfig load_device_config(const std::filesystem::path& path);

// Builds the same structure from already-split keys (used by sweep specs).
DeviceConfig device_from_keys(const std::map<std::string, std::string>& keys,
                              const std::string& fallback_id = "device");

}  // namespace dqpt
