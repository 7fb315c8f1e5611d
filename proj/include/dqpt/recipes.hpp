#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dqpt/manifest.hpp"

namespace dqpt {

inline const std::vector<std::string> figure_ids = {"fig1c", "fig1d_shape", "fig3a", "fig3b", "fig4a", "fig4b"};

// Directory with the bundled devices/, sweeps/ and tables/ (compiled-in default).
std::filesystem::path default_config_dir();

// Runs one recipe, writing CSV files and manifest.json under out_dir.
Manifest reproduce(const std::string& figure_id, const std::filesystem::path& config_dir,
                   const std::filesystem::path& out_dir, unsigned jobs = 1);

}  // namespace dqpt
