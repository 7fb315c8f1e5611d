#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace dqpt {

inline constexpr const char* version = "1.0.0";

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

// Writes text to dir/name and returns its hash.
std::string write_text_file(const std::filesystem::path& dir, const std::string& name, const std::string& text);

struct Manifest {
    std::string recipe;
    std::string label;
    nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
    nlohmann::ordered_json provenance = nlohmann::ordered_json::object();
    std::vector<std::pair<std::string, std::string>> inputs;  // path, sha256
    std::vector<std::pair<std::string, std::string>> files;   // name, sha256

    // Hash over the output file hashes in order; independent of wall clock and paths.
    std::string content_hash() const;
    std::string to_json() const;
};

nlohmann::ordered_json module_versions();

}  // namespace dqpt
