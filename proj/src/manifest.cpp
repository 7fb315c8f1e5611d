#include "dqpt/manifest.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "dqpt/errors.hpp"

namespace dqpt {

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw NumericalFailure("sha256 failed");
    std::string hex;
    hex.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidConfiguration(fmt::format("cannot read '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

std::string write_text_file(const std::filesystem::path& dir, const std::string& name, const std::string& text) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw InvalidConfiguration(fmt::format("cannot write '{}'", (dir / name).string()));
    out << text;
    return sha256_hex(text);
}

std::string Manifest::content_hash() const {
    std::string all;
    for (const auto& [name, hash] : files) all += name + ':' + hash + '\n';
    return sha256_hex(all);
}

nlohmann::ordered_json module_versions() {
    nlohmann::ordered_json m;
    for (const char* name : {"circuit-core", "pe-solver", "boundary-response", "inelastic-scattering", "fock-oracle",
                             "spectroscopy-pipeline", "cli-workbench"})
        m[name] = version;
    return m;
}

std::string Manifest::to_json() const {
    nlohmann::ordered_json j;
    j["recipe"] = recipe;
    j["label"] = label;
    j["version"] = version;
    j["modules"] = module_versions();
    j["parameters"] = parameters;
    j["provenance"] = provenance;
    j["inputs"] = nlohmann::ordered_json::array();
    for (const auto& [p, h] : inputs) j["inputs"].push_back({{"path", p}, {"sha256", h}});
    j["files"] = nlohmann::ordered_json::array();
    for (const auto& [n, h] : files) j["files"].push_back({{"name", n}, {"sha256", h}});
    j["content_hash"] = content_hash();
    return j.dump(2) + "\n";
}

}  // namespace dqpt
