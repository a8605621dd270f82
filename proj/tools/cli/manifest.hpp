#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>

namespace splatfeat::cli {

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct Common {
    std::uint64_t seed = 0;
    int threads = 0;  // resolved before the command runs
    std::string precision = "f32";
    std::filesystem::path out = ".";
};

/// Run record written next to the outputs as <out>/<command>.manifest.json.
class RunManifest {
public:
    RunManifest(std::string command, const Common& common);

    void input(const std::string& role, const std::filesystem::path& path);
    void output(const std::string& role, const std::filesystem::path& path);
    nlohmann::json& config() { return doc_["config"]; }
    nlohmann::json& results() { return doc_["results"]; }

    /// Hashes the outputs, stamps the wall time and writes the file.
    const nlohmann::json& finish();
    std::filesystem::path path() const;

private:
    std::string command_;
    std::filesystem::path out_;
    nlohmann::json doc_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace splatfeat::cli
