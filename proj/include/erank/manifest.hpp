#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

namespace erank {

// Reproducibility record for one CLI run: resolved configuration, master seed
// and a checksummed inventory of inputs and outputs. Rerunning the recorded
// command with the recorded configuration reproduces the outputs byte for
// byte (the manifest's own timestamp aside).
struct RunManifest {
    std::string command;        // subcommand name
    std::string version;        // artifact version
    std::string timestamp_utc;  // informational only
    std::uint64_t master_seed = 0;
    nlohmann::ordered_json parameters;  // resolved flags and config values
    nlohmann::ordered_json inputs;      // [{role, path, sha256}]
    nlohmann::ordered_json outputs;     // [{path, sha256}]
    nlohmann::ordered_json run_info;    // convergence flags, Rhat, warnings
};

std::string sha256_file(const std::filesystem::path& path);
std::string utc_timestamp();

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace erank
