#include "erank/manifest.hpp"

#include "erank/errors.hpp"
#include "erank/version.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

namespace erank {

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file for hashing: " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw IoError("sha256 init failed");
    }
    std::array<char, 65536> buf{};
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        const auto got = in.gcount();
        if (got > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(got));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest.data(), &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    hex.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        char b[3];
        std::snprintf(b, sizeof(b), "%02x", digest[i]);
        hex += b;
    }
    return hex;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["artifact"] = "erank";
    j["version"] = manifest.version.empty() ? ERANK_VERSION : manifest.version;
    j["command"] = manifest.command;
    j["timestamp_utc"] = manifest.timestamp_utc;
    j["master_seed"] = manifest.master_seed;
    j["parameters"] = manifest.parameters;
    j["inputs"] = manifest.inputs;
    j["outputs"] = manifest.outputs;
    j["run_info"] = manifest.run_info;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest: " + path.string());
    out << j.dump(2) << '\n';
}

RunManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path.string());
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ValidationError("malformed manifest " + path.string() + ": " + e.what());
    }
    RunManifest m;
    m.command = j.value("command", "");
    m.version = j.value("version", "");
    m.timestamp_utc = j.value("timestamp_utc", "");
    m.master_seed = j.value("master_seed", std::uint64_t{0});
    if (j.contains("parameters")) m.parameters = j["parameters"];
    if (j.contains("inputs")) m.inputs = j["inputs"];
    if (j.contains("outputs")) m.outputs = j["outputs"];
    if (j.contains("run_info")) m.run_info = j["run_info"];
    return m;
}

}  // namespace erank
