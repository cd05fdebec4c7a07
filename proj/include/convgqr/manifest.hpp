#pragma once

#include <cstdio>
#include <ctime>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "convgqr/common.hpp"

namespace convgqr {

inline constexpr const char* kToolVersion = "0.1.0";

/// Reproducibility record written next to every command's outputs. The
/// timestamp is informational and excluded from determinism comparisons;
/// digests are FNV-1a 64 over file contents (integrity bookkeeping, not
/// cryptographic).
struct RunManifest {
    std::string command;
    std::string tool_version = kToolVersion;
    std::uint64_t seed = 0;
    nlohmann::json config = nlohmann::json::object();
    std::vector<std::string> inputs;
    std::vector<std::pair<std::string, std::string>> outputs;  // path, digest
};

inline std::string content_digest(std::string_view bytes) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

inline std::string manifest_to_json(const RunManifest& manifest, bool with_timestamp = true) {
    nlohmann::json j;
    j["command"] = manifest.command;
    j["tool_version"] = manifest.tool_version;
    j["seed"] = manifest.seed;
    j["config"] = manifest.config;
    j["inputs"] = manifest.inputs;
    j["outputs"] = nlohmann::json::array();
    for (const auto& [path, digest] : manifest.outputs)
        j["outputs"].push_back({{"path", path}, {"digest", digest}});
    if (with_timestamp) {
        char ts[32];
        std::time_t now = std::time(nullptr);
        std::tm tm_utc{};
        gmtime_r(&now, &tm_utc);
        std::strftime(ts, sizeof(ts), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
        j["timestamp"] = ts;
    }
    return j.dump(2) + "\n";
}

}  // namespace convgqr
