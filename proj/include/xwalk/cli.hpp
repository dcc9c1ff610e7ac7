#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace xwalk {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int {
    kExitOk = 0,
    kExitIo = 1,
    kExitCalibration = 2,
    kExitIngestQuality = 3,
    kExitEmptyAnalysis = 4,
};

// Entry point shared by the xwalk binary and the tests. args excludes argv[0].
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& p);

struct ManifestArtifact {
    std::string path;
    std::string sha256;
};

// Stage timings live under "stage_timings_ms"; every other field is a pure
// function of the inputs.
struct RunManifest {
    std::string command;
    std::vector<std::string> inputs;
    std::string config;
    std::string out_dir;
    nlohmann::json counts = nlohmann::json::object();
    nlohmann::json stage_timings_ms = nlohmann::json::object();
    std::vector<ManifestArtifact> artifacts;

    void add_artifact(const std::filesystem::path& out_dir_path, const std::string& name);
    nlohmann::json to_json() const;
};

} // namespace xwalk
