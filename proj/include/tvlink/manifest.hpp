#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tvlink {

inline constexpr const char* kVersion = "1.0.0";

// Reproducibility record written beside every CLI output file. Digests are
// FNV-1a 64 over the raw file bytes.
struct RunManifest {
    std::string command_line;
    std::string config_digest; // digest of the --config file, empty if none
    std::vector<uint64_t> seeds;
    std::string version = kVersion;
    std::vector<std::pair<std::string, std::string>> input_digests; // path -> digest
    std::string timestamp_utc;

    std::string to_json_text() const;
};

std::string file_digest(const std::string& path);
std::string utc_timestamp_now();

// Writes <out_path>.manifest.json beside the output file.
void write_manifest(const RunManifest& manifest, const std::string& out_path);

} // namespace tvlink
