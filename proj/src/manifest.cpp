#include "tvlink/manifest.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tvlink/errors.hpp"
#include "tvlink/sim.hpp"

namespace tvlink {

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot read \"" + path + "\" for digesting");
    std::ostringstream buf;
    buf << in.rdbuf();
    char out[32];
    std::snprintf(out, sizeof(out), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a64(buf.str())));
    return out;
}

std::string utc_timestamp_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

std::string RunManifest::to_json_text() const {
    nlohmann::json j;
    j["command_line"] = command_line;
    j["config_digest"] = config_digest;
    j["seeds"] = seeds;
    j["version"] = version;
    nlohmann::json inputs = nlohmann::json::object();
    for (const auto& [path, digest] : input_digests)
        inputs[path] = digest;
    j["input_digests"] = std::move(inputs);
    j["timestamp_utc"] = timestamp_utc;
    return j.dump(2);
}

void write_manifest(const RunManifest& manifest, const std::string& out_path) {
    const std::string path = out_path + ".manifest.json";
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write manifest \"" + path + "\"");
    out << manifest.to_json_text() << "\n";
}

} // namespace tvlink
