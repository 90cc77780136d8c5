#ifndef UWDIFF_IO_MANIFEST_HPP_
#define UWDIFF_IO_MANIFEST_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace uwdiff {

// One dataset sample. Optional fields are empty strings / has_seed=false.
struct ManifestRecord {
    std::string id;
    std::string degraded_path;
    std::string reference_path;
    std::string template_path;
    uint64_t seed = 0;
    bool has_seed = false;
};

// JSONL file: a header object {"kind","version","split"} followed by one
// record object per line. Paths are kept verbatim; resolve against the
// manifest's directory with resolve_manifest_path.
struct Manifest {
    std::string split = "unspecified";
    std::vector<ManifestRecord> records;
};

inline constexpr const char* kManifestKind = "uwdiff-manifest";
inline constexpr int kManifestVersion = 1;

inline Manifest load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open manifest: " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty manifest: " + path);
    const nlohmann::json header = nlohmann::json::parse(line);
    if (header.value("kind", "") != kManifestKind)
        throw std::runtime_error("not a manifest: " + path);
    if (header.value("version", 0) != kManifestVersion)
        throw std::runtime_error("unsupported manifest version in " + path);

    Manifest m;
    m.split = header.value("split", "unspecified");
    size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        ManifestRecord r;
        r.id = j.at("id").get<std::string>();
        r.degraded_path = j.value("degraded_path", "");
        r.reference_path = j.value("reference_path", "");
        r.template_path = j.value("template_path", "");
        if (j.contains("seed")) {
            r.seed = j.at("seed").get<uint64_t>();
            r.has_seed = true;
        }
        m.records.push_back(std::move(r));
    }
    return m;
}

inline void save_manifest(const std::string& path, const Manifest& m) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write manifest: " + path);
    f << nlohmann::json{{"kind", kManifestKind}, {"version", kManifestVersion}, {"split", m.split}}
             .dump()
      << "\n";
    for (const ManifestRecord& r : m.records) {
        nlohmann::json j = {{"id", r.id}};
        if (!r.degraded_path.empty()) j["degraded_path"] = r.degraded_path;
        if (!r.reference_path.empty()) j["reference_path"] = r.reference_path;
        if (!r.template_path.empty()) j["template_path"] = r.template_path;
        if (r.has_seed) j["seed"] = r.seed;
        f << j.dump() << "\n";
    }
}

inline std::string resolve_manifest_path(const std::string& manifest_path,
                                         const std::string& entry) {
    const std::filesystem::path p(entry);
    if (p.is_absolute()) return entry;
    return (std::filesystem::path(manifest_path).parent_path() / p).string();
}

}  // namespace uwdiff

#endif  // UWDIFF_IO_MANIFEST_HPP_
