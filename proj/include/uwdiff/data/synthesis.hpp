#ifndef UWDIFF_DATA_SYNTHESIS_HPP_
#define UWDIFF_DATA_SYNTHESIS_HPP_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "uwdiff/color/transfer.hpp"
#include "uwdiff/core/rng.hpp"
#include "uwdiff/denoiser/train.hpp"
#include "uwdiff/io/image_io.hpp"
#include "uwdiff/io/manifest.hpp"
#include "uwdiff/pipeline/rundir.hpp"

namespace uwdiff {

// Sorted image files (png/jpg/jpeg, case-insensitive) directly in `dir`.
inline std::vector<std::string> list_image_files(const std::string& dir) {
    std::vector<std::string> out;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::string ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") out.push_back(e.path().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Manifest whose records point at existing images as clean references;
// ids are the filename stems.
inline Manifest manifest_from_reference_dir(const std::string& dir, const std::string& split) {
    Manifest m;
    m.split = split;
    for (const std::string& p : list_image_files(dir)) {
        ManifestRecord r;
        r.id = std::filesystem::path(p).stem().string();
        r.reference_path = std::filesystem::absolute(p).string();
        m.records.push_back(std::move(r));
    }
    return m;
}

struct SynthesisConfig {
    uint64_t seed = 0;
    std::string split = "train";
};

struct SynthesisOutcome {
    Manifest manifest;
    int64_t clamped_pixels = 0;
};

// Builds a paired dataset: every clean reference gets a degraded twin whose
// Lab channel statistics are matched to a template drawn from the pool.
// Degraded images land in <out_dir>/degraded and the returned manifest
// (also written to <out_dir>/manifest.jsonl) references them relatively, so
// the whole output directory can be relocated. Each record stores the seed
// that picked its template, derived per index from cfg.seed.
inline SynthesisOutcome synthesize_pairs(const Manifest& references,
                                         const std::vector<std::string>& template_paths,
                                         const std::string& out_dir,
                                         const SynthesisConfig& cfg) {
    if (references.records.empty()) throw std::invalid_argument("no reference records");
    if (template_paths.empty()) throw std::invalid_argument("empty template pool");
    {
        std::set<std::string> ids;
        for (const ManifestRecord& r : references.records)
            if (!ids.insert(r.id).second)
                throw std::invalid_argument("duplicate record id: " + r.id);
    }

    ensure_dir(out_dir);
    ensure_dir((std::filesystem::path(out_dir) / "degraded").string());

    std::map<std::string, Image> template_cache;
    auto template_at = [&](size_t i) -> const Image& {
        const std::string& p = template_paths[i];
        auto it = template_cache.find(p);
        if (it == template_cache.end()) it = template_cache.emplace(p, load_image(p)).first;
        return it->second;
    };

    SynthesisOutcome out;
    out.manifest.split = cfg.split;
    for (size_t i = 0; i < references.records.size(); ++i) {
        const ManifestRecord& src = references.records[i];
        if (src.reference_path.empty())
            throw std::invalid_argument("record without reference_path: " + src.id);
        const uint64_t seed = src.has_seed ? src.seed : item_seed(cfg.seed, static_cast<uint64_t>(i));
        Rng rng(seed);
        const size_t t_idx = static_cast<size_t>(rng.uniform_below(template_paths.size()));

        const Image reference = load_image(src.reference_path);
        const TransferResult tr = transfer_color(reference, template_at(t_idx));
        out.clamped_pixels += tr.clamped_pixels;

        const std::string rel = "degraded/" + src.id + ".png";
        save_image((std::filesystem::path(out_dir) / rel).string(), tr.image);

        ManifestRecord r;
        r.id = src.id;
        r.degraded_path = rel;
        r.reference_path = std::filesystem::absolute(src.reference_path).string();
        r.template_path = std::filesystem::absolute(template_paths[t_idx]).string();
        r.seed = seed;
        r.has_seed = true;
        out.manifest.records.push_back(std::move(r));
    }
    save_manifest((std::filesystem::path(out_dir) / "manifest.jsonl").string(), out.manifest);
    return out;
}

// Loads the degraded/reference image pair of each record, resolving paths
// against the manifest location.
inline std::vector<ImagePair> load_pairs(const std::string& manifest_path) {
    const Manifest m = load_manifest(manifest_path);
    std::vector<ImagePair> pairs;
    pairs.reserve(m.records.size());
    for (const ManifestRecord& r : m.records) {
        if (r.degraded_path.empty() || r.reference_path.empty())
            throw std::runtime_error("record " + r.id + " is not a training pair");
        ImagePair p;
        p.degraded = load_image(resolve_manifest_path(manifest_path, r.degraded_path));
        p.reference = load_image(resolve_manifest_path(manifest_path, r.reference_path));
        pairs.push_back(std::move(p));
    }
    return pairs;
}

}  // namespace uwdiff

#endif  // UWDIFF_DATA_SYNTHESIS_HPP_
