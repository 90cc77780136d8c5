#ifndef UWDIFF_DENOISER_CHECKPOINT_HPP_
#define UWDIFF_DENOISER_CHECKPOINT_HPP_

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uwdiff/core/hash.hpp"
#include "uwdiff/denoiser/unet.hpp"
#include "uwdiff/diffusion/schedule.hpp"

namespace uwdiff {

// Checkpoint blob: "UWDC" | u32 version | u64 meta_len | meta JSON |
// param doubles in registration order | u64 fnv1a64 of the param bytes.
// A pretty-printed copy of the metadata goes to <path>.json for humans.

inline nlohmann::json denoiser_config_json(const DenoiserConfig& c) {
    return {{"in_channels", c.in_channels},   {"out_channels", c.out_channels},
            {"base_channels", c.base_channels}, {"levels", c.levels},
            {"time_dim", c.time_dim}};
}

inline DenoiserConfig denoiser_config_from_json(const nlohmann::json& j) {
    DenoiserConfig c;
    c.in_channels = j.at("in_channels").get<int>();
    c.out_channels = j.at("out_channels").get<int>();
    c.base_channels = j.at("base_channels").get<int>();
    c.levels = j.at("levels").get<int>();
    c.time_dim = j.at("time_dim").get<int>();
    return c;
}

inline nlohmann::json schedule_json(const Schedule& s) {
    return {{"kind", s.kind()},
            {"T", s.T()},
            {"beta_start", s.beta_start()},
            {"beta_end", s.beta_end()},
            {"hash", hex64(s.hash())}};
}

inline Schedule schedule_from_json(const nlohmann::json& j) {
    Schedule s(j.at("kind").get<std::string>(), j.at("T").get<int>(),
               j.at("beta_start").get<double>(), j.at("beta_end").get<double>());
    if (j.contains("hash") && j.at("hash").get<std::string>() != hex64(s.hash()))
        throw std::runtime_error("schedule hash mismatch in checkpoint metadata");
    return s;
}

inline void save_checkpoint(const std::string& path, const Denoiser& model,
                            const Schedule& schedule, const std::string& stage,
                            int64_t step_count,
                            const nlohmann::json& extra = nlohmann::json::object()) {
    nlohmann::json meta = {
        {"format", "uwdiff-denoiser"},
        {"schedule", schedule_json(schedule)},
        {"denoiser", denoiser_config_json(model.config())},
        {"stage", stage},
        {"step_count", step_count},
        {"weight_count", model.weight_count()},
    };
    nlohmann::json names = nlohmann::json::array();
    for (size_t i = 0; i < model.param_count(); ++i) names.push_back(model.param_name(i));
    meta["param_names"] = names;
    if (!extra.empty()) meta["extra"] = extra;

    const std::string meta_str = meta.dump();

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    f.write("UWDC", 4);
    const uint32_t version = 1;
    f.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const uint64_t meta_len = meta_str.size();
    f.write(reinterpret_cast<const char*>(&meta_len), sizeof(meta_len));
    f.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));

    uint64_t checksum = 0xcbf29ce484222325ULL;
    for (size_t i = 0; i < model.param_count(); ++i) {
        const Tensor& p = model.param(i);
        const size_t bytes = static_cast<size_t>(p.numel()) * sizeof(double);
        f.write(reinterpret_cast<const char*>(p.data()),
                static_cast<std::streamsize>(bytes));
        checksum = fnv1a64(p.data(), bytes, checksum);
    }
    f.write(reinterpret_cast<const char*>(&checksum), sizeof(checksum));
    if (!f) throw std::runtime_error("short write on checkpoint: " + path);

    std::ofstream side(path + ".json");
    side << meta.dump(2) << "\n";
}

struct LoadedCheckpoint {
    Denoiser model;
    Schedule schedule;
    std::string stage;
    int64_t step_count;
    nlohmann::json meta;
};

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::string(magic, 4) != "UWDC")
        throw std::runtime_error("not a denoiser checkpoint: " + path);
    uint32_t version = 0;
    f.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != 1) throw std::runtime_error("unsupported checkpoint version");
    uint64_t meta_len = 0;
    f.read(reinterpret_cast<char*>(&meta_len), sizeof(meta_len));
    std::string meta_str(meta_len, '\0');
    f.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
    const nlohmann::json meta = nlohmann::json::parse(meta_str);

    LoadedCheckpoint out{
        Denoiser(denoiser_config_from_json(meta.at("denoiser"))),
        schedule_from_json(meta.at("schedule")),
        meta.at("stage").get<std::string>(),
        meta.at("step_count").get<int64_t>(),
        meta,
    };

    uint64_t checksum = 0xcbf29ce484222325ULL;
    for (size_t i = 0; i < out.model.param_count(); ++i) {
        Tensor& p = out.model.param(i);
        const size_t bytes = static_cast<size_t>(p.numel()) * sizeof(double);
        f.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(bytes));
        checksum = fnv1a64(p.data(), bytes, checksum);
    }
    uint64_t stored = 0;
    f.read(reinterpret_cast<char*>(&stored), sizeof(stored));
    if (!f) throw std::runtime_error("truncated checkpoint: " + path);
    if (stored != checksum) throw std::runtime_error("checkpoint checksum mismatch: " + path);
    return out;
}

}  // namespace uwdiff

#endif  // UWDIFF_DENOISER_CHECKPOINT_HPP_
