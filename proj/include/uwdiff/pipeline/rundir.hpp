#ifndef UWDIFF_PIPELINE_RUNDIR_HPP_
#define UWDIFF_PIPELINE_RUNDIR_HPP_

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uwdiff/core/hash.hpp"
#include "uwdiff/pipeline/config.hpp"

namespace uwdiff {

inline void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw std::runtime_error("cannot create directory " + path + ": " + ec.message());
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << content;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Content fingerprint for reproducibility reports.
inline std::string file_fingerprint(const std::string& path) {
    const std::string bytes = read_text_file(path);
    return hex64(fnv1a64(bytes.data(), bytes.size()));
}

// A run directory holds every artifact of one CLI invocation plus enough
// metadata to reproduce it: the merged config snapshot and a summary with
// output fingerprints.
class RunDir {
public:
    explicit RunDir(std::string root) : root_(std::move(root)) { ensure_dir(root_); }

    const std::string& root() const { return root_; }

    std::string path(const std::string& name) const {
        return (std::filesystem::path(root_) / name).string();
    }

    void snapshot_config(const Config& cfg) const {
        write_text_file(path("config.snapshot.txt"), cfg.dump());
    }

    void add_output(const std::string& name) { outputs_.push_back(name); }

    void write_summary(const std::string& command, nlohmann::json extra = {}) const {
        nlohmann::json outputs = nlohmann::json::object();
        for (const std::string& name : outputs_) outputs[name] = file_fingerprint(path(name));
        nlohmann::json summary = {{"command", command}, {"outputs", outputs}};
        if (!extra.is_null()) summary["details"] = std::move(extra);
        write_text_file(path("summary.json"), summary.dump(1) + "\n");
    }

private:
    std::string root_;
    std::vector<std::string> outputs_;
};

}  // namespace uwdiff

#endif  // UWDIFF_PIPELINE_RUNDIR_HPP_
