#ifndef UWDIFF_PIPELINE_CONFIG_HPP_
#define UWDIFF_PIPELINE_CONFIG_HPP_

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace uwdiff {

// Flat key/value configuration. File format: one `dotted.key = value` per
// line, `#` starts a comment, blank lines ignored. Values stay strings
// until read; typed getters validate on access.
class Config {
public:
    Config() = default;

    static Config parse(const std::string& text, const std::string& origin = "<string>") {
        Config c;
        std::istringstream in(text);
        std::string line;
        size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            const size_t eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                         ": expected key = value");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty())
                throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": empty key");
            c.values_[key] = value;
        }
        return c;
    }

    static Config load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw std::runtime_error("cannot open config: " + path);
        std::ostringstream ss;
        ss << f.rdbuf();
        return parse(ss.str(), path);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    // Later sources win; used for CLI overrides on top of a file.
    void merge_from(const Config& other) {
        for (const auto& [k, v] : other.values_) values_[k] = v;
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    std::string require_string(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw std::runtime_error("missing config key: " + key);
        return it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return parse_double(key, it->second);
    }

    int64_t get_int(const std::string& key, int64_t fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return parse_int(key, it->second);
    }

    bool get_bool(const std::string& key, bool fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        const std::string& v = it->second;
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw std::runtime_error("config key " + key + ": not a bool: " + v);
    }

    // Deterministic (sorted) rendering, suitable for snapshots.
    std::string dump() const {
        std::string out;
        for (const auto& [k, v] : values_) {
            out += k;
            out += " = ";
            out += v;
            out += "\n";
        }
        return out;
    }

    const std::map<std::string, std::string>& items() const { return values_; }

private:
    static std::string trim(const std::string& s) {
        size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
        return s.substr(b, e - b);
    }

    static double parse_double(const std::string& key, const std::string& v) {
        size_t pos = 0;
        double d = 0.0;
        try {
            d = std::stod(v, &pos);
        } catch (const std::exception&) {
            throw std::runtime_error("config key " + key + ": not a number: " + v);
        }
        if (pos != v.size())
            throw std::runtime_error("config key " + key + ": not a number: " + v);
        return d;
    }

    static int64_t parse_int(const std::string& key, const std::string& v) {
        size_t pos = 0;
        long long d = 0;
        try {
            d = std::stoll(v, &pos);
        } catch (const std::exception&) {
            throw std::runtime_error("config key " + key + ": not an integer: " + v);
        }
        if (pos != v.size())
            throw std::runtime_error("config key " + key + ": not an integer: " + v);
        return static_cast<int64_t>(d);
    }

    std::map<std::string, std::string> values_;
};

}  // namespace uwdiff

#endif  // UWDIFF_PIPELINE_CONFIG_HPP_
