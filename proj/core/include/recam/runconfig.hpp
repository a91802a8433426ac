// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace recam {

/// Flat key = value settings. Layers, lowest first: defaults, config file,
/// RECAM_* environment variables, command-line flags. Only keys present in
/// the defaults are accepted.
class RunConfig {
public:
    RunConfig() = default;
    explicit RunConfig(std::map<std::string, std::string> defaults);

    /// Dashes become underscores: "scenes-held-out" -> "scenes_held_out".
    static std::string normalize_key(std::string key);

    /// Throws ErrorKind::Config on unknown keys or malformed lines.
    void load_file(const std::filesystem::path& path);
    void load_text(const std::string& text, const std::string& origin = "<text>");
    /// Picks up RECAM_<KEY> for every known key, e.g. RECAM_SCENES_HELD_OUT.
    void load_env();
    void set(const std::string& key, const std::string& value, const std::string& origin = "flag");

    bool known(const std::string& key) const;
    const std::string& get(const std::string& key) const;
    std::string origin(const std::string& key) const;
    int get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<int> get_ints(const std::string& key) const;

    /// Resolved settings as "key = value" lines, sorted by key.
    std::string dump() const;

private:
    std::map<std::string, std::string> values_;
    std::map<std::string, std::string> origins_;
};

}  // namespace recam
