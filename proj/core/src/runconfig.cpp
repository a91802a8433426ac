// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#include "recam/runconfig.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "recam/error.hpp"

namespace recam {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || text.empty()) {
        fail(ErrorKind::Config, "bad value for " + key + ": '" + text + "'");
    }
    return value;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

RunConfig::RunConfig(std::map<std::string, std::string> defaults) : values_(std::move(defaults)) {
    for (const auto& [k, v] : values_) origins_[k] = "default";
}

std::string RunConfig::normalize_key(std::string key) {
    std::replace(key.begin(), key.end(), '-', '_');
    return key;
}

bool RunConfig::known(const std::string& key) const { return values_.count(normalize_key(key)) > 0; }

void RunConfig::set(const std::string& key, const std::string& value, const std::string& origin) {
    const std::string k = normalize_key(key);
    auto it = values_.find(k);
    if (it == values_.end()) fail(ErrorKind::Config, "unknown config key '" + key + "' (" + origin + ")");
    it->second = value;
    origins_[k] = origin;
}

void RunConfig::load_text(const std::string& text, const std::string& origin) {
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            fail(ErrorKind::Config, origin + ":" + std::to_string(lineno) + ": expected key = value");
        }
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), origin + ":" + std::to_string(lineno));
    }
}

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorKind::Config, "cannot read config file " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    load_text(ss.str(), path.string());
}

void RunConfig::load_env() {
    for (const auto& [key, value] : values_) {
        std::string name = "RECAM_" + key;
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::toupper(c); });
        if (const char* env = std::getenv(name.c_str())) set(key, env, "env " + name);
    }
}

const std::string& RunConfig::get(const std::string& key) const {
    auto it = values_.find(normalize_key(key));
    if (it == values_.end()) fail(ErrorKind::Config, "unknown config key '" + key + "'");
    return it->second;
}

std::string RunConfig::origin(const std::string& key) const {
    auto it = origins_.find(normalize_key(key));
    return it == origins_.end() ? std::string() : it->second;
}

int RunConfig::get_int(const std::string& key) const { return parse_number<int>(key, get(key)); }
std::uint64_t RunConfig::get_u64(const std::string& key) const { return parse_number<std::uint64_t>(key, get(key)); }
double RunConfig::get_double(const std::string& key) const { return parse_number<double>(key, get(key)); }

bool RunConfig::get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off" || v.empty()) return false;
    fail(ErrorKind::Config, "bad boolean for " + key + ": '" + v + "'");
}

std::vector<double> RunConfig::get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(get(key))) out.push_back(parse_number<double>(key, item));
    return out;
}

std::vector<int> RunConfig::get_ints(const std::string& key) const {
    std::vector<int> out;
    for (const auto& item : split_list(get(key))) out.push_back(parse_number<int>(key, item));
    return out;
}

std::string RunConfig::dump() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
}

}  // namespace recam
