// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0

#include "uniloss/config.hpp"

#include <fstream>
#include <sstream>

#include "uniloss/error.hpp"

namespace uniloss {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
    ConfigMap out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        require(eq != std::string::npos,
                "config line " + std::to_string(lineno) + " is not `key = value`: " + stripped);
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        require(!key.empty(), "config line " + std::to_string(lineno) + " has an empty key");
        out[key] = value;
    }
    return out;
}

ConfigMap parse_config_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

double config_double(const ConfigMap& m, const std::string& key, double fallback) {
    auto it = m.find(key);
    if (it == m.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw Error("config key `" + key + "` is not a number: " + it->second);
    }
}

long config_long(const ConfigMap& m, const std::string& key, long fallback) {
    auto it = m.find(key);
    if (it == m.end()) return fallback;
    try {
        return std::stol(it->second);
    } catch (const std::exception&) {
        throw Error("config key `" + key + "` is not an integer: " + it->second);
    }
}

std::string config_string(const ConfigMap& m, const std::string& key,
                          const std::string& fallback) {
    auto it = m.find(key);
    return it == m.end() ? fallback : it->second;
}

}  // namespace uniloss
