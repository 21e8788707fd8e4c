// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0
//
// Flat `key = value` config files. CLI flags override file values; the
// effective configuration is echoed into every metric log header.

#pragma once

#include <map>
#include <string>

namespace uniloss {

using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config_text(const std::string& text);
ConfigMap parse_config_file(const std::string& path);

double config_double(const ConfigMap& m, const std::string& key, double fallback);
long config_long(const ConfigMap& m, const std::string& key, long fallback);
std::string config_string(const ConfigMap& m, const std::string& key,
                          const std::string& fallback);

}  // namespace uniloss
