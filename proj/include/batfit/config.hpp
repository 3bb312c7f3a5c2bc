#pragma once

#include <map>
#include <string>

namespace batfit {

// Flat key=value configuration text; '#' starts a comment line.
using KeyValueConfig = std::map<std::string, std::string>;

KeyValueConfig parse_config(std::istream& in);
KeyValueConfig load_config_file(const std::string& path);

double config_double(const KeyValueConfig& cfg, const std::string& key,
                     double fallback);
long config_long(const KeyValueConfig& cfg, const std::string& key,
                 long fallback);
std::string config_string(const KeyValueConfig& cfg, const std::string& key,
                          const std::string& fallback);

}  // namespace batfit
