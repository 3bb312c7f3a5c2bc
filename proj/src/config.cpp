#include "batfit/config.hpp"

#include <cstdlib>
#include <fstream>
#include <istream>
#include <stdexcept>

namespace batfit {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

KeyValueConfig parse_config(std::istream& in) {
  KeyValueConfig cfg;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line without '=': " + t);
    cfg[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return parse_config(in);
}

double config_double(const KeyValueConfig& cfg, const std::string& key,
                     double fallback) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  char* end = nullptr;
  const double v = std::strtod(it->second.c_str(), &end);
  if (end != it->second.c_str() + it->second.size())
    throw std::runtime_error("config key " + key + ": not a number: " + it->second);
  return v;
}

long config_long(const KeyValueConfig& cfg, const std::string& key,
                 long fallback) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  char* end = nullptr;
  const long v = std::strtol(it->second.c_str(), &end, 10);
  if (end != it->second.c_str() + it->second.size())
    throw std::runtime_error("config key " + key + ": not an integer: " + it->second);
  return v;
}

std::string config_string(const KeyValueConfig& cfg, const std::string& key,
                          const std::string& fallback) {
  auto it = cfg.find(key);
  return it == cfg.end() ? fallback : it->second;
}

}  // namespace batfit
