#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rcwalk::cli {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

Config from_stream(std::istream& in, const std::string& where) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(where + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  Config cfg;
  for (const auto& [section, body] : pt) {
    if (body.empty()) throw ConfigError(where + ": key '" + section + "' outside any [section]");
    for (const auto& [key, leaf] : body) cfg.set(section + "." + key, leaf.get_value<std::string>());
  }
  return cfg;
}

}  // namespace

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return from_stream(in, path);
}

Config Config::parse(const std::string& text) {
  std::istringstream in(text);
  return from_stream(in, "<config>");
}

void Config::set(const std::string& key, const std::string& value) {
  auto dot = key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == key.size() || key.find('.', dot + 1) != std::string::npos)
    throw ConfigError("config key '" + key + "' must look like section.key");
  values_[key] = trim(value);
}

std::string Config::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key " + key);
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

double Config::get_double(const std::string& key) const {
  auto s = get_string(key);
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size() || !std::isfinite(v)) throw ConfigError(key + ": expected a number, got '" + s + "'");
  return v;
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::int64_t Config::get_int(const std::string& key) const {
  auto s = get_string(key);
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) {
    // allow 1e5 style integers
    double d = get_double(key);
    if (d != std::floor(d) || std::fabs(d) > 9e15) throw ConfigError(key + ": expected an integer, got '" + s + "'");
    return static_cast<std::int64_t>(d);
  }
  return v;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t Config::get_uint(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  auto v = get_int(key);
  if (v < 0) throw ConfigError(key + " must be >= 0");
  return static_cast<std::uint64_t>(v);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  auto s = get_string(key);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + s + "'");
}

std::vector<std::string> Config::get_list(const std::string& key) const {
  std::vector<std::string> out;
  std::stringstream ss(get_string(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : get_list(key)) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != item.size() || !std::isfinite(v)) throw ConfigError(key + ": bad number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

void Config::restrict_to(const std::set<std::string>& allowed) const {
  for (const auto& [key, value] : values_) {
    if (allowed.count(key)) continue;
    auto section = key.substr(0, key.find('.'));
    if (allowed.count(section + ".*")) continue;
    throw ConfigError("unknown config key " + key);
  }
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + " = " + value + "\n";
  return out;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t Config::hash() const { return fnv1a64(canonical()); }

LawSpec law_from_config(const Config& cfg) {
  static const std::vector<std::string> keys = {"law", "c", "delta", "marginal", "p", "kappa", "d"};
  std::string spec;
  for (const auto& k : keys) {
    if (!cfg.has("law." + k)) continue;
    if (!spec.empty()) spec += ", ";
    spec += k + "=" + cfg.get_string("law." + k);
  }
  for (const auto& [key, value] : cfg.values())
    if (key.rfind("law.", 0) == 0 && std::find(keys.begin(), keys.end(), key.substr(4)) == keys.end())
      throw ConfigError("unknown law key " + key);
  if (!cfg.has("law.law")) throw ConfigError("missing config key law.law");
  try {
    auto out = parse_law_spec(spec);
    out.seed = cfg.get_uint("experiment.seed", 1);
    if (out.dim < 1 || out.dim > kMaxDim) throw ConfigError("law.d must lie in 1.." + std::to_string(kMaxDim));
    return out;
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

std::vector<double> lambda_grid(const Config& cfg) {
  std::vector<double> grid;
  if (cfg.has("lambda.grid")) {
    if (cfg.has("lambda.min") || cfg.has("lambda.max") || cfg.has("lambda.points"))
      throw ConfigError("give either lambda.grid or lambda.min/max/points, not both");
    grid = cfg.get_doubles("lambda.grid");
  } else if (cfg.has("lambda.min") || cfg.has("lambda.max") || cfg.has("lambda.points")) {
    double lo = cfg.get_double("lambda.min"), hi = cfg.get_double("lambda.max");
    auto k = cfg.get_int("lambda.points");
    if (k < 1) throw ConfigError("lambda.points must be >= 1");
    if (k == 1) {
      if (lo != hi) throw ConfigError("lambda.points = 1 needs lambda.min = lambda.max");
      grid.push_back(lo);
    } else {
      if (!(lo < hi)) throw ConfigError("lambda.min must be < lambda.max");
      for (std::int64_t i = 0; i < k; ++i) grid.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(k - 1));
    }
  }
  if (grid.empty()) throw ConfigError("empty lambda grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 0) throw ConfigError("lambda values must be >= 0");
    if (i > 0 && !(grid[i - 1] < grid[i])) throw ConfigError("lambda grid must be strictly increasing");
  }
  return grid;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace rcwalk::cli
