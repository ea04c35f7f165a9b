#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rcwalk/errors.hpp"
#include "rcwalk/lattice.hpp"

namespace rcwalk::cli {

class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Flat "[section] key = value" config. Keys are stored as "section.key".
class Config {
 public:
  static Config load(const std::string& path);
  static Config parse(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;

  // Every key must be listed, or be "section.*" with the section listed as "section.*".
  void restrict_to(const std::set<std::string>& allowed) const;

  // "section.key = value" lines in key order.
  std::string canonical() const;
  std::uint64_t hash() const;

 private:
  std::map<std::string, std::string> values_;
};

std::uint64_t fnv1a64(const std::string& text);

// [law] section into a law spec; experiment.seed is the seed.
LawSpec law_from_config(const Config& cfg);

// lambda.grid = a, b, c  or  lambda.min / lambda.max / lambda.points
std::vector<double> lambda_grid(const Config& cfg);

// "%.17g"
std::string num(double v);

}  // namespace rcwalk::cli
