#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "rcwalk/errors.hpp"
#include "rcwalk/rng.hpp"

namespace rcwalk {

inline constexpr int kMaxDim = 4;

struct LatticePoint {
  std::array<std::int64_t, kMaxDim> coords{};
  int dim = 0;

  LatticePoint() = default;
  explicit LatticePoint(int d);
  LatticePoint(std::initializer_list<std::int64_t> c);

  std::int64_t operator[](int i) const { return coords[i]; }
  std::int64_t& operator[](int i) { return coords[i]; }

  // Neighbour in direction k, with 0..d-1 = +e_1..+e_d and d..2d-1 = -e_1..-e_d.
  LatticePoint neighbor(int k) const;
  void move(int k);

  std::int64_t l1_distance(const LatticePoint& other) const;
  std::string to_string() const;

  friend bool operator==(const LatticePoint&, const LatticePoint&) = default;
  friend auto operator<=>(const LatticePoint& a, const LatticePoint& b) {
    if (auto c = a.dim <=> b.dim; c != 0) return c;
    return a.coords <=> b.coords;
  }
};

struct LatticePointHash {
  std::size_t operator()(const LatticePoint& p) const noexcept;
};

inline int direction_axis(int k, int d) { return k < d ? k : k - d; }
inline int direction_sign(int k, int d) { return k < d ? 1 : -1; }
inline int opposite_direction(int k, int d) { return k < d ? k + d : k - d; }

// Canonical edge: lexicographically smaller endpoint plus positive axis.
struct Edge {
  LatticePoint base;
  int axis = 0;  // 0-based

  LatticePoint head() const { return base.neighbor(axis); }

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct EdgeHash {
  std::size_t operator()(const Edge& e) const noexcept;
};

Edge canonical_edge(const LatticePoint& a, const LatticePoint& b);
// Edge incident to x in direction k.
Edge incident_edge(const LatticePoint& x, int k);

struct Homogeneous {
  double c = 1.0;
};

enum class Marginal { TwoPointSym, UniformInterval };

struct UniformElliptic {
  double delta = 0.0;
  Marginal marginal = Marginal::TwoPointSym;
};

struct TwoPoint {
  double p = 0.5;
  double kappa = 1.0;
};

using EnvironmentLaw = std::variant<Homogeneous, UniformElliptic, TwoPoint>;

void validate_law(const EnvironmentLaw& law);
std::string law_name(const EnvironmentLaw& law);
// Inverse CDF; u in [0,1).
double sample_conductance(const EnvironmentLaw& law, double u);
double law_cdf(const EnvironmentLaw& law, double w);
// Ratio of the largest to the smallest conductance the law can emit.
double ellipticity_ratio(const EnvironmentLaw& law);

// Flat key-value description: "law=two_point, p=0.95, kappa=0.001, seed=42, d=2".
struct LawSpec {
  EnvironmentLaw law;
  int dim = 2;
  std::uint64_t seed = 0;
};

std::string format_law_spec(const LawSpec& spec);
LawSpec parse_law_spec(const std::string& text);

using EdgeOverrides = std::unordered_map<Edge, double, EdgeHash>;

class ConductanceField {
 public:
  ConductanceField(EnvironmentLaw law, int dim, std::uint64_t seed);

  double conductance(const Edge& e) const { return conductance(e.base, e.axis); }
  double conductance(const LatticePoint& base, int axis) const;
  // Conductance of the edge at x in direction k (0..2d-1).
  double conductance_toward(const LatticePoint& x, int k) const;
  // Open iff the edge carries conductance exactly 1 (two-point laws: drawn as 1).
  bool is_open(const LatticePoint& base, int axis) const;
  bool is_open_toward(const LatticePoint& x, int k) const;

  const EnvironmentLaw& law() const { return law_; }
  int dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }
  bool kappa_projected() const { return projected_; }

  // Copy with the given edges pinned to fixed positive values.
  ConductanceField with_overrides(const EdgeOverrides& pins) const;

  friend ConductanceField zero_kappa_projection(const ConductanceField& field);

 private:
  double draw(const LatticePoint& base, int axis) const;
  bool drawn_open(const LatticePoint& base, int axis) const;

  EnvironmentLaw law_;
  int dim_;
  std::uint64_t seed_;
  bool projected_ = false;
  int kind_ = 0;
  double a_ = 1.0;  // law parameters cached for the hot path
  double b_ = 1.0;
  double c_ = 1.0;
  std::shared_ptr<const EdgeOverrides> overrides_;
};

ConductanceField zero_kappa_projection(const ConductanceField& field);

// Hash of (seed, axis, coordinates) mapped to [0,1).
double edge_uniform(std::uint64_t seed, const LatticePoint& base, int axis);

}  // namespace rcwalk
