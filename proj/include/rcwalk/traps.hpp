#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "rcwalk/lattice.hpp"
#include "rcwalk/stats.hpp"

namespace rcwalk {

// Axis-aligned integer rectangle [x_lo, x_hi] x [y_lo, y_hi] in Z^2.
struct Box {
  std::int64_t x_lo = 0, x_hi = 0, y_lo = 0, y_hi = 0;

  static Box around(const LatticePoint& x, std::int64_t radius);
  // "x0:x1,y0:y1"
  static Box parse(const std::string& text);
  std::string to_string() const;

  bool contains(const LatticePoint& z) const {
    return z[0] >= x_lo && z[0] <= x_hi && z[1] >= y_lo && z[1] <= y_hi;
  }
  bool on_boundary(const LatticePoint& z) const {
    return z[0] == x_lo || z[0] == x_hi || z[1] == y_lo || z[1] == y_hi;
  }
  std::int64_t width() const { return x_hi - x_lo + 1; }
  std::int64_t height() const { return y_hi - y_lo + 1; }
};

struct GoodPointResult {
  bool good = false;
  int horizon = 0;
  int reached = 0;  // longest staircase found, capped at horizon
};

// Open staircase x_0 = x, x_k = x_{k-1} + e1 +- e2 with {x_{k-1}, x_{k-1}+e1}
// and {x_{k-1}+e1, x_k} open, for k = 1..H.
GoodPointResult is_good_point(const ConductanceField& field, const LatticePoint& x, int horizon);

// True when the open cluster of x reaches the boundary of box.
bool reaches_box_boundary(const ConductanceField& field, const LatticePoint& x, const Box& box);

struct TrapReport {
  LatticePoint site;
  bool in_infinite_cluster = false;  // certified by box exit
  bool is_good = false;
  int horizon = 0;
  std::vector<LatticePoint> trap_sites;
  std::int64_t length = 0;
  std::int64_t width = 0;
  bool inconclusive = false;  // component reached the box boundary
  bool capped = false;        // search stopped once both extents reached the cap
};

struct TrapOptions {
  int horizon = 64;
  std::optional<std::int64_t> extent_cap;
};

class GoodPointCache {
 public:
  GoodPointCache(const ConductanceField& field, int horizon) : field_(field), horizon_(horizon) {}
  bool good(const LatticePoint& x);
  int horizon() const { return horizon_; }

 private:
  const ConductanceField& field_;
  int horizon_;
  std::unordered_map<LatticePoint, bool, LatticePointHash> memo_;
};

TrapReport trap_of(const ConductanceField& field, const LatticePoint& x, const Box& box,
                   const TrapOptions& options = {});
TrapReport trap_of(const ConductanceField& field, const LatticePoint& x, const Box& box, GoodPointCache& cache,
                   const TrapOptions& options = {});

struct DeadEndReport {
  LatticePoint site;
  bool is_dead_end_start = false;
  bool left_reaches_left_face = false;
  bool right_interior = false;
  bool inconclusive = false;
  std::vector<LatticePoint> dead_end_sites;
  std::int64_t depth = 0;
  std::int64_t certification_radius = 0;
};

// Left component: open cluster of x inside {z.e1 <= x.e1}; it must exit through
// the left face. Right component: open cluster inside {z.e1 >= x.e1}; it must
// stay off the box boundary. Depth = max z.e1 over the right component - x.e1.
DeadEndReport dead_end_at(const ConductanceField& field, const LatticePoint& x, const Box& box);

struct TailRow {
  std::int64_t n = 0;
  std::uint64_t count = 0;
  double prob = 0.0;
  Interval ci;
};

struct DecayFit {
  double alpha = 0.0;  // exp(slope)
  Interval alpha_ci;
  LinearFit fit;
  bool valid = false;
};

struct TrapTailTable {
  double p = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t in_cluster = 0;
  std::uint64_t bad = 0;
  std::uint64_t inconclusive = 0;
  std::uint64_t capped = 0;
  std::vector<TailRow> length_tail;
  std::vector<TailRow> width_tail;
  DecayFit length_fit;
  DecayFit width_fit;
};

struct TrapTailOptions {
  int horizon = 32;
  std::int64_t box_radius = 24;
  std::int64_t n_max = 12;
};

// Empirical P(L(0) >= n), P(W(0) >= n) for n = 1..n_max over independent fields.
TrapTailTable trap_tail_statistics(const TwoPoint& law, std::uint64_t samples, std::uint64_t seed,
                                   const TrapTailOptions& options = {});

// Log-linear regression of a tail table (rows with count > 0).
DecayFit fit_decay(const std::vector<TailRow>& tail);

struct DepthTailTable {
  std::uint64_t samples = 0;
  std::uint64_t dead_ends = 0;
  std::uint64_t inconclusive = 0;
  std::vector<TailRow> depth_tail;
  DecayFit fit;
};

DepthTailTable dead_end_depth_tail(const TwoPoint& law, std::uint64_t samples, std::uint64_t seed,
                                   std::int64_t box_radius, std::int64_t n_max);

// Sites all of whose incident edges are closed, connected to x through such sites.
struct KappaComponent {
  std::vector<LatticePoint> sites;
  bool inconclusive = false;
  std::int64_t diameter = 0;  // max l1 distance between sites
};

KappaComponent kappa_component(const ConductanceField& field, const LatticePoint& x, const Box& box);

// Per-site classification for a box; pad widens the cluster-certification box.
nlohmann::ordered_json trap_census(const ConductanceField& field, const Box& box, int horizon, std::int64_t pad);

}  // namespace rcwalk
