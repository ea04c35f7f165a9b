#include "rcwalk/traps.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "rcwalk/parallel.hpp"

namespace rcwalk {

namespace {

void require_planar(const ConductanceField& field) {
  if (field.dim() != 2) throw InvalidArgument("trap geometry is defined in d=2 only");
}

// Visited flags over a box.
class BoxMask {
 public:
  explicit BoxMask(const Box& b) : box_(b), bits_(static_cast<std::size_t>(b.width() * b.height()), 0) {}
  bool test_and_set(const LatticePoint& z) {
    auto i = static_cast<std::size_t>((z[0] - box_.x_lo) * box_.height() + (z[1] - box_.y_lo));
    if (bits_[i]) return true;
    bits_[i] = 1;
    return false;
  }

 private:
  Box box_;
  std::vector<std::uint8_t> bits_;
};

// d=2 direction order used by searches: +e1, +e2, -e1, -e2
constexpr int kRight = 0, kUp = 1, kLeft = 2, kDown = 3;

}  // namespace

Box Box::around(const LatticePoint& x, std::int64_t radius) {
  if (radius < 1) throw InvalidArgument("box radius must be >= 1");
  return Box{x[0] - radius, x[0] + radius, x[1] - radius, x[1] + radius};
}

Box Box::parse(const std::string& text) {
  Box b;
  char c1 = 0, c2 = 0, c3 = 0;
  std::istringstream ss(text);
  ss >> b.x_lo >> c1 >> b.x_hi >> c2 >> b.y_lo >> c3 >> b.y_hi;
  if (!ss || c1 != ':' || c2 != ',' || c3 != ':' || !(ss >> std::ws).eof())
    throw InvalidArgument("malformed box '" + text + "', expected x0:x1,y0:y1");
  if (b.x_hi - b.x_lo < 2 || b.y_hi - b.y_lo < 2) throw InvalidArgument("box must span at least 3 sites per axis");
  return b;
}

std::string Box::to_string() const {
  return std::to_string(x_lo) + ":" + std::to_string(x_hi) + "," + std::to_string(y_lo) + ":" + std::to_string(y_hi);
}

GoodPointResult is_good_point(const ConductanceField& field, const LatticePoint& x, int horizon) {
  require_planar(field);
  if (horizon < 0) throw InvalidArgument("horizon must be >= 0");
  GoodPointResult r;
  r.horizon = horizon;
  const int H = horizon;
  std::vector<std::uint8_t> cur(2 * H + 3, 0), nxt(2 * H + 3, 0);
  cur[H + 1] = 1;  // offset j stored at j + H + 1
  for (int k = 1; k <= H; ++k) {
    std::fill(nxt.begin(), nxt.end(), 0);
    bool any = false;
    for (int j = -(k - 1); j <= k - 1; ++j) {
      if (!cur[j + H + 1]) continue;
      LatticePoint prev{x[0] + k - 1, x[1] + j};
      if (!field.is_open(prev, 0)) continue;
      LatticePoint mid{x[0] + k, x[1] + j};
      if (field.is_open(mid, 1)) {
        nxt[j + 1 + H + 1] = 1;
        any = true;
      }
      if (field.is_open(LatticePoint{mid[0], mid[1] - 1}, 1)) {
        nxt[j - 1 + H + 1] = 1;
        any = true;
      }
    }
    if (!any) return r;
    r.reached = k;
    std::swap(cur, nxt);
  }
  r.good = true;
  return r;
}

bool reaches_box_boundary(const ConductanceField& field, const LatticePoint& x, const Box& box) {
  require_planar(field);
  if (!box.contains(x)) throw InvalidArgument("site outside box");
  if (box.on_boundary(x)) return true;
  BoxMask seen(box);
  seen.test_and_set(x);
  std::vector<LatticePoint> stack{x};
  while (!stack.empty()) {
    LatticePoint z = stack.back();
    stack.pop_back();
    for (int k : {kDown, kLeft, kUp, kRight}) {  // +e1 explored first
      if (!field.is_open_toward(z, k)) continue;
      LatticePoint y = z.neighbor(k);
      if (seen.test_and_set(y)) continue;
      if (box.on_boundary(y)) return true;
      stack.push_back(y);
    }
  }
  return false;
}

bool GoodPointCache::good(const LatticePoint& x) {
  auto it = memo_.find(x);
  if (it != memo_.end()) return it->second;
  bool g = is_good_point(field_, x, horizon_).good;
  memo_.emplace(x, g);
  return g;
}

TrapReport trap_of(const ConductanceField& field, const LatticePoint& x, const Box& box, const TrapOptions& options) {
  GoodPointCache cache(field, options.horizon);
  return trap_of(field, x, box, cache, options);
}

TrapReport trap_of(const ConductanceField& field, const LatticePoint& x, const Box& box, GoodPointCache& cache,
                   const TrapOptions& options) {
  require_planar(field);
  TrapReport rep;
  rep.site = x;
  rep.horizon = cache.horizon();
  rep.in_infinite_cluster = reaches_box_boundary(field, x, box);
  if (!rep.in_infinite_cluster) return rep;
  rep.is_good = cache.good(x);
  if (rep.is_good) return rep;
  if (box.on_boundary(x)) {
    rep.inconclusive = true;
    rep.trap_sites.push_back(x);
    return rep;
  }
  BoxMask seen(box);
  seen.test_and_set(x);
  std::deque<LatticePoint> queue{x};
  std::int64_t min1 = x[0], max1 = x[0], min2 = x[1], max2 = x[1];
  while (!queue.empty()) {
    LatticePoint z = queue.front();
    queue.pop_front();
    rep.trap_sites.push_back(z);
    min1 = std::min(min1, z[0]);
    max1 = std::max(max1, z[0]);
    min2 = std::min(min2, z[1]);
    max2 = std::max(max2, z[1]);
    if (options.extent_cap && max1 - min1 >= *options.extent_cap && max2 - min2 >= *options.extent_cap) {
      rep.capped = true;
      break;
    }
    bool stop = false;
    for (int k = 0; k < 4 && !stop; ++k) {
      if (!field.is_open_toward(z, k)) continue;
      LatticePoint y = z.neighbor(k);
      if (seen.test_and_set(y)) continue;
      if (cache.good(y)) continue;
      if (box.on_boundary(y)) {
        rep.inconclusive = true;
        stop = true;
        break;
      }
      queue.push_back(y);
    }
    if (stop) break;
  }
  rep.length = max1 - min1;
  rep.width = max2 - min2;
  return rep;
}

DeadEndReport dead_end_at(const ConductanceField& field, const LatticePoint& x, const Box& box) {
  require_planar(field);
  if (!box.contains(x) || box.on_boundary(x)) throw InvalidArgument("site must be interior to the box");
  DeadEndReport rep;
  rep.site = x;
  rep.certification_radius = std::min({x[0] - box.x_lo, box.x_hi - x[0], x[1] - box.y_lo, box.y_hi - x[1]});

  bool touched = false;
  {
    BoxMask seen(box);
    seen.test_and_set(x);
    std::vector<LatticePoint> stack{x};
    while (!stack.empty() && !rep.left_reaches_left_face) {
      LatticePoint z = stack.back();
      stack.pop_back();
      for (int k : {kRight, kDown, kUp, kLeft}) {  // -e1 explored first
        if (k == kRight && z[0] + 1 > x[0]) continue;
        if (!field.is_open_toward(z, k)) continue;
        LatticePoint y = z.neighbor(k);
        if (seen.test_and_set(y)) continue;
        if (y[0] == box.x_lo) {
          rep.left_reaches_left_face = true;
          break;
        }
        if (box.on_boundary(y)) {
          touched = true;
          continue;
        }
        stack.push_back(y);
      }
    }
  }
  if (!rep.left_reaches_left_face) {
    rep.inconclusive = touched;
    return rep;
  }

  BoxMask seen(box);
  seen.test_and_set(x);
  std::vector<LatticePoint> stack{x};
  std::vector<LatticePoint> sites;
  std::int64_t depth = 0;
  bool interior = true;
  while (!stack.empty() && interior) {
    LatticePoint z = stack.back();
    stack.pop_back();
    sites.push_back(z);
    depth = std::max(depth, z[0] - x[0]);
    for (int k : {kLeft, kDown, kUp, kRight}) {
      if (k == kLeft && z[0] - 1 < x[0]) continue;
      if (!field.is_open_toward(z, k)) continue;
      LatticePoint y = z.neighbor(k);
      if (seen.test_and_set(y)) continue;
      if (box.on_boundary(y)) {
        interior = false;
        break;
      }
      stack.push_back(y);
    }
  }
  rep.right_interior = interior;
  if (interior) {
    rep.is_dead_end_start = true;
    std::sort(sites.begin(), sites.end());
    rep.dead_end_sites = std::move(sites);
    rep.depth = depth;
  }
  return rep;
}

DecayFit fit_decay(const std::vector<TailRow>& tail) {
  DecayFit f;
  std::vector<double> xs, ys;
  for (const auto& row : tail) {
    if (row.count == 0) continue;
    xs.push_back(static_cast<double>(row.n));
    ys.push_back(std::log(row.prob));
  }
  if (xs.size() < 3) return f;
  f.fit = fit_line(xs, ys);
  f.alpha = std::exp(f.fit.slope);
  double z = 1.959963984540054;
  f.alpha_ci = {std::exp(f.fit.slope - z * f.fit.slope_se), std::exp(f.fit.slope + z * f.fit.slope_se)};
  f.valid = true;
  return f;
}

namespace {

std::vector<TailRow> tail_rows(const std::vector<std::int64_t>& values, std::int64_t n_max) {
  std::vector<TailRow> rows;
  const auto total = static_cast<std::uint64_t>(values.size());
  for (std::int64_t n = 1; n <= n_max; ++n) {
    TailRow row;
    row.n = n;
    for (auto v : values)
      if (v >= n) ++row.count;
    row.prob = total ? static_cast<double>(row.count) / static_cast<double>(total) : 0.0;
    row.ci = wilson_interval(row.count, total);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TrapTailTable trap_tail_statistics(const TwoPoint& law, std::uint64_t samples, std::uint64_t seed,
                                   const TrapTailOptions& options) {
  validate_law(law);
  struct Sample {
    std::int64_t length = 0, width = 0;
    bool in_cluster = false, bad = false, inconclusive = false, capped = false;
  };
  std::vector<Sample> out(samples);
  const LatticePoint origin{0, 0};
  const Box box = Box::around(origin, options.box_radius);
  parallel_for(samples, [&](std::size_t s) {
    ConductanceField field(law, 2, derive_seed(seed, StreamTag::Field, s));
    TrapOptions topt;
    topt.horizon = options.horizon;
    topt.extent_cap = options.n_max;
    auto rep = trap_of(field, origin, box, topt);
    Sample smp;
    smp.in_cluster = rep.in_infinite_cluster;
    smp.bad = rep.in_infinite_cluster && !rep.is_good;
    smp.inconclusive = rep.inconclusive;
    smp.capped = rep.capped;
    smp.length = rep.capped ? std::max<std::int64_t>(rep.length, options.n_max) : rep.length;
    smp.width = rep.capped ? std::max<std::int64_t>(rep.width, options.n_max) : rep.width;
    out[s] = smp;
  });
  TrapTailTable t;
  t.p = law.p;
  t.samples = samples;
  std::vector<std::int64_t> lengths, widths;
  for (const auto& s : out) {
    t.in_cluster += s.in_cluster;
    t.bad += s.bad;
    t.inconclusive += s.inconclusive;
    t.capped += s.capped;
    lengths.push_back(s.length);
    widths.push_back(s.width);
  }
  t.length_tail = tail_rows(lengths, options.n_max);
  t.width_tail = tail_rows(widths, options.n_max);
  t.length_fit = fit_decay(t.length_tail);
  t.width_fit = fit_decay(t.width_tail);
  return t;
}

DepthTailTable dead_end_depth_tail(const TwoPoint& law, std::uint64_t samples, std::uint64_t seed,
                                   std::int64_t box_radius, std::int64_t n_max) {
  validate_law(law);
  std::vector<std::int64_t> depth(samples, 0);
  std::vector<std::uint8_t> dead(samples, 0), inc(samples, 0);
  const LatticePoint origin{0, 0};
  const Box box = Box::around(origin, box_radius);
  parallel_for(samples, [&](std::size_t s) {
    ConductanceField field(law, 2, derive_seed(seed, StreamTag::Field, s));
    auto rep = dead_end_at(field, origin, box);
    depth[s] = rep.depth;
    dead[s] = rep.is_dead_end_start;
    inc[s] = rep.inconclusive;
  });
  DepthTailTable t;
  t.samples = samples;
  for (std::size_t s = 0; s < samples; ++s) {
    t.dead_ends += dead[s];
    t.inconclusive += inc[s];
  }
  t.depth_tail = tail_rows(depth, n_max);
  t.fit = fit_decay(t.depth_tail);
  return t;
}

KappaComponent kappa_component(const ConductanceField& field, const LatticePoint& x, const Box& box) {
  require_planar(field);
  if (!box.contains(x)) throw InvalidArgument("site outside box");
  auto surrounded = [&](const LatticePoint& z) {
    for (int k = 0; k < 4; ++k)
      if (field.is_open_toward(z, k)) return false;
    return true;
  };
  KappaComponent out;
  if (!surrounded(x)) return out;
  BoxMask seen(box);
  seen.test_and_set(x);
  std::deque<LatticePoint> queue{x};
  while (!queue.empty()) {
    LatticePoint z = queue.front();
    queue.pop_front();
    out.sites.push_back(z);
    if (box.on_boundary(z)) {
      out.inconclusive = true;
      break;
    }
    for (int k = 0; k < 4; ++k) {
      LatticePoint y = z.neighbor(k);
      if (seen.test_and_set(y)) continue;
      if (surrounded(y)) queue.push_back(y);
    }
  }
  std::sort(out.sites.begin(), out.sites.end());
  for (std::size_t i = 0; i < out.sites.size(); ++i)
    for (std::size_t j = i + 1; j < out.sites.size(); ++j)
      out.diameter = std::max(out.diameter, out.sites[i].l1_distance(out.sites[j]));
  return out;
}

nlohmann::ordered_json trap_census(const ConductanceField& field, const Box& box, int horizon, std::int64_t pad) {
  require_planar(field);
  if (pad < 1) throw InvalidArgument("census pad must be >= 1");
  const Box outer{box.x_lo - pad, box.x_hi + pad, box.y_lo - pad, box.y_hi + pad};
  GoodPointCache cache(field, horizon);
  nlohmann::ordered_json sites = nlohmann::ordered_json::array();
  std::uint64_t n_good = 0, n_bad = 0, n_finite = 0, n_dead = 0, n_inconclusive = 0;
  for (std::int64_t i = box.x_lo; i <= box.x_hi; ++i) {
    for (std::int64_t j = box.y_lo; j <= box.y_hi; ++j) {
      LatticePoint z{i, j};
      TrapOptions opt;
      opt.horizon = horizon;
      auto trap = trap_of(field, z, outer, cache, opt);
      auto dead = dead_end_at(field, z, outer);
      std::string cls = !trap.in_infinite_cluster ? "finite_cluster" : (trap.is_good ? "good" : "bad");
      if (cls == "good") ++n_good;
      if (cls == "bad") ++n_bad;
      if (cls == "finite_cluster") ++n_finite;
      if (dead.is_dead_end_start) ++n_dead;
      if (trap.inconclusive || dead.inconclusive) ++n_inconclusive;
      nlohmann::ordered_json s;
      s["x"] = i;
      s["y"] = j;
      s["class"] = cls;
      s["trap_length"] = trap.length;
      s["trap_width"] = trap.width;
      s["trap_size"] = trap.trap_sites.size();
      s["dead_end"] = dead.is_dead_end_start;
      s["depth"] = dead.depth;
      s["inconclusive"] = trap.inconclusive || dead.inconclusive;
      sites.push_back(std::move(s));
    }
  }
  nlohmann::ordered_json out;
  out["box"] = box.to_string();
  out["horizon"] = horizon;
  out["pad"] = pad;
  out["summary"] = {{"good", n_good},
                    {"bad", n_bad},
                    {"finite_cluster", n_finite},
                    {"dead_end_starts", n_dead},
                    {"inconclusive", n_inconclusive}};
  out["sites"] = std::move(sites);
  return out;
}

}  // namespace rcwalk
