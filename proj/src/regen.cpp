#include "rcwalk/regen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace rcwalk {

HittingRecord first_hitting_time(std::span<const std::int64_t> e1, double h) {
  HittingRecord r;
  r.level = static_cast<std::int64_t>(std::floor(h));
  for (std::size_t n = 0; n < e1.size(); ++n) {
    if (e1[n] == r.level) {
      r.time = static_cast<std::int64_t>(n);
      break;
    }
  }
  return r;
}

std::vector<std::int64_t> detect_fresh_epochs(std::span<const std::int64_t> e1) {
  std::vector<std::int64_t> out;
  if (e1.empty()) return out;
  std::int64_t best = e1[0];
  for (std::size_t n = 1; n < e1.size(); ++n) {
    if (e1[n] > best) {
      out.push_back(static_cast<std::int64_t>(n));
      best = e1[n];
    }
  }
  return out;
}

RegenerationLog detect_regenerations(std::span<const std::int64_t> e1, std::int64_t confirm_margin) {
  if (confirm_margin < 0) throw InvalidArgument("confirm_margin must be >= 0");
  RegenerationLog log;
  log.fresh_epochs = detect_fresh_epochs(e1);
  if (e1.empty()) return log;
  const std::size_t n = e1.size();
  std::vector<std::int64_t> suffix_min(n + 1), suffix_max(n + 1);
  suffix_min[n] = std::numeric_limits<std::int64_t>::max();
  suffix_max[n] = std::numeric_limits<std::int64_t>::min();
  for (std::size_t i = n; i-- > 0;) {
    suffix_min[i] = std::min(suffix_min[i + 1], e1[i]);
    suffix_max[i] = std::max(suffix_max[i + 1], e1[i]);
  }
  for (auto t : log.fresh_epochs) {
    auto i = static_cast<std::size_t>(t);
    if (!(e1[i] < suffix_min[i + 1])) continue;
    bool confirmed = confirm_margin == 0 || suffix_max[i + 1] >= e1[i] + confirm_margin;
    if (confirmed)
      log.regenerations.push_back(t);
    else
      log.censored_tail = true;
  }
  return log;
}

RegenerationIncrements hyperplane_increments(const WalkPath& path, const RegenerationLog& log) {
  if (log.regenerations.size() < 2) {
    RegenerationIncrements inc;
    inc.displacement.resize(path.start.dim);
    return inc;
  }
  std::span<const std::int64_t> from_r1(log.regenerations);
  return regeneration_increments(path, from_r1.subspan(1));
}

VectorEstimate regeneration_speed(const WalkPath& path, const RegenerationLog& log, std::size_t batches) {
  if (log.regenerations.size() < 3) throw InsufficientData("need at least three confirmed regenerations");
  auto inc = hyperplane_increments(path, log);
  const std::size_t m = inc.size();
  if (batches < 2 || m < 2 * batches) return increment_ratio(inc);
  // contiguous batches absorb the 1-dependence between neighbouring increments
  std::vector<RegenerationIncrements> parts(batches);
  std::size_t per = m / batches;
  for (std::size_t b = 0; b < batches; ++b) {
    std::size_t lo = b * per, hi = b + 1 == batches ? m : lo + per;
    parts[b].displacement.resize(inc.displacement.size());
    for (std::size_t i = lo; i < hi; ++i) {
      for (std::size_t c = 0; c < inc.displacement.size(); ++c) parts[b].displacement[c].push_back(inc.displacement[c][i]);
      parts[b].duration.push_back(inc.duration[i]);
    }
  }
  auto est = pooled_increment_ratio(parts);
  est.samples = m;
  return est;
}

VectorEstimate pooled_increment_ratio(const std::vector<RegenerationIncrements>& per_replica) {
  std::size_t d = 0;
  for (const auto& r : per_replica) d = std::max(d, r.displacement.size());
  std::vector<std::vector<double>> num(d);
  std::vector<double> den;
  std::size_t total = 0;
  for (const auto& r : per_replica) {
    if (r.size() == 0) continue;
    total += r.size();
    double t = 0;
    for (double x : r.duration) t += x;
    den.push_back(t);
    for (std::size_t c = 0; c < d; ++c) {
      double s = 0;
      for (double x : r.displacement[c]) s += x;
      num[c].push_back(s);
    }
  }
  if (den.empty()) throw InsufficientData("no regeneration increments");
  VectorEstimate out;
  out.samples = total;
  for (std::size_t c = 0; c < d; ++c) {
    auto r = ratio_of_means(num[c], den);
    out.estimate.push_back(r.mean);
    out.std_error.push_back(r.se);
  }
  return out;
}

MomentReport inter_regeneration_moments(const std::vector<RegenerationLog>& logs, double lambda, double c) {
  MomentReport rep;
  rep.lambda = lambda;
  rep.c = c;
  std::vector<double> scaled, expo;
  for (const auto& log : logs) {
    for (std::size_t k = 2; k < log.regenerations.size(); ++k) {
      double dt = static_cast<double>(log.regenerations[k] - log.regenerations[k - 1]);
      scaled.push_back(lambda * lambda * dt);
      expo.push_back(std::exp(c * lambda * lambda * dt));
    }
  }
  rep.increments = scaled.size();
  if (scaled.empty()) return rep;
  rep.scaled_mean = mean_stderr(scaled);
  RunningStats s;
  for (double v : scaled) s.add(v);
  rep.scaled_variance = s.variance();
  rep.exp_moment = mean_stderr(expo);
  return rep;
}

LadderLog ladder_decomposition(const WalkPath& path, const ConductanceField& field, const LadderOptions& options) {
  if (field.dim() != 2 || !std::holds_alternative<TwoPoint>(field.law()))
    throw InvalidArgument("ladder decomposition needs a two-point field in d=2");
  if (path.start.dim != 2) throw InvalidArgument("path dimension must be 2");
  const auto pos = path.positions();
  const auto n = pos.size();
  std::vector<std::int64_t> e1(n);
  for (std::size_t i = 0; i < n; ++i) e1[i] = pos[i][0];
  const auto fresh = detect_fresh_epochs(e1);

  LadderLog log;
  std::size_t L = 0;
  std::size_t fresh_idx = 0;
  for (;;) {
    const LatticePoint& x = pos[L];
    auto de = dead_end_at(field, x, Box::around(x, options.box_radius));
    if (de.inconclusive) ++log.inconclusive;
    std::int64_t depth = de.is_dead_end_start ? de.depth : 0;
    std::int64_t t_a = 0;
    if (de.is_dead_end_start) {
      std::unordered_set<LatticePoint, LatticePointHash> A(de.dead_end_sites.begin(), de.dead_end_sites.end());
      t_a = -1;
      for (std::size_t k = L + 1; k < n; ++k) {
        if (pos[k][0] <= x[0] || !A.count(pos[k])) {
          t_a = static_cast<std::int64_t>(k - L);
          break;
        }
      }
    }
    log.ladder_times.push_back(static_cast<std::int64_t>(L));
    log.depths.push_back(depth);
    log.occupation_times.push_back(t_a);
    if (t_a < 0) {
      log.censored = true;
      break;
    }
    const std::int64_t target = x[0] + depth;
    while (fresh_idx < fresh.size() && e1[static_cast<std::size_t>(fresh[fresh_idx])] <= target) ++fresh_idx;
    if (fresh_idx >= fresh.size()) break;
    L = static_cast<std::size_t>(fresh[fresh_idx]);
  }
  return log;
}

void write_regeneration_csv(std::ostream& os, std::size_t replica, const RegenerationLog& log,
                            std::span<const std::int64_t> e1, bool header) {
  if (header) os << "replica,r_n,x_r_n_e1\n";
  for (auto t : log.regenerations) os << replica << "," << t << "," << e1[static_cast<std::size_t>(t)] << "\n";
}

void write_ladder_csv(std::ostream& os, std::size_t replica, const LadderLog& log, bool header) {
  if (header) os << "replica,l_i,depth,t_a\n";
  for (std::size_t i = 0; i < log.ladder_times.size(); ++i)
    os << replica << "," << log.ladder_times[i] << "," << log.depths[i] << "," << log.occupation_times[i] << "\n";
}

}  // namespace rcwalk
