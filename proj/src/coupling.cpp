#include "rcwalk/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rcwalk/parallel.hpp"

namespace rcwalk {

CoupledEnsemble::CoupledEnsemble(std::vector<BiasedKernel> kernels, const LatticePoint& start, bool keep_paths)
    : kernels_(std::move(kernels)), start_(start), keep_(keep_paths) {
  if (kernels_.empty()) throw InvalidArgument("coupled ensemble needs at least one kernel");
  for (const auto& k : kernels_)
    if (k.dim() != start.dim) throw InvalidArgument("coupled kernels must share the start dimension");
  positions_.assign(kernels_.size(), start);
  last_.assign(kernels_.size(), -1);
  if (keep_) steps_by_member_.resize(kernels_.size());
}

void CoupledEnsemble::step(double u) {
  if (!(u > 0.0 && u <= 1.0)) throw InvalidArgument("uniform must lie in (0,1]");
  for (std::size_t i = 0; i < kernels_.size(); ++i) {
    int k = kernels_[i].step_distribution(positions_[i]).select(u);
    last_[i] = k;
    positions_[i].move(k);
    if (keep_) steps_by_member_[i].push_back(static_cast<std::uint8_t>(k));
  }
  if (keep_) uniforms_.push_back(u);
  ++steps_;
}

WalkPath CoupledEnsemble::path(std::size_t i) const {
  if (!keep_) throw InvalidArgument("ensemble was built without path storage");
  WalkPath p;
  p.start = start_;
  p.steps = steps_by_member_[i];
  p.uniforms = uniforms_;
  return p;
}

double y_threshold_beta(double lambda_s, double beta, int d) {
  if (!(lambda_s > 0)) throw InvalidArgument("lambda_s must be positive");
  if (!(beta >= 1)) throw InvalidArgument("beta must be >= 1");
  return 1.0 / (1.0 + (2.0 * d - 1.0) * beta * std::exp(-lambda_s));
}

double y_threshold(double lambda_s, double delta, int d) {
  if (!(delta >= 0 && delta < 1)) throw InvalidArgument("delta must lie in [0,1)");
  return y_threshold_beta(lambda_s, (1.0 + delta) / (1.0 - delta), d);
}

double y_drift_floor(double beta, int d) { return std::log(beta) + std::log(2.0 * d - 1.0); }

AuxiliaryYWalk::AuxiliaryYWalk(double ls, double b, int d)
    : lambda_s(ls), beta(b), threshold(y_threshold_beta(ls, b, d)) {}

int AuxiliaryYWalk::push(double u) {
  int inc = u <= threshold ? 1 : -1;
  values.push_back(values.back() + inc);
  return inc;
}

SuperRegenerationLog detect_super_regenerations(std::span<const std::int64_t> y, std::int64_t horizon,
                                                std::int64_t confirm_margin) {
  if (horizon < 0 || static_cast<std::size_t>(horizon) >= y.size())
    throw InvalidArgument("Y walk shorter than the horizon");
  if (confirm_margin < 0) throw InvalidArgument("confirm_margin must be >= 0");
  const auto h = static_cast<std::size_t>(horizon);
  std::vector<std::int64_t> prefix_max(h + 1), suffix_min(h + 2), suffix_max(h + 2);
  prefix_max[0] = y[0];
  for (std::size_t i = 1; i <= h; ++i) prefix_max[i] = std::max(prefix_max[i - 1], y[i]);
  suffix_min[h + 1] = std::numeric_limits<std::int64_t>::max();
  suffix_max[h + 1] = std::numeric_limits<std::int64_t>::min();
  for (std::size_t i = h + 1; i-- > 0;) {
    suffix_min[i] = std::min(suffix_min[i + 1], y[i]);
    suffix_max[i] = std::max(suffix_max[i + 1], y[i]);
  }
  SuperRegenerationLog log;
  for (std::size_t n = 1; n <= h; ++n) {
    bool climb = (n < 2 || prefix_max[n - 2] < y[n - 1]) && y[n - 1] < y[n];
    if (!climb || !(y[n] < suffix_min[n + 1])) continue;
    bool confirmed = confirm_margin == 0 || suffix_max[n + 1] >= y[n] + confirm_margin;
    if (confirmed)
      log.times.push_back(static_cast<std::int64_t>(n));
    else
      log.censored_tail = true;
  }
  return log;
}

void RegenerationIncrements::append(const RegenerationIncrements& o) {
  if (displacement.empty()) displacement.resize(o.displacement.size());
  for (std::size_t c = 0; c < o.displacement.size(); ++c)
    displacement[c].insert(displacement[c].end(), o.displacement[c].begin(), o.displacement[c].end());
  duration.insert(duration.end(), o.duration.begin(), o.duration.end());
}

RegenerationIncrements regeneration_increments(const WalkPath& path, std::span<const std::int64_t> times) {
  const int d = path.start.dim;
  RegenerationIncrements inc;
  inc.displacement.resize(d);
  if (times.size() < 2) return inc;
  // positions at the requested times only
  std::vector<LatticePoint> at;
  at.reserve(times.size());
  LatticePoint x = path.start;
  std::size_t next = 0;
  for (std::size_t n = 0; n <= path.steps.size() && next < times.size(); ++n) {
    while (next < times.size() && static_cast<std::size_t>(times[next]) == n) {
      at.push_back(x);
      ++next;
    }
    if (n < path.steps.size()) x.move(path.steps[n]);
  }
  if (at.size() != times.size()) throw InvalidArgument("regeneration time beyond path length");
  for (std::size_t k = 1; k < at.size(); ++k) {
    for (int c = 0; c < d; ++c) inc.displacement[c].push_back(static_cast<double>(at[k][c] - at[k - 1][c]));
    inc.duration.push_back(static_cast<double>(times[k] - times[k - 1]));
  }
  return inc;
}

VectorEstimate increment_ratio(const RegenerationIncrements& inc) {
  if (inc.size() < 1) throw InsufficientData("need at least two regeneration times");
  VectorEstimate out;
  out.samples = inc.size();
  for (const auto& comp : inc.displacement) {
    auto r = ratio_of_means(comp, inc.duration);
    out.estimate.push_back(r.mean);
    out.std_error.push_back(r.se);
  }
  return out;
}

VectorEstimate regeneration_speed_ratio(const WalkPath& member, const SuperRegenerationLog& log) {
  if (log.times.size() < 2) throw InsufficientData("need at least two confirmed super-regenerations");
  return increment_ratio(regeneration_increments(member, log.times));
}

void write_super_regeneration_csv(std::ostream& os, std::size_t replica, const SuperRegenerationLog& log,
                                  std::span<const std::int64_t> e1_trace, bool header) {
  if (header) os << "replica,tau,x_tau_e1,censored\n";
  for (auto t : log.times) os << replica << "," << t << "," << e1_trace[static_cast<std::size_t>(t)] << ",0\n";
  if (log.censored_tail) os << replica << ",,,1\n";
}

double disagreement_probability(std::span<const double> q, std::span<const double> qbar) {
  if (q.size() != qbar.size() || q.size() < 2) throw InvalidArgument("threshold vectors must match");
  double overlap = 0.0;
  for (std::size_t k = 0; k + 1 < q.size(); ++k) {
    double lo = std::max(q[k], qbar[k]);
    double hi = std::min(q[k + 1], qbar[k + 1]);
    if (hi > lo) overlap += hi - lo;
  }
  return std::max(0.0, 1.0 - overlap);
}

double threshold_gap_sum(std::span<const double> q, std::span<const double> qbar) {
  if (q.size() != qbar.size()) throw InvalidArgument("threshold vectors must match");
  double s = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) s += std::fabs(q[k] - qbar[k]);
  return s;
}

DivergenceRate coupling_divergence_rate(const EnvironmentLaw& law, const EnvironmentLaw& law_bar, double lambda, int d,
                                        std::int64_t n, std::size_t replicas, std::uint64_t seed) {
  if (n < 1 || replicas < 1) throw InvalidArgument("need n >= 1 and replicas >= 1");
  std::vector<std::uint64_t> counts(replicas);
  parallel_for(replicas, [&](std::size_t r) {
    auto fseed = derive_seed(seed, StreamTag::Field, r);
    BiasedKernel a(ConductanceField(law, d, fseed), lambda);
    BiasedKernel b(ConductanceField(law_bar, d, fseed), lambda);
    CoupledEnsemble ens({a, b}, LatticePoint(d), false);
    auto rng = make_stream(seed, StreamTag::Walk, r);
    std::uint64_t c = 0;
    for (std::int64_t t = 0; t < n; ++t) {
      ens.step(rng);
      if (ens.last_direction(0) != ens.last_direction(1)) ++c;
    }
    counts[r] = c;
  });
  DivergenceRate out;
  std::vector<double> rates;
  for (auto c : counts) {
    out.disagreements += c;
    rates.push_back(static_cast<double>(c) / static_cast<double>(n));
  }
  out.steps = static_cast<std::uint64_t>(n) * replicas;
  auto m = mean_stderr(rates);
  out.rate = m.mean;
  out.std_error = m.se;
  return out;
}

OrderingCheck coupled_ordering_check(const EnvironmentLaw& law, int d, const std::vector<double>& lambdas,
                                     std::int64_t n, std::size_t replicas, std::uint64_t seed) {
  if (n < 1 || replicas < 1) throw InvalidArgument("need n >= 1 and replicas >= 1");
  if (lambdas.size() < 2) throw InvalidArgument("need at least two lambdas");
  for (std::size_t i = 1; i < lambdas.size(); ++i)
    if (!(lambdas[i - 1] < lambdas[i])) throw InvalidArgument("lambdas must be strictly increasing");
  std::vector<std::uint64_t> bad(replicas, 0);
  parallel_for(replicas, [&](std::size_t r) {
    ConductanceField field(law, d, derive_seed(seed, StreamTag::Field, r));
    std::vector<BiasedKernel> kernels;
    for (double l : lambdas) kernels.emplace_back(field, l);
    CoupledEnsemble ens(std::move(kernels), LatticePoint(d), false);
    auto rng = make_stream(seed, StreamTag::Walk, r);
    std::uint64_t c = 0;
    for (std::int64_t t = 0; t < n; ++t) {
      ens.step(rng);
      for (std::size_t i = 1; i < ens.size(); ++i)
        if (ens.position(i - 1)[0] > ens.position(i)[0]) ++c;
    }
    bad[r] = c;
  });
  OrderingCheck out;
  out.replicas = replicas;
  out.comparisons = static_cast<std::uint64_t>(n) * replicas * (lambdas.size() - 1);
  for (auto b : bad) {
    out.violations += b;
    out.violating_replicas += b > 0;
  }
  return out;
}

MonotonicityDiagnostics monotonicity_diagnostics(const EnvironmentLaw& law, int d, double lambda, double eps,
                                                 double lambda_s, std::size_t replicas, std::int64_t horizon,
                                                 std::int64_t confirm_margin, std::uint64_t seed) {
  if (!(eps > 0)) throw InvalidArgument("eps must be positive");
  if (!(lambda > lambda_s)) throw InvalidArgument("need lambda > lambda_s");
  const double beta = ellipticity_ratio(law);
  struct Rep {
    bool regenerated = false;
    std::int64_t left_steps = 0;
    bool differ = false;
    std::uint64_t dominance = 0;
    bool count_violation = false;
    double gap = 0.0;
  };
  std::vector<Rep> reps(replicas);
  parallel_for(replicas, [&](std::size_t r) {
    auto fseed = derive_seed(seed, StreamTag::Field, r);
    ConductanceField field(law, d, fseed);
    CoupledEnsemble ens({BiasedKernel(field, lambda), BiasedKernel(field, lambda + eps)}, LatticePoint(d), false);
    AuxiliaryYWalk y(lambda_s, beta, d);
    auto rng = make_stream(seed, StreamTag::Walk, r);
    std::vector<std::int64_t> e1a{0}, e1b{0};
    std::vector<std::uint8_t> same_pos{1}, diff_inc;
    Rep rep;
    for (std::int64_t t = 0; t < horizon; ++t) {
      double u = rng.uniform();
      int yinc = y.push(u);
      ens.step(u);
      for (std::size_t i = 0; i < 2; ++i)
        if (yinc == 1 && ens.last_direction(i) != 0) ++rep.dominance;
      e1a.push_back(ens.position(0)[0]);
      e1b.push_back(ens.position(1)[0]);
      same_pos.push_back(ens.position(0) == ens.position(1));
      diff_inc.push_back(ens.last_direction(0) != ens.last_direction(1));
    }
    auto log = detect_super_regenerations(y, horizon, confirm_margin);
    if (!log.times.empty()) {
      auto tau = static_cast<std::size_t>(log.times.front());
      rep.regenerated = true;
      std::int64_t diffs = 0;
      for (std::size_t n = 1; n <= tau; ++n) {
        if (y.values[n] < y.values[n - 1]) ++rep.left_steps;
        if (!same_pos[n]) rep.differ = true;
        diffs += diff_inc[n - 1];
      }
      rep.count_violation = diffs > rep.left_steps;
      rep.gap = static_cast<double>(e1b[tau] - e1a[tau]);
    }
    reps[r] = rep;
  });
  MonotonicityDiagnostics out;
  out.replicas = replicas;
  std::vector<double> gaps;
  for (const auto& rep : reps) {
    out.y_dominance_violations += rep.dominance;
    if (!rep.regenerated) {
      ++out.unregenerated;
      continue;
    }
    if (rep.differ) ++out.d_events[rep.left_steps];
    if (rep.count_violation) ++out.divergence_count_violations;
    gaps.push_back(rep.gap);
  }
  if (!gaps.empty()) out.gap_at_regeneration = mean_stderr(gaps);
  return out;
}

}  // namespace rcwalk
