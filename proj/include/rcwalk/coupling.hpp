#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <vector>

#include "rcwalk/kernel.hpp"
#include "rcwalk/stats.hpp"

namespace rcwalk {

// Walks driven by one shared uniform sequence, each through its own thresholds.
class CoupledEnsemble {
 public:
  CoupledEnsemble(std::vector<BiasedKernel> kernels, const LatticePoint& start, bool keep_paths = true);

  void step(double u);
  void step(CounterRng& rng) { step(rng.uniform()); }

  std::size_t size() const { return kernels_.size(); }
  const BiasedKernel& kernel(std::size_t i) const { return kernels_[i]; }
  const LatticePoint& position(std::size_t i) const { return positions_[i]; }
  int last_direction(std::size_t i) const { return last_[i]; }
  std::int64_t steps_taken() const { return steps_; }
  bool keeps_paths() const { return keep_; }
  // Member path; uniforms are attached. Requires keep_paths.
  WalkPath path(std::size_t i) const;
  const std::vector<double>& uniforms() const { return uniforms_; }

 private:
  std::vector<BiasedKernel> kernels_;
  LatticePoint start_;
  bool keep_;
  std::vector<LatticePoint> positions_;
  std::vector<int> last_;
  std::vector<std::vector<std::uint8_t>> steps_by_member_;
  std::vector<double> uniforms_;
  std::int64_t steps_ = 0;
};

inline void coupled_step(CoupledEnsemble& ensemble, double u) { ensemble.step(u); }

// e^{ls} / (e^{ls} + (2d-1) beta) with beta = (1+delta)/(1-delta).
double y_threshold(double lambda_s, double delta, int d);
double y_threshold_beta(double lambda_s, double beta, int d);
// Smallest lambda_s giving Y a drift to the right: log beta + log(2d-1).
double y_drift_floor(double beta, int d);

struct AuxiliaryYWalk {
  double lambda_s = 0.0;
  double beta = 1.0;
  double threshold = 0.5;
  std::vector<std::int64_t> values{0};

  AuxiliaryYWalk() = default;
  AuxiliaryYWalk(double lambda_s, double beta, int d);
  // Y steps right iff u <= threshold. Returns the increment.
  int push(double u);
};

struct SuperRegenerationLog {
  std::vector<std::int64_t> times;
  bool censored_tail = false;
};

// Times n in [1, horizon] with max_{k<n-1} Y_k < Y_{n-1} < Y_n < min_{n<k<=horizon} Y_k,
// kept only once some later Y_k >= Y_n + confirm_margin.
SuperRegenerationLog detect_super_regenerations(std::span<const std::int64_t> y, std::int64_t horizon,
                                                std::int64_t confirm_margin = 64);
inline SuperRegenerationLog detect_super_regenerations(const AuxiliaryYWalk& y, std::int64_t horizon,
                                                       std::int64_t confirm_margin = 64) {
  return detect_super_regenerations(std::span<const std::int64_t>(y.values), horizon, confirm_margin);
}

struct RegenerationIncrements {
  std::vector<std::vector<double>> displacement;  // per component
  std::vector<double> duration;
  void append(const RegenerationIncrements& other);
  std::size_t size() const { return duration.size(); }
};

// Increments (X_{t_k} - X_{t_{k-1}}, t_k - t_{k-1}) for k >= 2.
RegenerationIncrements regeneration_increments(const WalkPath& path, std::span<const std::int64_t> times);

struct VectorEstimate {
  std::vector<double> estimate;
  std::vector<double> std_error;
  std::size_t samples = 0;
};

// Ratio of mean displacement to mean duration, delta-method errors.
VectorEstimate increment_ratio(const RegenerationIncrements& inc);
VectorEstimate regeneration_speed_ratio(const WalkPath& member, const SuperRegenerationLog& log);

void write_super_regeneration_csv(std::ostream& os, std::size_t replica, const SuperRegenerationLog& log,
                                  std::span<const std::int64_t> e1_trace, bool header);

// Probability that one uniform lands in different cells of q and qbar.
double disagreement_probability(std::span<const double> q, std::span<const double> qbar);
// sum_k |q_k - qbar_k|, an upper bound for the disagreement probability.
double threshold_gap_sum(std::span<const double> q, std::span<const double> qbar);

struct DivergenceRate {
  double rate = 0.0;
  double std_error = 0.0;
  std::uint64_t disagreements = 0;
  std::uint64_t steps = 0;
};

// Per-step frequency with which walks in law and law_bar (same seeds, same
// uniforms) take different steps.
DivergenceRate coupling_divergence_rate(const EnvironmentLaw& law, const EnvironmentLaw& law_bar, double lambda, int d,
                                        std::int64_t n, std::size_t replicas, std::uint64_t seed);

// Walks at increasing lambdas driven by the same uniforms in one field per
// replica; counts times t with X^{lambda_i}_t.e1 > X^{lambda_{i+1}}_t.e1.
struct OrderingCheck {
  std::uint64_t replicas = 0;
  std::uint64_t violating_replicas = 0;
  std::uint64_t violations = 0;
  std::uint64_t comparisons = 0;
};
OrderingCheck coupled_ordering_check(const EnvironmentLaw& law, int d, const std::vector<double>& lambdas,
                                     std::int64_t n, std::size_t replicas, std::uint64_t seed);

// Counts of the events D_k for a coupled pair (lambda, lambda+eps) up to the
// first super-regeneration of Y.
struct MonotonicityDiagnostics {
  std::map<std::int64_t, std::uint64_t> d_events;  // k -> count of D_k
  std::uint64_t replicas = 0;
  std::uint64_t unregenerated = 0;
  std::uint64_t y_dominance_violations = 0;
  std::uint64_t divergence_count_violations = 0;  // differing increments > left steps of Y
  MeanSE gap_at_regeneration;                     // (X^{l+eps}_{tau_1} - X^l_{tau_1}) . e1
};

MonotonicityDiagnostics monotonicity_diagnostics(const EnvironmentLaw& law, int d, double lambda, double eps,
                                                 double lambda_s, std::size_t replicas, std::int64_t horizon,
                                                 std::int64_t confirm_margin, std::uint64_t seed);

}  // namespace rcwalk
