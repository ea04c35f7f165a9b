#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rcwalk/coupling.hpp"
#include "rcwalk/kernel.hpp"
#include "rcwalk/lattice.hpp"
#include "rcwalk/regen.hpp"
#include "rcwalk/stats.hpp"

namespace rcwalk {

enum class EstimateMethod { Plain, SuperRegen, HyperplaneRegen, Reweighted, Covariance, FiniteDifference };

std::string method_name(EstimateMethod m);

struct EstimateSummary {
  EstimateMethod method = EstimateMethod::Plain;
  std::vector<double> estimate;
  std::vector<double> std_error;
  std::uint64_t replicas = 0;
  std::int64_t horizon = 0;

  double e1() const { return estimate.at(0); }
  double e1_se() const { return std_error.at(0); }
};

// {method, law, lambda, horizon, replicas, estimate, stderr, seed}
std::string summary_json(const EstimateSummary& s, const EnvironmentLaw& law, double lambda, std::uint64_t seed);

// Drift-compensated and velocity-centred walk. N is formed once a velocity
// is available, since it needs the plug-in v.
struct MartingalePair {
  int dim = 0;
  std::int64_t n = 0;
  std::array<double, kMaxDim> X{};
  std::array<double, kMaxDim> M{};
  std::array<double, kMaxDim> N{};
  double cross_e1 = 0.0;  // running sum of M_k.e1 * N_k.e1 when tracked

  explicit MartingalePair(int d = 2) : dim(d) {}
  void update(int direction, const StepDistribution& dist);
  void center(const std::vector<double>& velocity);
};

// One walk per replica, fresh environment per replica. Seeds are reused
// across lambda, so curves built from the same seed are pathwise coupled.
struct ReplicaEnd {
  std::array<double, kMaxDim> X{};
  std::array<double, kMaxDim> M{};
};
std::vector<ReplicaEnd> simulate_replicas(const EnvironmentLaw& law, int d, double lambda, std::int64_t n,
                                          std::uint64_t replicas, std::uint64_t seed);

EstimateSummary estimate_velocity(const EnvironmentLaw& law, int d, double lambda, std::int64_t n,
                                  std::uint64_t replicas, std::uint64_t seed);

struct RegenOptions {
  std::int64_t confirm_margin = 64;
  std::optional<double> lambda_s;  // super-regen only; defaults to lambda
};

// Velocity as a ratio of regeneration increments (SuperRegen or
// HyperplaneRegen). Replica r walks the same path as in estimate_velocity.
EstimateSummary estimate_velocity_regen(const EnvironmentLaw& law, int d, double lambda, std::int64_t n,
                                        std::uint64_t replicas, std::uint64_t seed, EstimateMethod method,
                                        const RegenOptions& opts = {});

// X_n.e1/n per replica at each lambda, replica r using the same field and
// uniforms at every lambda.
std::vector<std::vector<double>> speed_curve_samples(const EnvironmentLaw& law, int d,
                                                     const std::vector<double>& lambdas, std::int64_t n,
                                                     std::uint64_t replicas, std::uint64_t seed);

// Paired difference b - a over common replicas.
MeanSE paired_difference(const std::vector<double>& a, const std::vector<double>& b);

// Cov(M_n, N_n) e1 / n with N built from a leave-one-batch-out velocity.
EstimateSummary estimate_derivative_cov(const EnvironmentLaw& law, int d, double lambda, std::int64_t n,
                                        std::uint64_t replicas, std::uint64_t seed, std::size_t batches = 20);
EstimateSummary derivative_from_replicas(const std::vector<ReplicaEnd>& ends, int d, std::int64_t n,
                                         std::size_t batches = 20);

// Central difference of X_n.e1/n at lambda +- h under common random numbers.
EstimateSummary estimate_derivative_fd(const EnvironmentLaw& law, int d, double lambda, double h, std::int64_t n,
                                       std::uint64_t replicas, std::uint64_t seed);

struct GirsanovWeight {
  double log_weight = 0.0;
  double expansion = 0.0;  // lambda_bar M_t.e1 - lambda_bar^2/2 sum(d2 - d^2)
  double lambda0 = 0.0;
  double lambda = 0.0;
  std::int64_t steps = 0;
  double weight() const;
};

// Path must carry the steps actually taken under lambda0 in this field.
GirsanovWeight girsanov_weight(const WalkPath& path, const ConductanceField& field, double lambda0, double lambda);

struct ReweightedVelocity {
  MeanSE mean_weight;
  MeanSE speed;  // E_lambda[X_t.e1]/t via weights
  double weight_l2 = 0.0;
  double log_weight_mean = 0.0;
  double log_weight_var = 0.0;
  std::uint64_t replicas = 0;
};

ReweightedVelocity reweighted_velocity(const EnvironmentLaw& law, int d, double lambda0, double lambda,
                                       std::int64_t t, std::uint64_t replicas, std::uint64_t seed);

enum class ReweightMode { Importance, Resampling };

struct WindowOptions {
  std::uint64_t particles = 64;
  ReweightMode mode = ReweightMode::Resampling;
  std::int64_t horizon_cap = 1'000'000;
  std::optional<double> v0;  // otherwise E_{lambda0}[X_t.e1]/t on shared uniforms
};

struct WindowEstimate {
  EstimateSummary summary;
  double alpha = 0.0;
  std::int64_t t = 0;
  double weight_l2 = 0.0;  // importance mode only
  double weight_ceiling_log = 0.0;  // 4 alpha + 1
  double mean_resamples = 0.0;
};

// (E_lambda[X_t]/t - v(lambda0)) / (lambda - lambda0), t = ceil(alpha/(lambda - lambda0)^2),
// from lambda0 paths. Each environment carries `particles` walks.
WindowEstimate reweighted_window_mean(const EnvironmentLaw& law, int d, double lambda0, double lambda, double alpha,
                                      std::uint64_t environments, std::uint64_t seed,
                                      const WindowOptions& opts = {});

struct MartingaleCheck {
  std::vector<MeanSE> increment;  // per component
  std::uint64_t samples = 0;
};

// Increments (X_{k+1} - X_k) - d(X_k) pooled over `walks` walks of `steps`.
MartingaleCheck martingale_increment_check(const EnvironmentLaw& law, int d, double lambda, std::uint64_t walks,
                                           std::int64_t steps, std::uint64_t seed);

struct VarianceScaling {
  std::int64_t n = 0;
  double var_m = 0.0;  // Var(M_n.e1)/n
  double var_n = 0.0;  // Var(N_n.e1)/n
};
std::vector<VarianceScaling> variance_scaling(const EnvironmentLaw& law, int d, double lambda,
                                              const std::vector<std::int64_t>& horizons, std::uint64_t replicas,
                                              std::uint64_t seed);

struct DriftSumRow {
  double delta = 0.0;
  std::int64_t L = 0;
  MeanSE sup_norm2;  // E sup_{n<=L} |sum_{k<n} d(X_k)|^2
  MeanSE sup_xi2;    // same for the e1 component
  double ratio = 0.0;
  double ratio_se = 0.0;
};

struct DriftSumReport {
  std::vector<DriftSumRow> rows;
  double max_ratio = 0.0;
  LinearFit trend;  // ratio against log10 L, per-delta intercepts removed
};

DriftSumRow drift_sum_row(double delta, std::int64_t L, std::uint64_t replicas, std::uint64_t seed, int d = 2,
                          Marginal marginal = Marginal::TwoPointSym);
DriftSumReport drift_sum_diagnostic(const std::vector<double>& deltas, const std::vector<std::int64_t>& horizons,
                                    std::uint64_t replicas, std::uint64_t seed, int d = 2);

struct SpeedPoint {
  double lambda = 0.0;
  MeanSE v1;
};

struct MonotonicityPair {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double drop = 0.0;  // v1(lambda1) - v1(lambda2)
  double joint_se = 0.0;
};

// All lambda1 < lambda2 with v1(lambda1) - v1(lambda2) > z * joint_se, joint
// errors computed from paired replica differences.
std::vector<MonotonicityPair> detect_decreases(const std::vector<double>& lambdas,
                                               const std::vector<std::vector<double>>& samples, double z = 3.0);

struct ScanOptions {
  bool ladder = true;
  std::int64_t ladder_radius = 32;
  double z = 3.0;
};

struct ScanPoint {
  double lambda = 0.0;
  MeanSE v1;
  MeanSE mean_ta;  // over dead-end ladder epochs that were left before the horizon
  std::uint64_t dead_ends = 0;
  std::uint64_t censored = 0;
};

struct ScanCell {
  TwoPoint law;
  std::vector<ScanPoint> points;
  std::vector<MonotonicityPair> decreases;
};

// Speed curve with shared seeds across lambda (as speed_curve_samples), the
// decreasing pairs at z joint errors, and mean T_A per lambda.
ScanCell nonmono_scan_cell(const TwoPoint& law, const std::vector<double>& lambdas, std::int64_t n,
                           std::uint64_t replicas, std::uint64_t seed, const ScanOptions& opts = {});

}  // namespace rcwalk
