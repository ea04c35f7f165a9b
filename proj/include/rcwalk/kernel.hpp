#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rcwalk/errors.hpp"
#include "rcwalk/lattice.hpp"
#include "rcwalk/rng.hpp"

namespace rcwalk {

struct WalkPath {
  LatticePoint start;
  std::vector<std::uint8_t> steps;  // direction indices 0..2d-1
  std::optional<std::vector<double>> uniforms;

  std::size_t length() const { return steps.size(); }
  LatticePoint end() const;
  std::vector<LatticePoint> positions() const;
  // X_k . e_1 for k = 0..n
  std::vector<std::int64_t> e1_trace() const;
};

class DegenerateVertex : public NumericalError {
 public:
  DegenerateVertex(const LatticePoint& site, std::shared_ptr<const WalkPath> partial = nullptr);
  const LatticePoint& site() const { return site_; }
  // Path up to the degenerate site, when raised from a trajectory run.
  const WalkPath* partial_path() const { return partial_.get(); }

 private:
  LatticePoint site_;
  std::shared_ptr<const WalkPath> partial_;
};

struct LocalConductances {
  std::array<double, 2 * kMaxDim> w{};
  int dim = 0;
};

inline LocalConductances local_conductances(const ConductanceField& field, const LatticePoint& x) {
  LocalConductances c;
  c.dim = field.dim();
  for (int k = 0; k < 2 * c.dim; ++k) c.w[k] = field.conductance_toward(x, k);
  return c;
}

struct StepDistribution {
  std::array<double, 2 * kMaxDim> probs{};
  int dim = 0;

  int size() const { return 2 * dim; }
  // q_k = p_0 + ... + p_{k-1}; q_0 = 0, q_{2d} = 1.
  double threshold(int k) const;
  std::vector<double> thresholds() const;
  // Direction k with q_k < u <= q_{k+1}; u must lie in (0,1].
  int select(double u) const {
    double cum = 0.0;
    const int last = 2 * dim - 1;
    for (int k = 0; k < last; ++k) {
      cum += probs[k];
      if (u <= cum) return k;
    }
    return last;
  }
  double drift(int axis) const { return probs[axis] - probs[axis + dim]; }
  double second_moment() const { return probs[0] + probs[dim]; }
};

// Tilted, normalised distribution. Weights carry the factor e^{-lambda} so
// nothing overflows: +e1 -> w, -e1 -> w e^{-2 lambda}, other axes -> w e^{-lambda}.
inline bool tilt_into(const LocalConductances& c, double e_m1, double e_m2, StepDistribution& out) {
  const int d = c.dim;
  out.dim = d;
  double total = 0.0;
  for (int k = 0; k < 2 * d; ++k) {
    double f = k == 0 ? 1.0 : (k == d ? e_m2 : e_m1);
    out.probs[k] = c.w[k] * f;
    total += out.probs[k];
  }
  if (!(total > 0)) return false;
  const double inv = 1.0 / total;
  for (int k = 0; k < 2 * d; ++k) out.probs[k] *= inv;
  return true;
}

// log of sum_k w_k e^{lambda e_k . e1}
double log_partition(const LocalConductances& c, double lambda);

class BiasedKernel {
 public:
  BiasedKernel(ConductanceField field, double lambda);

  const ConductanceField& field() const { return field_; }
  double lambda() const { return lambda_; }
  int dim() const { return field_.dim(); }
  double exp_minus_lambda() const { return e_m1_; }
  double exp_minus_2lambda() const { return e_m2_; }

  StepDistribution step_distribution(const LatticePoint& x) const {
    StepDistribution s;
    if (!tilt_into(local_conductances(field_, x), e_m1_, e_m2_, s)) throw DegenerateVertex(x);
    return s;
  }
  StepDistribution distribution_from(const LocalConductances& c, const LatticePoint& x) const {
    StepDistribution s;
    if (!tilt_into(c, e_m1_, e_m2_, s)) throw DegenerateVertex(x);
    return s;
  }
  std::vector<double> cumulative_thresholds(const LatticePoint& x) const;
  int step_from_uniform(const LatticePoint& x, double u) const;
  std::vector<double> local_drift(const LatticePoint& x) const;
  double local_second_moment(const LatticePoint& x) const;
  double reversible_measure(const LatticePoint& x) const;
  double log_reversible_measure(const LatticePoint& x) const;

 private:
  ConductanceField field_;
  double lambda_;
  double e_m1_;
  double e_m2_;
};

WalkPath run_path(const BiasedKernel& kernel, const LatticePoint& start, std::int64_t n_steps, CounterRng& rng,
                  bool store_uniforms = true);
WalkPath replay(const BiasedKernel& kernel, const LatticePoint& start, const std::vector<double>& uniforms);

double homogeneous_speed(double lambda, int d);
double homogeneous_speed_derivative(double lambda, int d);

// Binary dump: "RCWP", u32 version=1, u32 dim, u32 flags (bit0: uniforms),
// i64[dim] start, u64 n, u8[n] steps, f64[n] uniforms if flagged; little-endian.
// A JSON sidecar <stem>.json records the kernel parameters.
void write_path_dump(const WalkPath& path, const BiasedKernel& kernel, const std::string& stem);
struct PathDump {
  WalkPath path;
  std::string sidecar_json;
};
PathDump read_path_dump(const std::string& stem);

}  // namespace rcwalk
