#include "rcwalk/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "rcwalk/parallel.hpp"

namespace rcwalk {

namespace {

void require_horizon(std::int64_t n, std::uint64_t replicas) {
  if (n < 1) throw InvalidArgument("horizon must be >= 1");
  if (replicas < 1) throw InvalidArgument("replicas must be >= 1");
}

// Sum of tilted weights scaled by e^{-lambda}, given cached exponentials.
double scaled_partition(const LocalConductances& c, double e_m1, double e_m2) {
  const int d = c.dim;
  double s = c.w[0] + c.w[d] * e_m2;
  for (int i = 1; i < d; ++i) s += (c.w[i] + c.w[i + d]) * e_m1;
  return s;
}

}  // namespace

std::string method_name(EstimateMethod m) {
  switch (m) {
    case EstimateMethod::Plain: return "plain";
    case EstimateMethod::SuperRegen: return "super-regen";
    case EstimateMethod::HyperplaneRegen: return "hyperplane-regen";
    case EstimateMethod::Reweighted: return "reweighted";
    case EstimateMethod::Covariance: return "covariance";
    case EstimateMethod::FiniteDifference: return "finite-difference";
  }
  return "unknown";
}

std::string summary_json(const EstimateSummary& s, const EnvironmentLaw& law, double lambda, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["method"] = method_name(s.method);
  j["law"] = format_law_spec(LawSpec{law, static_cast<int>(s.estimate.size()), seed});
  j["lambda"] = lambda;
  j["horizon"] = s.horizon;
  j["replicas"] = s.replicas;
  j["estimate"] = s.estimate;
  j["stderr"] = s.std_error;
  j["seed"] = seed;
  return j.dump();
}

void MartingalePair::update(int direction, const StepDistribution& dist) {
  const int axis = direction_axis(direction, dim);
  const double sign = direction_sign(direction, dim);
  X[axis] += sign;
  for (int i = 0; i < dim; ++i) M[i] -= dist.drift(i);
  M[axis] += sign;
  ++n;
}

void MartingalePair::center(const std::vector<double>& velocity) {
  if (static_cast<int>(velocity.size()) != dim) throw InvalidArgument("velocity dimension mismatch");
  for (int i = 0; i < dim; ++i) N[i] = X[i] - static_cast<double>(n) * velocity[i];
  cross_e1 += M[0] * N[0];
}

std::vector<ReplicaEnd> simulate_replicas(const EnvironmentLaw& law, int d, double lambda, std::int64_t n,
                                          std::uint64_t replicas, std::uint64_t seed) {
  require_horizon(n, replicas);
  validate_law(law);
  std::vector<ReplicaEnd> ends(replicas);
  parallel_for(replicas, [&](std::size_t r) {
    BiasedKernel kernel(ConductanceField(law, d, derive_seed(seed, StreamTag::Field, r)), lambda);
    auto rng = make_stream(seed, StreamTag::Walk, r);
    LatticePoint x(d);
    MartingalePair mp(d);
    for (std::int64_t t = 0; t < n; ++t) {
      auto dist = kernel.step_distribution(x);
      int k = dist.select(rng.uniform());
      mp.update(k, dist);
      x.move(k);
    }
    ends[r].X = mp.X;
    ends[r].M = mp.M;
  });
  return ends;
}

EstimateSummary estimate_velocity(const EnvironmentLaw& law, int d, double lambda, std::int64_t n,
                                  std::uint64_t replicas, std::uint64_t seed) {
  auto ends = simulate_replicas(law, d, lambda, n, replicas, seed);
  EstimateSummary s;
  s.method = EstimateMethod::Plain;
  s.replicas = replicas;
  s.horizon = n;
  std::vector<double> xs(replicas);
  for (int i = 0; i < d; ++i) {
    for (std::size_t r = 0; r < replicas; ++r) xs[r] = ends[r].X[i] / static_cast<double>(n);
    auto m = mean_stderr(xs);
    s.estimate.push_back(m.mean);
    s.std_error.push_back(m.se);
  }
  return s;
}

EstimateSummary estimate_velocity_regen(const EnvironmentLaw& law, int d, double lambda, std::int64_t n,
                                        std::uint64_t replicas, std::uint64_t seed, EstimateMethod method,
                                        const RegenOptions& opts) {
  require_horizon(n, replicas);
  validate_law(law);
  if (method != EstimateMethod::SuperRegen && method != EstimateMethod::HyperplaneRegen)
    throw InvalidArgument("regeneration estimate needs method super-regen or hyperplane-regen");
  const bool super = method == EstimateMethod::SuperRegen;
  const double beta = ellipticity_ratio(law);
  const double ls = opts.lambda_s.value_or(lambda);
  if (super) {
    if (!(ls > y_drift_floor(beta, d)))
      throw InvalidArgument("lambda_s must exceed log(beta) + log(2d-1) = " + std::to_string(y_drift_floor(beta, d)));
    if (lambda < ls) throw InvalidArgument("super-regeneration needs lambda >= lambda_s");
  }
  std::vector<RegenerationIncrements> per(replicas);
  parallel_for(replicas, [&](std::size_t r) {
    BiasedKernel kernel(ConductanceField(law, d, derive_seed(seed, StreamTag::Field, r)), lambda);
    auto rng = make_stream(seed, StreamTag::Walk, r);
    auto path = run_path(kernel, LatticePoint(d), n, rng, super);
    if (super) {
      AuxiliaryYWalk y(ls, beta, d);
      for (double u : *path.uniforms) y.push(u);
      auto log = detect_super_regenerations(y, n, opts.confirm_margin);
      per[r] = regeneration_increments(path, log.times);
    } else {
      per[r] = hyperplane_increments(path, detect_regenerations(path, opts.confirm_margin));
    }
  });
  VectorEstimate v;
  if (super) {
    RegenerationIncrements pooled;
    for (const auto& p : per) pooled.append(p);
    v = increment_ratio(pooled);
  } else {
    v = pooled_increment_ratio(per);
  }
  EstimateSummary s;
  s.method = method;
  s.replicas = replicas;
  s.horizon = n;
  s.estimate = v.estimate;
  s.std_error = v.std_error;
  return s;
}

std::vector<std::vector<double>> speed_curve_samples(const EnvironmentLaw& law, int d,
                                                     const std::vector<double>& lambdas, std::int64_t n,
                                                     std::uint64_t replicas, std::uint64_t seed) {
  require_horizon(n, replicas);
  if (lambdas.empty()) throw InvalidArgument("empty lambda grid");
  validate_law(law);
  std::vector<std::vector<double>> out(lambdas.size(), std::vector<double>(replicas));
  parallel_for(replicas, [&](std::size_t r) {
    ConductanceField field(law, d, derive_seed(seed, StreamTag::Field, r));
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
      BiasedKernel kernel(field, lambdas[j]);
      auto rng = make_stream(seed, StreamTag::Walk, r);
      LatticePoint x(d);
      for (std::int64_t t = 0; t < n; ++t) x.move(kernel.step_distribution(x).select(rng.uniform()));
      out[j][r] = static_cast<double>(x[0]) / static_cast<double>(n);
    }
  });
  return out;
}

MeanSE paired_difference(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw InvalidArgument("paired samples must have equal length");
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = b[i] - a[i];
  return mean_stderr(diff);
}

EstimateSummary derivative_from_replicas(const std::vector<ReplicaEnd>& ends, int d, std::int64_t n,
                                         std::size_t batches) {
  const std::size_t R = ends.size();
  if (R < 2) throw InsufficientData("covariance estimate needs at least 2 replicas");
  const std::size_t B = std::clamp<std::size_t>(batches, 2, R);
  const double nd = static_cast<double>(n);
  auto batch_of = [&](std::size_t r) { return r * B / R; };

  std::vector<std::array<double, kMaxDim>> batch_sum(B);
  std::array<double, kMaxDim> total{};
  std::vector<std::size_t> batch_count(B, 0);
  double m_mean = 0.0;
  for (std::size_t r = 0; r < R; ++r) {
    auto b = batch_of(r);
    ++batch_count[b];
    for (int i = 0; i < d; ++i) {
      batch_sum[b][i] += ends[r].X[i];
      total[i] += ends[r].X[i];
    }
    m_mean += ends[r].M[0];
  }
  m_mean /= static_cast<double>(R);

  EstimateSummary s;
  s.method = EstimateMethod::Covariance;
  s.replicas = R;
  s.horizon = n;
  std::vector<double> prod(R);
  for (int i = 0; i < d; ++i) {
    for (std::size_t r = 0; r < R; ++r) {
      auto b = batch_of(r);
      // velocity from the other batches
      double v = (total[i] - batch_sum[b][i]) / (static_cast<double>(R - batch_count[b]) * nd);
      double N = ends[r].X[i] - nd * v;
      prod[r] = N * (ends[r].M[0] - m_mean) / nd;
    }
    auto m = batch_means(prod, B);
    s.estimate.push_back(m.mean);
    s.std_error.push_back(m.se);
  }
  return s;
}

EstimateSummary estimate_derivative_cov(const EnvironmentLaw& law, int d, double lambda, std::int64_t n,
                                        std::uint64_t replicas, std::uint64_t seed, std::size_t batches) {
  if (!(lambda > 0)) throw InvalidArgument("covariance estimate needs lambda > 0");
  if (replicas < 2) throw InsufficientData("covariance estimate needs at least 2 replicas");
  return derivative_from_replicas(simulate_replicas(law, d, lambda, n, replicas, seed), d, n, batches);
}

EstimateSummary estimate_derivative_fd(const EnvironmentLaw& law, int d, double lambda, double h, std::int64_t n,
                                       std::uint64_t replicas, std::uint64_t seed) {
  if (!(h > 0)) throw InvalidArgument("finite-difference step must be positive");
  if (lambda - h < 0) throw InvalidArgument("finite-difference step reaches below lambda = 0");
  auto s = speed_curve_samples(law, d, {lambda - h, lambda + h}, n, replicas, seed);
  auto diff = paired_difference(s[0], s[1]);
  EstimateSummary out;
  out.method = EstimateMethod::FiniteDifference;
  out.replicas = replicas;
  out.horizon = n;
  out.estimate = {diff.mean / (2.0 * h)};
  out.std_error = {diff.se / (2.0 * h)};
  return out;
}

double GirsanovWeight::weight() const { return std::exp(log_weight); }

GirsanovWeight girsanov_weight(const WalkPath& path, const ConductanceField& field, double lambda0, double lambda) {
  BiasedKernel k0(field, lambda0);
  BiasedKernel k1(field, lambda);
  GirsanovWeight g;
  g.lambda0 = lambda0;
  g.lambda = lambda;
  g.steps = static_cast<std::int64_t>(path.length());
  const double lb = lambda - lambda0;
  const int d = field.dim();
  if (path.start.dim != d) throw InvalidArgument("path dimension does not match the field");
  LatticePoint x = path.start;
  double m1 = 0.0;
  double quad = 0.0;
  double log_w = 0.0;
  for (auto k : path.steps) {
    auto c = local_conductances(field, x);
    auto dist = k0.distribution_from(c, x);
    const double s0 = scaled_partition(c, k0.exp_minus_lambda(), k0.exp_minus_2lambda());
    const double s1 = scaled_partition(c, k1.exp_minus_lambda(), k1.exp_minus_2lambda());
    const double e1 = k == 0 ? 1.0 : (k == d ? -1.0 : 0.0);
    log_w += lb * e1 - (lb + std::log(s1 / s0));
    const double dr = dist.drift(0);
    m1 += e1 - dr;
    quad += dist.second_moment() - dr * dr;
    x.move(k);
  }
  g.log_weight = lambda == lambda0 ? 0.0 : log_w;
  g.expansion = lb * m1 - 0.5 * lb * lb * quad;
  return g;
}

ReweightedVelocity reweighted_velocity(const EnvironmentLaw& law, int d, double lambda0, double lambda,
                                       std::int64_t t, std::uint64_t replicas, std::uint64_t seed) {
  require_horizon(t, replicas);
  validate_law(law);
  std::vector<double> logw(replicas), x1(replicas);
  parallel_for(replicas, [&](std::size_t r) {
    ConductanceField field(law, d, derive_seed(seed, StreamTag::Field, r));
    BiasedKernel k0(field, lambda0);
    auto rng = make_stream(seed, StreamTag::Walk, r);
    auto path = run_path(k0, LatticePoint(d), t, rng, false);
    logw[r] = girsanov_weight(path, field, lambda0, lambda).log_weight;
    x1[r] = static_cast<double>(path.end()[0]) / static_cast<double>(t);
  });
  ReweightedVelocity out;
  out.replicas = replicas;
  std::vector<double> w(replicas), wx(replicas);
  double w2 = 0.0;
  RunningStats ls;
  for (std::size_t r = 0; r < replicas; ++r) {
    w[r] = std::exp(logw[r]);
    wx[r] = w[r] * x1[r];
    w2 += w[r] * w[r];
    ls.add(logw[r]);
  }
  out.mean_weight = mean_stderr(w);
  out.speed = ratio_of_means(wx, w);
  out.weight_l2 = std::sqrt(w2 / static_cast<double>(replicas));
  out.log_weight_mean = ls.mean();
  out.log_weight_var = ls.variance();
  return out;
}

WindowEstimate reweighted_window_mean(const EnvironmentLaw& law, int d, double lambda0, double lambda, double alpha,
                                      std::uint64_t environments, std::uint64_t seed, const WindowOptions& opts) {
  if (lambda == lambda0) throw InvalidArgument("lambda must differ from lambda0 (window length is infinite)");
  if (!(alpha > 1)) throw InvalidArgument("alpha must exceed 1");
  if (environments < 2) throw InsufficientData("window estimate needs at least 2 environments");
  if (opts.particles < 1) throw InvalidArgument("particles must be >= 1");
  validate_law(law);
  const double lb = lambda - lambda0;
  const double t_real = std::ceil(alpha / (lb * lb));
  if (t_real > static_cast<double>(opts.horizon_cap))
    throw InvalidArgument("window horizon " + std::to_string(static_cast<long long>(t_real)) +
                          " exceeds the horizon cap " + std::to_string(opts.horizon_cap));
  const auto t = static_cast<std::int64_t>(t_real);
  const std::size_t P = opts.particles;
  const bool resample = opts.mode == ReweightMode::Resampling;

  // Per environment: log of the unbiased evidence estimate Z_e (product of
  // mean weights over resampling epochs), the weighted mean m_e of X_t.e1/t,
  // and the reference mean under lambda0 on the same uniforms.
  std::vector<double> log_z(environments), m(environments), ref(environments), l2_log(environments),
      resamples(environments);
  parallel_for(environments, [&](std::size_t e) {
    BiasedKernel k0(ConductanceField(law, d, derive_seed(seed, StreamTag::Field, e)), lambda0);
    const double em1 = std::exp(-lambda), em2 = std::exp(-2.0 * lambda);
    const auto walk_seed = derive_seed(seed, StreamTag::Walk, e);
    std::vector<CounterRng> rng, ref_rng;
    for (std::size_t i = 0; i < P; ++i) {
      rng.push_back(make_stream(walk_seed, StreamTag::Walk, i));
      ref_rng.push_back(rng.back());
    }
    std::vector<LatticePoint> x(P, LatticePoint(d)), y(P, LatticePoint(d)), tmp(P);
    std::vector<double> logw(P, 0.0), w(P);
    auto rs_rng = make_stream(walk_seed, StreamTag::Resample, 0);
    std::uint64_t n_resample = 0;
    double lz = 0.0;
    const double Pd = static_cast<double>(P);
    for (std::int64_t s = 0; s < t; ++s) {
      for (std::size_t i = 0; i < P; ++i) {
        auto c = local_conductances(k0.field(), x[i]);
        auto dist = k0.distribution_from(c, x[i]);
        const double s0 = scaled_partition(c, k0.exp_minus_lambda(), k0.exp_minus_2lambda());
        const double s1 = scaled_partition(c, em1, em2);
        int k = dist.select(rng[i].uniform());
        const double e1 = k == 0 ? 1.0 : (k == d ? -1.0 : 0.0);
        logw[i] += lb * e1 - (lb + std::log(s1 / s0));
        x[i].move(k);
        y[i].move(k0.step_distribution(y[i]).select(ref_rng[i].uniform()));
      }
      if (!resample) continue;
      const double mx = *std::max_element(logw.begin(), logw.end());
      double sw = 0.0, sw2 = 0.0;
      for (std::size_t i = 0; i < P; ++i) {
        w[i] = std::exp(logw[i] - mx);
        sw += w[i];
        sw2 += w[i] * w[i];
      }
      if (sw * sw >= 0.5 * Pd * sw2) continue;
      lz += mx + std::log(sw / Pd);
      // systematic resampling
      const double step = sw / Pd;
      double u = rs_rng.uniform01() * step;
      double cum = w[0];
      std::size_t j = 0;
      for (std::size_t i = 0; i < P; ++i) {
        while (cum < u && j + 1 < P) cum += w[++j];
        tmp[i] = x[j];
        u += step;
      }
      x.swap(tmp);
      std::fill(logw.begin(), logw.end(), 0.0);
      ++n_resample;
    }
    const double mx = *std::max_element(logw.begin(), logw.end());
    double sw = 0.0, swx = 0.0, sw2 = 0.0, yr = 0.0;
    for (std::size_t i = 0; i < P; ++i) {
      const double wi = std::exp(logw[i] - mx);
      sw += wi;
      sw2 += wi * wi;
      swx += wi * static_cast<double>(x[i][0]);
      yr += static_cast<double>(y[i][0]);
    }
    const double td = static_cast<double>(t);
    log_z[e] = lz + mx + std::log(sw / Pd);
    m[e] = swx / sw / td;
    ref[e] = yr / Pd / td;
    l2_log[e] = 2.0 * mx + std::log(sw2 / Pd);
    resamples[e] = static_cast<double>(n_resample);
  });

  // Global ratio sum Z_e m_e / sum Z_e; errors from the linearised
  // per-environment influence, which keeps the pairing with the reference.
  const double E = static_cast<double>(environments);
  const double lz_max = *std::max_element(log_z.begin(), log_z.end());
  std::vector<double> zw(environments);
  double zsum = 0.0, zm = 0.0;
  for (std::size_t e = 0; e < environments; ++e) {
    zw[e] = std::exp(log_z[e] - lz_max);
    zsum += zw[e];
    zm += zw[e] * m[e];
  }
  const double m_hat = zm / zsum;
  const double zbar = zsum / E;
  double v0 = 0.0;
  if (opts.v0) {
    v0 = *opts.v0;
  } else {
    for (double r : ref) v0 += r;
    v0 /= E;
  }
  std::vector<double> influence(environments);
  for (std::size_t e = 0; e < environments; ++e) {
    double phi = zw[e] * (m[e] - m_hat) / zbar;
    if (!opts.v0) phi -= ref[e] - v0;
    influence[e] = phi / lb;
  }
  auto infl = mean_stderr(influence);

  WindowEstimate out;
  out.alpha = alpha;
  out.t = t;
  out.weight_ceiling_log = 4.0 * alpha + 1.0;
  out.summary.method = EstimateMethod::Reweighted;
  out.summary.estimate = {(m_hat - v0) / lb};
  out.summary.std_error = {infl.se};
  out.summary.replicas = environments;
  out.summary.horizon = t;
  if (!resample) {
    // log of sqrt(mean w^2) across all particles
    const double mx = *std::max_element(l2_log.begin(), l2_log.end());
    double acc = 0.0;
    for (double v : l2_log) acc += std::exp(v - mx);
    out.weight_l2 = std::exp(0.5 * (mx + std::log(acc / E)));
  }
  out.mean_resamples = mean_stderr(resamples).mean;
  return out;
}

MartingaleCheck martingale_increment_check(const EnvironmentLaw& law, int d, double lambda, std::uint64_t walks,
                                           std::int64_t steps, std::uint64_t seed) {
  require_horizon(steps, walks);
  validate_law(law);
  std::vector<std::vector<RunningStats>> per(walks, std::vector<RunningStats>(d));
  parallel_for(walks, [&](std::size_t r) {
    BiasedKernel kernel(ConductanceField(law, d, derive_seed(seed, StreamTag::Field, r)), lambda);
    auto rng = make_stream(seed, StreamTag::Walk, r);
    LatticePoint x(d);
    for (std::int64_t t = 0; t < steps; ++t) {
      auto dist = kernel.step_distribution(x);
      int k = dist.select(rng.uniform());
      for (int i = 0; i < d; ++i) {
        double inc = (direction_axis(k, d) == i ? direction_sign(k, d) : 0) - dist.drift(i);
        per[r][i].add(inc);
      }
      x.move(k);
    }
  });
  MartingaleCheck out;
  out.samples = walks * static_cast<std::uint64_t>(steps);
  for (int i = 0; i < d; ++i) {
    RunningStats all;
    for (auto& p : per) all.merge(p[i]);
    out.increment.push_back({all.mean(), all.stderr_mean()});
  }
  return out;
}

std::vector<VarianceScaling> variance_scaling(const EnvironmentLaw& law, int d, double lambda,
                                              const std::vector<std::int64_t>& horizons, std::uint64_t replicas,
                                              std::uint64_t seed) {
  if (replicas < 2) throw InsufficientData("variance needs at least 2 replicas");
  std::vector<VarianceScaling> out;
  for (auto n : horizons) {
    auto ends = simulate_replicas(law, d, lambda, n, replicas, seed);
    RunningStats m, x;
    for (const auto& e : ends) {
      m.add(e.M[0]);
      x.add(e.X[0]);
    }
    // N = X - n v with the pooled v has the same variance as X
    out.push_back({n, m.variance() / static_cast<double>(n), x.variance() / static_cast<double>(n)});
  }
  return out;
}

DriftSumRow drift_sum_row(double delta, std::int64_t L, std::uint64_t replicas, std::uint64_t seed, int d,
                          Marginal marginal) {
  require_horizon(L, replicas);
  if (!(delta >= 0)) throw InvalidArgument("delta must be >= 0");
  EnvironmentLaw law = UniformElliptic{delta, marginal};
  validate_law(law);
  std::vector<double> sup2(replicas), supxi(replicas);
  parallel_for(replicas, [&](std::size_t r) {
    BiasedKernel kernel(ConductanceField(law, d, derive_seed(seed, StreamTag::Field, r)), 0.0);
    auto rng = make_stream(seed, StreamTag::Walk, r);
    LatticePoint x(d);
    std::array<double, kMaxDim> S{};
    double best = 0.0, best_xi = 0.0;
    for (std::int64_t t = 0; t < L; ++t) {
      auto dist = kernel.step_distribution(x);
      double norm2 = 0.0;
      for (int i = 0; i < d; ++i) {
        S[i] += dist.drift(i);
        norm2 += S[i] * S[i];
      }
      best = std::max(best, norm2);
      best_xi = std::max(best_xi, S[0] * S[0]);
      x.move(dist.select(rng.uniform()));
    }
    sup2[r] = best;
    supxi[r] = best_xi;
  });
  DriftSumRow row;
  row.delta = delta;
  row.L = L;
  row.sup_norm2 = mean_stderr(sup2);
  row.sup_xi2 = mean_stderr(supxi);
  if (delta > 0) {
    const double scale = static_cast<double>(L) * delta;
    row.ratio = row.sup_norm2.mean / scale;
    row.ratio_se = row.sup_norm2.se / scale;
  }
  return row;
}

DriftSumReport drift_sum_diagnostic(const std::vector<double>& deltas, const std::vector<std::int64_t>& horizons,
                                    std::uint64_t replicas, std::uint64_t seed, int d) {
  if (deltas.empty() || horizons.size() < 2) throw InvalidArgument("need at least one delta and two horizons");
  DriftSumReport rep;
  double num = 0.0, den = 0.0;
  for (double delta : deltas) {
    std::vector<DriftSumRow> rows;
    for (auto L : horizons) rows.push_back(drift_sum_row(delta, L, replicas, seed, d));
    // per-delta slope of ratio against log10 L
    double xbar = 0.0;
    for (const auto& r : rows) xbar += std::log10(static_cast<double>(r.L));
    xbar /= static_cast<double>(rows.size());
    double sxx = 0.0, sxy = 0.0, var = 0.0;
    for (const auto& r : rows) {
      const double dx = std::log10(static_cast<double>(r.L)) - xbar;
      sxx += dx * dx;
      sxy += dx * r.ratio;
      var += dx * dx * r.ratio_se * r.ratio_se;
    }
    const double slope = sxy / sxx;
    const double slope_var = var / (sxx * sxx);
    if (slope_var > 0) {
      num += slope / slope_var;
      den += 1.0 / slope_var;
    }
    for (auto& r : rows) {
      rep.max_ratio = std::max(rep.max_ratio, r.ratio);
      rep.rows.push_back(r);
    }
  }
  if (den > 0) {
    rep.trend.slope = num / den;
    rep.trend.slope_se = std::sqrt(1.0 / den);
  }
  rep.trend.n = rep.rows.size();
  return rep;
}

std::vector<MonotonicityPair> detect_decreases(const std::vector<double>& lambdas,
                                               const std::vector<std::vector<double>>& samples, double z) {
  if (lambdas.size() != samples.size()) throw InvalidArgument("one sample vector per lambda required");
  std::vector<MonotonicityPair> out;
  for (std::size_t i = 0; i < lambdas.size(); ++i)
    for (std::size_t j = i + 1; j < lambdas.size(); ++j) {
      if (!(lambdas[i] < lambdas[j])) continue;
      auto diff = paired_difference(samples[j], samples[i]);  // v(l_i) - v(l_j)
      if (diff.mean > z * diff.se) out.push_back({lambdas[i], lambdas[j], diff.mean, diff.se});
    }
  return out;
}

ScanCell nonmono_scan_cell(const TwoPoint& law, const std::vector<double>& lambdas, std::int64_t n,
                           std::uint64_t replicas, std::uint64_t seed, const ScanOptions& opts) {
  require_horizon(n, replicas);
  if (lambdas.empty()) throw InvalidArgument("empty lambda grid");
  validate_law(law);
  const std::size_t J = lambdas.size();
  std::vector<std::vector<double>> v(J, std::vector<double>(replicas)), ta(J, std::vector<double>(replicas)),
      cnt(J, std::vector<double>(replicas));
  std::vector<std::vector<std::uint64_t>> cens(J, std::vector<std::uint64_t>(replicas));
  parallel_for(replicas, [&](std::size_t r) {
    ConductanceField field(law, 2, derive_seed(seed, StreamTag::Field, r));
    for (std::size_t j = 0; j < J; ++j) {
      BiasedKernel kernel(field, lambdas[j]);
      auto rng = make_stream(seed, StreamTag::Walk, r);
      auto path = run_path(kernel, LatticePoint(2), n, rng, false);
      v[j][r] = static_cast<double>(path.end()[0]) / static_cast<double>(n);
      if (!opts.ladder) continue;
      auto log = ladder_decomposition(path, field, LadderOptions{opts.ladder_radius});
      for (auto t : log.occupation_times) {
        if (t < 0) {
          ++cens[j][r];
        } else if (t > 0) {
          ta[j][r] += static_cast<double>(t);
          cnt[j][r] += 1.0;
        }
      }
    }
  });
  ScanCell cell;
  cell.law = law;
  for (std::size_t j = 0; j < J; ++j) {
    ScanPoint p;
    p.lambda = lambdas[j];
    p.v1 = mean_stderr(v[j]);
    double total = 0.0;
    for (std::size_t r = 0; r < replicas; ++r) {
      total += cnt[j][r];
      p.censored += cens[j][r];
    }
    p.dead_ends = static_cast<std::uint64_t>(total);
    if (total > 0) p.mean_ta = replicas >= 2 ? ratio_of_means(ta[j], cnt[j]) : MeanSE{ta[j][0] / cnt[j][0], 0.0};
    cell.points.push_back(p);
  }
  cell.decreases = detect_decreases(lambdas, v, opts.z);
  return cell;
}

}  // namespace rcwalk
