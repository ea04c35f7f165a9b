#include "rcwalk/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "rcwalk/errors.hpp"

namespace rcwalk {

void RunningStats::add(double x) {
  if (n_ == 0) {
    min_ = max_ = x;
  } else {
    min_ = std::min(min_, x);
    max_ = std::max(max_, x);
  }
  ++n_;
  double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

void RunningStats::merge(const RunningStats& o) {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  double n = static_cast<double>(n_ + o.n_);
  double delta = o.mean_ - mean_;
  m2_ += o.m2_ + delta * delta * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
  mean_ += delta * static_cast<double>(o.n_) / n;
  n_ += o.n_;
  min_ = std::min(min_, o.min_);
  max_ = std::max(max_, o.max_);
}

double RunningStats::variance() const { return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1); }

double RunningStats::stderr_mean() const {
  return n_ < 2 ? 0.0 : std::sqrt(variance() / static_cast<double>(n_));
}

MeanSE mean_stderr(std::span<const double> xs) {
  RunningStats s;
  for (double x : xs) s.add(x);
  return {s.mean(), s.stderr_mean()};
}

MeanSE batch_means(std::span<const double> xs, std::size_t batches) {
  if (batches < 2 || xs.size() < batches) return mean_stderr(xs);
  std::vector<double> means;
  std::size_t per = xs.size() / batches;
  for (std::size_t b = 0; b < batches; ++b) {
    std::size_t lo = b * per, hi = b + 1 == batches ? xs.size() : lo + per;
    double s = 0;
    for (std::size_t i = lo; i < hi; ++i) s += xs[i];
    means.push_back(s / static_cast<double>(hi - lo));
  }
  MeanSE m = mean_stderr(means);
  double total = 0;
  for (double x : xs) total += x;
  m.mean = total / static_cast<double>(xs.size());
  return m;
}

MeanSE ratio_of_means(std::span<const double> num, std::span<const double> den) {
  if (num.size() != den.size() || num.empty()) throw InvalidArgument("ratio_of_means: size mismatch or empty");
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < num.size(); ++i) {
    sx += num[i];
    sy += den[i];
  }
  if (sy == 0) throw NumericalError("ratio_of_means: zero denominator");
  const double n = static_cast<double>(num.size());
  const double r = sx / sy;
  const double ybar = sy / n;
  if (num.size() < 2) return {r, 0.0};
  double ss = 0;
  for (std::size_t i = 0; i < num.size(); ++i) {
    double z = num[i] - r * den[i];
    ss += z * z;
  }
  double var = ss / (n - 1.0) / (ybar * ybar) / n;
  return {r, std::sqrt(var)};
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("fit_line: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw NumericalError("fit_line: x values are all equal");
  LinearFit f;
  f.n = x.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - f.intercept - f.slope * x[i];
    sse += r * r;
  }
  f.r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
  if (x.size() > 2) {
    double s2 = sse / (n - 2.0);
    f.slope_se = std::sqrt(s2 / sxx);
    f.intercept_se = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
  }
  return f;
}

LinearFit fit_line_weighted(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
  if (x.size() != y.size() || x.size() != w.size() || x.size() < 2)
    throw InvalidArgument("fit_line_weighted: need >= 2 paired points");
  double S = 0, Sx = 0, Sy = 0, Sxx = 0, Sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    S += w[i];
    Sx += w[i] * x[i];
    Sy += w[i] * y[i];
    Sxx += w[i] * x[i] * x[i];
    Sxy += w[i] * x[i] * y[i];
  }
  double delta = S * Sxx - Sx * Sx;
  if (!(delta > 0)) throw NumericalError("fit_line_weighted: degenerate design");
  LinearFit f;
  f.n = x.size();
  f.slope = (S * Sxy - Sx * Sy) / delta;
  f.intercept = (Sxx * Sy - Sx * Sxy) / delta;
  f.slope_se = std::sqrt(S / delta);
  f.intercept_se = std::sqrt(Sxx / delta);
  double ybar = Sy / S, sse = 0, sst = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - f.intercept - f.slope * x[i];
    sse += w[i] * r * r;
    sst += w[i] * (y[i] - ybar) * (y[i] - ybar);
  }
  f.r2 = sst > 0 ? 1.0 - sse / sst : 1.0;
  return f;
}

Interval wilson_interval(std::uint64_t k, std::uint64_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double center = (p + z2 / (2 * nn)) / (1 + z2 / nn);
  const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / (1 + z2 / nn);
  Interval iv{std::max(0.0, center - half), std::min(1.0, center + half)};
  if (k == 0) iv.lo = 0.0;
  if (k == n) iv.hi = 1.0;
  return iv;
}

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }

double normal_two_sided_pvalue(double z) {
  return 2.0 * boost::math::cdf(boost::math::complement(boost::math::normal(), std::fabs(z)));
}

double chi_square_sf(double stat, double dof) {
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), stat));
}

double student_t_quantile(double p, double dof) { return boost::math::quantile(boost::math::students_t(dof), p); }

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf,
                    const std::function<double(double)>& cdf_left) {
  if (samples.empty()) throw InvalidArgument("ks_statistic: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < samples.size()) {
    std::size_t j = i;
    while (j < samples.size() && samples[j] == samples[i]) ++j;
    double v = samples[i];
    double below = static_cast<double>(i) / n;
    double upto = static_cast<double>(j) / n;
    d = std::max(d, std::fabs(upto - cdf(v)));
    d = std::max(d, std::fabs(below - cdf_left(v)));
    i = j;
  }
  return d;
}

double ks_critical(double alpha, std::size_t n) {
  auto q = [](double c) {
    double s = 0;
    for (int k = 1; k < 100; ++k) s += (k % 2 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * c * c);
    return s;
  };
  double lo = 0.3, hi = 4.0;
  for (int it = 0; it < 100; ++it) {
    double mid = 0.5 * (lo + hi);
    if (q(mid) > alpha)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi) / std::sqrt(static_cast<double>(n));
}

double chi_square_statistic(std::span<const std::uint64_t> observed, std::span<const double> probs) {
  if (observed.size() != probs.size()) throw InvalidArgument("chi_square_statistic: size mismatch");
  double total = 0;
  for (auto o : observed) total += static_cast<double>(o);
  double stat = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    double e = total * probs[i];
    if (e <= 0) continue;
    double diff = static_cast<double>(observed[i]) - e;
    stat += diff * diff / e;
  }
  return stat;
}

double autocorrelation(std::span<const double> xs, std::size_t lag) {
  if (xs.size() <= lag + 1) throw InvalidArgument("autocorrelation: series too short");
  double m = 0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double num = 0, den = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    den += (xs[i] - m) * (xs[i] - m);
    if (i + lag < xs.size()) num += (xs[i] - m) * (xs[i + lag] - m);
  }
  return den > 0 ? num / den : 0.0;
}

TwoSampleTest welch_test(std::span<const double> a, std::span<const double> b) {
  RunningStats sa, sb;
  for (double x : a) sa.add(x);
  for (double x : b) sb.add(x);
  if (sa.count() < 2 || sb.count() < 2) throw InvalidArgument("welch_test: need >= 2 samples per group");
  double se = std::sqrt(sa.variance() / static_cast<double>(sa.count()) + sb.variance() / static_cast<double>(sb.count()));
  TwoSampleTest t;
  if (se == 0) {
    t.z = sa.mean() == sb.mean() ? 0.0 : INFINITY;
    t.pvalue = sa.mean() == sb.mean() ? 1.0 : 0.0;
    return t;
  }
  t.z = (sa.mean() - sb.mean()) / se;
  t.pvalue = normal_two_sided_pvalue(t.z);
  return t;
}

}  // namespace rcwalk
