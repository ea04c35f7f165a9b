#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace rcwalk {

// Welford accumulator.
class RunningStats {
 public:
  void add(double x);
  void merge(const RunningStats& other);
  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;  // unbiased; 0 for n < 2
  double stderr_mean() const;
  double min() const { return min_; }
  double max() const { return max_; }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double min_ = 0.0;
  double max_ = 0.0;
};

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;
};

MeanSE mean_stderr(std::span<const double> xs);
// Mean and standard error from non-overlapping batch means.
MeanSE batch_means(std::span<const double> xs, std::size_t batches);

// sum(num)/sum(den) with delta-method standard error over paired samples.
MeanSE ratio_of_means(std::span<const double> num, std::span<const double> den);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double intercept_se = 0.0;
  double r2 = 0.0;
  std::size_t n = 0;
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y);
// Weighted least squares with weights w_i (inverse variances).
LinearFit fit_line_weighted(std::span<const double> x, std::span<const double> y, std::span<const double> w);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return lo <= v && v <= hi; }
  bool overlaps(const Interval& o) const { return lo <= o.hi && o.lo <= hi; }
};

Interval wilson_interval(std::uint64_t k, std::uint64_t n, double z = 1.959963984540054);

double normal_quantile(double p);
double normal_two_sided_pvalue(double z);
double chi_square_sf(double stat, double dof);
double student_t_quantile(double p, double dof);

// Kolmogorov-Smirnov distance against a CDF. cdf_left gives F(x-); pass the
// same function for continuous laws.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf,
                    const std::function<double(double)>& cdf_left);
// Asymptotic critical value c/sqrt(n) with P(sqrt(n) D > c) = alpha.
double ks_critical(double alpha, std::size_t n);

// Pearson chi-square of observed counts against expected probabilities.
double chi_square_statistic(std::span<const std::uint64_t> observed, std::span<const double> probs);

double autocorrelation(std::span<const double> xs, std::size_t lag);

struct TwoSampleTest {
  double z = 0.0;
  double pvalue = 1.0;
};
// Welch z-test on the difference of means.
TwoSampleTest welch_test(std::span<const double> a, std::span<const double> b);

}  // namespace rcwalk
