// Acceptance suite: one PASS/FAIL line per criterion on stdout, detail on stderr.
//   acceptance [--criterion N]

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli.hpp"
#include "rcwalk/coupling.hpp"
#include "rcwalk/estimate.hpp"
#include "rcwalk/kernel.hpp"
#include "rcwalk/network.hpp"
#include "rcwalk/stats.hpp"
#include "rcwalk/traps.hpp"

using namespace rcwalk;
namespace fs = std::filesystem;

namespace {

constexpr double kZ95 = 1.959963984540054;

struct Outcome {
  bool pass = true;
  std::string summary;
};

void detail(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
void detail(const char* fmt, ...) {
  va_list ap;
  va_start(ap, fmt);
  std::fputs("    ", stderr);
  std::vfprintf(stderr, fmt, ap);
  std::fputc('\n', stderr);
  va_end(ap);
}

double joint(double a, double b) { return std::sqrt(a * a + b * b); }

// ---------------------------------------------------------------------------

Outcome homogeneous_speed_check() {
  Outcome o;
  int worst_d = 0;
  double worst_z = 0.0, worst_l = 0.0;
  for (int d : {2, 3})
    for (double l : {0.25, 0.5, 1.0, 2.0}) {
      auto s = estimate_velocity(Homogeneous{}, d, l, 100000, 400, 101);
      double exact = homogeneous_speed(l, d);
      double z = std::fabs(s.e1() - exact) / s.e1_se();
      detail("d=%d lambda=%g v1_hat=%.6f se=%.2e exact=%.6f z=%.2f", d, l, s.e1(), s.e1_se(), exact, z);
      if (z > worst_z) worst_z = z, worst_d = d, worst_l = l;
      if (!(z <= 3.0)) o.pass = false;
    }
  // large bias: the walk moves right at essentially every step
  for (int d : {2, 3}) {
    double exact = homogeneous_speed(20.0, d);
    auto s = estimate_velocity(Homogeneous{}, d, 20.0, 10000, 10, 102);
    detail("d=%d lambda=20 v1_hat=%.8f closed form=%.12f", d, s.e1(), exact);
    if (!(std::fabs(exact - 1.0) <= 1e-3 && std::fabs(s.e1() - 1.0) <= 1e-3)) o.pass = false;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "worst |z| = %.2f (d=%d, lambda=%g); lambda=20 within 1e-3 of 1", worst_z, worst_d,
                worst_l);
  o.summary = buf;
  return o;
}

Outcome detailed_balance_check() {
  Outcome o;
  const std::vector<std::pair<std::string, EnvironmentLaw>> laws = {
      {"homogeneous", Homogeneous{}},
      {"uniform_elliptic(0.3)", UniformElliptic{0.3}},
      {"two_point(0.7,0.001)", TwoPoint{0.7, 0.001}}};
  double worst = 0.0;
  std::uint64_t edges = 0;
  for (std::size_t li = 0; li < laws.size(); ++li)
    for (int d : {2, 3}) {
      BiasedKernel k(ConductanceField(laws[li].second, d, 200 + li), 0.8);
      CounterRng rng(derive_seed(300 + li, StreamTag::Aux, static_cast<std::uint64_t>(d)));
      double w = 0.0;
      for (int e = 0; e < 10000; ++e) {
        LatticePoint x(d);
        for (int i = 0; i < d; ++i) x[i] = static_cast<std::int64_t>(rng() % 201) - 100;
        int kdir = static_cast<int>(rng() % static_cast<std::uint64_t>(2 * d));
        LatticePoint y = x.neighbor(kdir);
        double pxy = k.step_distribution(x).probs[kdir];
        double pyx = k.step_distribution(y).probs[opposite_direction(kdir, d)];
        double lhs = k.log_reversible_measure(x) + std::log(pxy);
        double rhs = k.log_reversible_measure(y) + std::log(pyx);
        // relative error of pi(x)p(x,y) against pi(y)p(y,x)
        w = std::max(w, std::fabs(std::expm1(lhs - rhs)));
        ++edges;
      }
      detail("%s d=%d max relative error %.3e", laws[li].first.c_str(), d, w);
      worst = std::max(worst, w);
    }
  o.pass = worst <= 1e-12;
  char buf[120];
  std::snprintf(buf, sizeof buf, "max relative error %.3e over %llu edges", worst,
                static_cast<unsigned long long>(edges));
  o.summary = buf;
  return o;
}

Outcome girsanov_check() {
  Outcome o;
  const EnvironmentLaw law = UniformElliptic{0.1};
  auto rw = reweighted_velocity(law, 2, 0.5, 0.6, 1000, 10000, 401);
  auto direct = estimate_velocity(law, 2, 0.6, 1000, 10000, 402);
  double zw = std::fabs(rw.mean_weight.mean - 1.0) / rw.mean_weight.se;
  double js = joint(rw.speed.se, direct.e1_se());
  double zs = std::fabs(rw.speed.mean - direct.e1()) / js;
  detail("mean weight %.5f se %.5f (z=%.2f); E[W^2] %.3f; log-weight mean %.4f var %.4f", rw.mean_weight.mean,
         rw.mean_weight.se, zw, rw.weight_l2, rw.log_weight_mean, rw.log_weight_var);
  detail("reweighted speed %.5f se %.5f; direct %.5f se %.5f; z=%.2f", rw.speed.mean, rw.speed.se, direct.e1(),
         direct.e1_se(), zs);
  o.pass = zw <= 3.0 && zs <= kZ95;
  char buf[160];
  std::snprintf(buf, sizeof buf, "mean weight %.4f (z=%.2f, need <= 3); speed gap z=%.2f (need <= 1.96)",
                rw.mean_weight.mean, zw, zs);
  o.summary = buf;
  return o;
}

Outcome derivative_check() {
  Outcome o;
  double worst = 0.0;
  for (double l : {0.25, 0.5, 1.0}) {
    auto c = estimate_derivative_cov(Homogeneous{}, 2, l, 100000, 1000, 501);
    double exact = homogeneous_speed_derivative(l, 2);
    double z = std::fabs(c.e1() - exact) / c.e1_se();
    detail("homogeneous lambda=%g cov %.5f se %.5f exact %.5f z=%.2f", l, c.e1(), c.e1_se(), exact, z);
    worst = std::max(worst, z);
    if (!(z <= 3.0)) o.pass = false;
  }
  double worst_fd = 0.0;
  for (double l : {0.5, 1.0}) {
    auto c = estimate_derivative_cov(UniformElliptic{0.1}, 2, l, 100000, 1000, 502);
    auto f = estimate_derivative_fd(UniformElliptic{0.1}, 2, l, 0.05, 100000, 1000, 502);
    double z = std::fabs(c.e1() - f.e1()) / joint(c.e1_se(), f.e1_se());
    detail("uniform_elliptic(0.1) lambda=%g cov %.5f se %.5f fd %.5f se %.5f z=%.2f", l, c.e1(), c.e1_se(), f.e1(),
           f.e1_se(), z);
    worst_fd = std::max(worst_fd, z);
    if (!(z <= kZ95)) o.pass = false;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "homogeneous worst z %.2f (<= 3); cov vs FD worst z %.2f (<= 1.96)", worst, worst_fd);
  o.summary = buf;
  return o;
}

Outcome window_scaling_check() {
  Outcome o;
  const EnvironmentLaw law = Homogeneous{};
  const double l0 = 0.5, l = 0.55;
  auto cov = estimate_derivative_cov(law, 2, l0, 100000, 1000, 601);
  detail("covariance estimate at lambda0=%g: %.5f se %.5f (closed form %.5f)", l0, cov.e1(), cov.e1_se(),
         homogeneous_speed_derivative(l0, 2));
  WindowOptions opt;
  opt.particles = 128;
  std::vector<double> gap, se;
  for (double a : {4.0, 16.0, 64.0}) {
    auto w = reweighted_window_mean(law, 2, l0, l, a, 64, 602, opt);
    gap.push_back(std::fabs(w.summary.e1() - cov.e1()));
    se.push_back(joint(w.summary.e1_se(), cov.e1_se()));
    detail("alpha=%g t=%lld window %.5f se %.5f |gap| %.5f resamples/walk %.2f", a, static_cast<long long>(w.t),
           w.summary.e1(), w.summary.e1_se(), gap.back(), w.mean_resamples);
  }
  std::string s;
  for (std::size_t i = 0; i + 1 < gap.size(); ++i) {
    bool ok = gap[i + 1] <= gap[i] + kZ95 * joint(se[i], se[i + 1]);
    if (!ok) o.pass = false;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "|gap| at alpha 4/16/64: %.4f %.4f %.4f (non-increasing within 95%% CI)", gap[0],
                gap[1], gap[2]);
  o.summary = buf;
  return o;
}

Outcome ordering_check() {
  Outcome o;
  std::uint64_t total = 0, comparisons = 0;
  const std::vector<std::pair<std::string, EnvironmentLaw>> laws = {
      {"uniform_elliptic(0.3)", UniformElliptic{0.3}}, {"two_point(0.6,0.05)", TwoPoint{0.6, 0.05}}};
  for (const auto& [name, law] : laws) {
    auto c = coupled_ordering_check(law, 1, {0.2, 0.5, 1.0}, 10000, 1000, 701);
    detail("%s: %llu violations in %llu comparisons over %llu seeds", name.c_str(),
           static_cast<unsigned long long>(c.violations), static_cast<unsigned long long>(c.comparisons),
           static_cast<unsigned long long>(c.replicas));
    total += c.violations;
    comparisons += c.comparisons;
  }
  o.pass = total == 0;
  o.summary = std::to_string(total) + " violations in " + std::to_string(comparisons) + " comparisons";
  return o;
}

Outcome regeneration_check() {
  Outcome o;
  struct Case {
    std::string name;
    EnvironmentLaw law;
    int d;
    std::vector<EstimateMethod> methods;
  };
  const std::vector<Case> cases = {
      {"homogeneous d=1", Homogeneous{}, 1, {EstimateMethod::SuperRegen, EstimateMethod::HyperplaneRegen}},
      {"uniform_elliptic(0.2) d=1", UniformElliptic{0.2}, 1,
       {EstimateMethod::SuperRegen, EstimateMethod::HyperplaneRegen}},
      {"homogeneous d=2", Homogeneous{}, 2, {EstimateMethod::HyperplaneRegen}},
      {"uniform_elliptic(0.2) d=2", UniformElliptic{0.2}, 2, {EstimateMethod::HyperplaneRegen}}};
  double worst = 0.0;
  for (const auto& c : cases) {
    auto plain = estimate_velocity(c.law, c.d, 1.0, 100000, 400, 801);
    for (auto m : c.methods) {
      auto r = estimate_velocity_regen(c.law, c.d, 1.0, 100000, 400, 801, m);
      double z = std::fabs(r.e1() - plain.e1()) / joint(r.e1_se(), plain.e1_se());
      detail("%s %s %.5f se %.2e vs plain %.5f se %.2e z=%.2f", c.name.c_str(), method_name(m).c_str(), r.e1(),
             r.e1_se(), plain.e1(), plain.e1_se(), z);
      worst = std::max(worst, z);
      if (!(z <= kZ95)) o.pass = false;
    }
  }
  char buf[120];
  std::snprintf(buf, sizeof buf, "worst joint z %.2f (need <= 1.96)", worst);
  o.summary = buf;
  return o;
}

Outcome low_disorder_check() {
  Outcome o;
  std::vector<double> grid;
  for (int i = 0; i < 8; ++i) grid.push_back(0.1 + 1.9 * i / 7.0);
  auto samples = speed_curve_samples(UniformElliptic{0.05}, 2, grid, 100000, 400, 901);
  double worst = 1e300;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    auto d = paired_difference(samples[i], samples[i + 1]);
    double ratio = d.mean / d.se;
    detail("lambda %.4f -> %.4f: difference %.5f joint se %.2e (%.1f se)", grid[i], grid[i + 1], d.mean, d.se, ratio);
    worst = std::min(worst, ratio);
    if (!(d.mean > -d.se)) o.pass = false;
  }
  char buf[120];
  std::snprintf(buf, sizeof buf, "smallest adjacent difference %.1f joint se (need > -1)", worst);
  o.summary = buf;
  return o;
}

Outcome nonmono_check() {
  Outcome o;
  std::vector<double> grid;
  for (int i = 0; i < 10; ++i) grid.push_back(0.3 + 2.7 * i / 9.0);
  ScanOptions opt;
  bool found = false, trend = true;
  std::string best;
  double best_ratio = -1e300;
  for (double p : {0.92, 0.95, 0.97}) {
    std::vector<double> ta_top;
    for (double k : {1e-2, 1e-3, 1e-4}) {
      auto cell = nonmono_scan_cell(TwoPoint{p, k}, grid, 20000, 100, 1001, opt);
      const auto& top = cell.points.back();
      ta_top.push_back(top.mean_ta.mean);
      std::string v;
      for (const auto& pt : cell.points) v += " " + std::to_string(pt.v1.mean).substr(0, 6);
      detail("p=%g kappa=%g v1:%s", p, k, v.c_str());
      detail("  mean T_A at lambda=%g: %.2f se %.2f (dead ends %llu, censored %llu); %zu decreasing pairs", top.lambda,
             top.mean_ta.mean, top.mean_ta.se, static_cast<unsigned long long>(top.dead_ends),
             static_cast<unsigned long long>(top.censored), cell.decreases.size());
      for (const auto& d : cell.decreases) {
        found = true;
        double r = d.drop / d.joint_se;
        if (r > best_ratio) {
          best_ratio = r;
          char buf[120];
          std::snprintf(buf, sizeof buf, "p=%g kappa=%g lambda %.2f > %.2f by %.1f se", p, k, d.lambda1, d.lambda2, r);
          best = buf;
        }
      }
    }
    bool inc = ta_top[0] < ta_top[1] && ta_top[1] < ta_top[2];
    detail("p=%g mean T_A at top lambda across kappa 1e-2/1e-3/1e-4: %.2f %.2f %.2f%s", p, ta_top[0], ta_top[1],
           ta_top[2], inc ? "" : " (not increasing)");
    trend = trend && inc;
  }
  o.pass = found && trend;
  o.summary = (found ? "decrease found: " + best : std::string("no decreasing pair at 3 joint se")) +
              (trend ? "; T_A increases as kappa decreases" : "; T_A trend not increasing for every p");
  return o;
}

Outcome trap_tail_check() {
  Outcome o;
  TrapTailOptions opt;
  opt.n_max = 12;
  std::vector<Interval> ci_l, ci_w;
  std::vector<double> a_l, a_w;
  for (double p : {0.8, 0.9, 0.95}) {
    auto t = trap_tail_statistics(TwoPoint{p, 0.01}, 200000, 1101, opt);
    detail("p=%g samples %llu bad %llu inconclusive %llu capped %llu", p, static_cast<unsigned long long>(t.samples),
           static_cast<unsigned long long>(t.bad), static_cast<unsigned long long>(t.inconclusive),
           static_cast<unsigned long long>(t.capped));
    for (const auto* f : {&t.length_fit, &t.width_fit}) {
      const char* which = f == &t.length_fit ? "L" : "W";
      detail("  %s: slope %.4f r2 %.4f alpha %.4f [%.4f, %.4f] rows %zu%s", which, f->fit.slope, f->fit.r2, f->alpha,
             f->alpha_ci.lo, f->alpha_ci.hi, f->fit.n, f->valid ? "" : " (invalid)");
      if (!(f->valid && f->fit.slope < 0 && f->fit.r2 > 0.95)) o.pass = false;
    }
    a_l.push_back(t.length_fit.alpha);
    a_w.push_back(t.width_fit.alpha);
    ci_l.push_back(t.length_fit.alpha_ci);
    ci_w.push_back(t.width_fit.alpha_ci);
  }
  for (std::size_t i = 0; i + 1 < a_l.size(); ++i) {
    if (!(a_l[i] > a_l[i + 1] && ci_l[i].lo > ci_l[i + 1].hi)) o.pass = false;
    if (!(a_w[i] > a_w[i + 1] && ci_w[i].lo > ci_w[i + 1].hi)) o.pass = false;
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "alpha_L %.3f %.3f %.3f, alpha_W %.3f %.3f %.3f at p=0.8/0.9/0.95", a_l[0], a_l[1],
                a_l[2], a_w[0], a_w[1], a_w[2]);
  o.summary = buf;
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("rcwalk_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_quiet(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = cli::run_cli(args, out, err);
  if (code != 0) detail("%s", err.str().c_str());
  return code;
}

Outcome electrical_check() {
  Outcome o;
  const std::vector<std::pair<std::string, std::string>> laws = {
      {"homogeneous", "[law]\nlaw = homogeneous\nd = 2\n"},
      {"two_point", "[law]\nlaw = two_point\np = 0.8\nkappa = 0.1\nd = 2\n"},
      {"uniform_elliptic", "[law]\nlaw = uniform_elliptic\ndelta = 0.5\nd = 2\n"}};
  std::uint64_t failed = 0;
  for (const auto& [name, text] : laws) {
    auto dir = scratch("bounds_" + name);
    std::ofstream(dir / "bounds.cfg") << text
                                      << "[bounds]\nlambda = 1.5\nell = 6, 12, 24\ncv_nmax = 20\nnetworks = 100\n";
    int code = run_quiet({"validate-bounds", (dir / "bounds.cfg").string(), "--output.dir=" + dir.string()});
    std::istringstream rows(slurp(dir / "validate_bounds.csv"));
    std::string line;
    while (std::getline(rows, line))
      if (!line.empty() && line[0] != '#' && line.rfind("check,", 0) != 0) detail("%s: %s", name.c_str(), line.c_str());
    if (code != 0) ++failed;
  }
  o.pass = failed == 0;
  o.summary = failed == 0 ? "all checks hold for homogeneous, two_point and uniform_elliptic fields"
                          : std::to_string(failed) + " law(s) with a bound violation";
  return o;
}

Outcome drift_sum_check() {
  Outcome o;
  auto r = drift_sum_diagnostic({0.4, 0.2, 0.1, 0.05}, {1000, 10000}, 400, 1201);
  for (const auto& row : r.rows)
    detail("delta=%g L=%lld E sup|sum d|^2 = %.4g se %.2g, ratio %.4f se %.4f", row.delta,
           static_cast<long long>(row.L), row.sup_norm2.mean, row.sup_norm2.se, row.ratio, row.ratio_se);
  detail("trend in log10 L: slope %.4f se %.4f; max ratio %.4f", r.trend.slope, r.trend.slope_se, r.max_ratio);
  o.pass = std::isfinite(r.max_ratio) && r.trend.slope - kZ95 * r.trend.slope_se <= 0.0;
  char buf[160];
  std::snprintf(buf, sizeof buf, "max ratio %.3f; slope in log10 L %.4f, 95%% CI lower end %.4f (need <= 0)",
                r.max_ratio, r.trend.slope, r.trend.slope - kZ95 * r.trend.slope_se);
  o.summary = buf;
  return o;
}

Outcome reproducibility_check() {
  Outcome o;
  const std::string law_tp = "[experiment]\nseed = 13\n[law]\nlaw = two_point\np = 0.9\nkappa = 0.05\nd = 2\n";
  const std::string lam = "[lambda]\ngrid = 0.5, 1.5\n";
  const std::vector<std::pair<std::string, std::string>> jobs = {
      {"speed-curve", law_tp + lam + "[run]\nhorizon = 2000\nreplicas = 16\nmethods = plain, hyperplane-regen\n"},
      {"derivative-curve", law_tp + lam + "[run]\nhorizon = 2000\nreplicas = 16\nfd_step = 0.1\nbatches = 4\n"},
      {"nonmono-scan", law_tp + lam + "[run]\nhorizon = 2000\nreplicas = 8\n[scan]\nkappa = 0.01, 0.05\n"},
      {"trap-census", law_tp + "[census]\nbox = -4:4,-4:4\nhorizon = 16\npad = 12\ntail_samples = 200\n"},
      {"validate-bounds", law_tp + "[bounds]\nsamples = 3\nnetworks = 10\ncv_nmax = 10\n"},
      {"coupling-diag", law_tp + lam + "[run]\nhorizon = 1000\nreplicas = 16\n"}};
  const char* old = std::getenv("RCWALK_THREADS");
  const std::string saved = old ? old : "";
  std::uint64_t files = 0, mismatches = 0, failures = 0;
  for (const auto& [cmd, text] : jobs) {
    auto dir = scratch("repro_" + cmd);
    std::ofstream(dir / "run.cfg") << text;
    std::map<std::string, std::string> first;
    for (const char* threads : {"1", "4", "3"}) {
      setenv("RCWALK_THREADS", threads, 1);
      for (const auto& e : fs::directory_iterator(dir))
        if (e.path().filename() != "run.cfg") fs::remove(e.path());
      if (run_quiet({cmd, (dir / "run.cfg").string(), "--output.dir=" + dir.string()}) != 0) ++failures;
      std::map<std::string, std::string> now;
      for (const auto& e : fs::directory_iterator(dir))
        if (e.path().filename() != "run.cfg") now[e.path().filename().string()] = slurp(e.path());
      if (first.empty()) {
        first = now;
        files += now.size();
      } else if (now != first) {
        ++mismatches;
        detail("%s: outputs differ with RCWALK_THREADS=%s", cmd.c_str(), threads);
      }
    }
    detail("%s: %zu file(s) compared across 1, 4 and 3 threads", cmd.c_str(), first.size());
  }
  if (old)
    setenv("RCWALK_THREADS", saved.c_str(), 1);
  else
    unsetenv("RCWALK_THREADS");
  o.pass = mismatches == 0 && failures == 0 && files >= jobs.size();
  o.summary = std::to_string(files) + " output files, " + std::to_string(mismatches) + " mismatches, " +
              std::to_string(failures) + " failed runs";
  return o;
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

const std::map<int, Criterion>& criteria() {
  static const std::map<int, Criterion> m = {
      {1, {"homogeneous speed", homogeneous_speed_check}},
      {2, {"detailed balance", detailed_balance_check}},
      {3, {"Girsanov normalisation", girsanov_check}},
      {4, {"derivative consistency", derivative_check}},
      {5, {"window estimator scaling", window_scaling_check}},
      {6, {"d=1 coupling order", ordering_check}},
      {7, {"regeneration estimators", regeneration_check}},
      {8, {"low-disorder monotonicity", low_disorder_check}},
      {9, {"non-monotonicity search", nonmono_check}},
      {10, {"trap tails", trap_tail_check}},
      {11, {"electrical bounds", electrical_check}},
      {12, {"drift-sum diagnostic", drift_sum_check}},
      {13, {"reproducibility", reproducibility_check}}};
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rcwalk acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run one criterion (1-13); default all")->check(CLI::Range(1, 13));
  CLI11_PARSE(app, argc, argv);

  bool all = true;
  for (const auto& [id, c] : criteria()) {
    if (only != 0 && id != only) continue;
    std::fprintf(stderr, "criterion %d: %s\n", id, c.name);
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %2d %s  %s: %s\n", id, o.pass ? "PASS" : "FAIL", c.name, o.summary.c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
