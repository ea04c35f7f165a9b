#include "cli.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "config.hpp"
#include "json.hpp"
#include "rcwalk/coupling.hpp"
#include "rcwalk/estimate.hpp"
#include "rcwalk/network.hpp"
#include "rcwalk/parallel.hpp"
#include "rcwalk/traps.hpp"

#ifndef RCWALK_BUILD_ID
#define RCWALK_BUILD_ID "unknown"
#endif

namespace rcwalk::cli {

const char* build_id() { return RCWALK_BUILD_ID; }

namespace {

namespace fs = std::filesystem;

struct Run {
  std::string command;
  Config cfg;
  std::ostream& out;
  std::ostream& err;
  std::uint64_t seed = 1;
  fs::path dir;
};

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::string header(const Run& run) {
  std::string h = "# rcwalk " + run.command + "\n";
  h += "# build: " + std::string(build_id()) + "\n";
  h += "# config_hash: fnv1a64:" + hex64(run.cfg.hash()) + "\n";
  h += "# seed: " + std::to_string(run.seed) + "\n";
  std::istringstream lines(run.cfg.canonical());
  std::string line;
  while (std::getline(lines, line)) h += "# config: " + line + "\n";
  return h;
}

nlohmann::ordered_json meta(const Run& run) {
  nlohmann::ordered_json m;
  m["command"] = run.command;
  m["build"] = build_id();
  m["config_hash"] = "fnv1a64:" + hex64(run.cfg.hash());
  m["seed"] = run.seed;
  nlohmann::ordered_json c = nlohmann::ordered_json::object();
  for (const auto& [k, v] : run.cfg.values()) c[k] = v;
  m["config"] = std::move(c);
  return m;
}

fs::path write_file(const Run& run, const std::string& name, const std::string& body) {
  std::error_code ec;
  fs::create_directories(run.dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + run.dir.string() + ": " + ec.message());
  fs::path p = run.dir / name;
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + p.string());
  f << body;
  f.close();
  if (!f) throw ConfigError("write failed for " + p.string());
  run.out << "wrote " << p.string() << "\n";
  return p;
}

std::string csv(const Run& run, const std::string& columns, const std::string& rows) {
  return header(run) + columns + "\n" + rows;
}

std::set<std::string> common_keys(std::initializer_list<std::string> extra) {
  std::set<std::string> k = {"experiment.name", "experiment.seed", "law.*", "output.dir"};
  k.insert(extra.begin(), extra.end());
  return k;
}

struct RunSize {
  std::int64_t horizon = 0;
  std::uint64_t replicas = 0;
};

RunSize run_size(const Config& cfg, std::int64_t n_default, std::uint64_t r_default) {
  RunSize s{cfg.get_int("run.horizon", n_default), cfg.get_uint("run.replicas", r_default)};
  if (s.horizon < 1) throw ConfigError("run.horizon must be >= 1");
  if (s.replicas < 2) throw ConfigError("run.replicas must be >= 2");
  return s;
}

std::string exact_or_nan(const EnvironmentLaw& law, double v) {
  return std::holds_alternative<Homogeneous>(law) ? num(v) : "nan";
}

const TwoPoint& require_two_point(const LawSpec& spec, const std::string& command) {
  auto* tp = std::get_if<TwoPoint>(&spec.law);
  if (!tp) throw ConfigError(command + " needs law.law = two_point");
  if (spec.dim != 2) throw ConfigError(command + " runs in d = 2");
  return *tp;
}

// ---------------------------------------------------------------- speed-curve

int cmd_speed_curve(Run& run) {
  const auto& cfg = run.cfg;
  cfg.restrict_to(common_keys({"lambda.*", "run.horizon", "run.replicas", "run.methods", "run.confirm_margin",
                               "run.lambda_s"}));
  auto spec = law_from_config(cfg);
  auto grid = lambda_grid(cfg);
  auto size = run_size(cfg, 10000, 100);
  std::vector<std::string> methods = cfg.has("run.methods") ? cfg.get_list("run.methods") : std::vector<std::string>{"plain"};
  if (methods.empty()) throw ConfigError("run.methods is empty");
  RegenOptions ropt;
  ropt.confirm_margin = cfg.get_int("run.confirm_margin", 64);
  if (ropt.confirm_margin < 0) throw ConfigError("run.confirm_margin must be >= 0");
  for (const auto& m : methods) {
    if (m != "plain" && m != "super-regen" && m != "hyperplane-regen")
      throw ConfigError("unknown method '" + m + "' (plain, super-regen, hyperplane-regen)");
    if (m == "super-regen") {
      const double beta = ellipticity_ratio(spec.law);
      const double ls = cfg.get_double("run.lambda_s", grid.front());
      const double floor = y_drift_floor(beta, spec.dim);
      if (!(ls > floor)) throw ConfigError("super-regen needs run.lambda_s > " + num(floor));
      if (grid.front() < ls) throw ConfigError("super-regen needs every lambda >= run.lambda_s");
      ropt.lambda_s = ls;
    }
  }

  std::string rows;
  for (const auto& m : methods) {
    run.err << "[speed-curve] method " << m << "\n";
    if (m == "plain") {
      auto samples = speed_curve_samples(spec.law, spec.dim, grid, size.horizon, size.replicas, run.seed);
      for (std::size_t j = 0; j < grid.size(); ++j) {
        auto ms = mean_stderr(samples[j]);
        rows += m + "," + num(grid[j]) + "," + num(ms.mean) + "," + num(ms.se) + "," + std::to_string(size.replicas) +
                "," + std::to_string(size.horizon) + "," + exact_or_nan(spec.law, homogeneous_speed(grid[j], spec.dim)) +
                "\n";
      }
      continue;
    }
    auto method = m == "super-regen" ? EstimateMethod::SuperRegen : EstimateMethod::HyperplaneRegen;
    for (double l : grid) {
      auto s = estimate_velocity_regen(spec.law, spec.dim, l, size.horizon, size.replicas, run.seed, method, ropt);
      rows += m + "," + num(l) + "," + num(s.e1()) + "," + num(s.e1_se()) + "," + std::to_string(size.replicas) + "," +
              std::to_string(size.horizon) + "," + exact_or_nan(spec.law, homogeneous_speed(l, spec.dim)) + "\n";
      run.err << "[speed-curve] " << m << " lambda " << l << " done\n";
    }
  }
  write_file(run, "speed_curve.csv", csv(run, "method,lambda,v1_hat,stderr,replicas,horizon,v1_exact", rows));
  return kOk;
}

// ----------------------------------------------------------- derivative-curve

int cmd_derivative_curve(Run& run) {
  const auto& cfg = run.cfg;
  cfg.restrict_to(common_keys({"lambda.*", "run.horizon", "run.replicas", "run.fd_step", "run.batches"}));
  auto spec = law_from_config(cfg);
  auto grid = lambda_grid(cfg);
  auto size = run_size(cfg, 10000, 200);
  const double h = cfg.get_double("run.fd_step", 0.05);
  const auto batches = cfg.get_uint("run.batches", 20);
  if (!(h > 0)) throw ConfigError("run.fd_step must be > 0");
  if (grid.front() <= 0) throw ConfigError("derivative-curve needs lambda > 0");
  if (grid.front() - h < 0) throw ConfigError("run.fd_step reaches below lambda = 0 at lambda = " + num(grid.front()));
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (h > 0.5 * (grid[i] - grid[i - 1]))
      throw ConfigError("run.fd_step exceeds half the lambda grid spacing near lambda = " + num(grid[i]));
  if (batches < 2) throw ConfigError("run.batches must be >= 2");

  std::string rows;
  for (double l : grid) {
    auto ends = simulate_replicas(spec.law, spec.dim, l, size.horizon, size.replicas, run.seed);
    std::vector<double> v(ends.size());
    for (std::size_t r = 0; r < ends.size(); ++r) v[r] = ends[r].X[0] / static_cast<double>(size.horizon);
    auto vm = mean_stderr(v);
    auto cov = derivative_from_replicas(ends, spec.dim, size.horizon, batches);
    auto fd = estimate_derivative_fd(spec.law, spec.dim, l, h, size.horizon, size.replicas, run.seed);
    rows += num(l) + "," + num(vm.mean) + "," + num(vm.se) + "," + num(cov.e1()) + "," + num(cov.e1_se()) + "," +
            num(fd.e1()) + "," + num(fd.e1_se()) + "," +
            exact_or_nan(spec.law, homogeneous_speed_derivative(l, spec.dim)) + "\n";
    run.err << "[derivative-curve] lambda " << l << " done\n";
  }
  write_file(run, "derivative_curve.csv",
             csv(run, "lambda,v1_hat,stderr,dv1_hat,dv1_stderr,dv1_fd,dv1_fd_stderr,dv1_exact", rows));
  return kOk;
}

// --------------------------------------------------------------- nonmono-scan

int cmd_nonmono_scan(Run& run) {
  const auto& cfg = run.cfg;
  cfg.restrict_to(common_keys({"lambda.*", "run.horizon", "run.replicas", "scan.p", "scan.kappa", "scan.ladder",
                               "scan.ladder_radius", "scan.z"}));
  auto spec = law_from_config(cfg);
  const auto base = require_two_point(spec, "nonmono-scan");
  auto grid = lambda_grid(cfg);
  auto size = run_size(cfg, 10000, 100);
  auto ps = cfg.has("scan.p") ? cfg.get_doubles("scan.p") : std::vector<double>{base.p};
  auto kappas = cfg.has("scan.kappa") ? cfg.get_doubles("scan.kappa") : std::vector<double>{base.kappa};
  if (ps.empty() || kappas.empty()) throw ConfigError("scan.p and scan.kappa must not be empty");
  ScanOptions opt;
  opt.ladder = cfg.get_bool("scan.ladder", true);
  opt.ladder_radius = cfg.get_int("scan.ladder_radius", 32);
  opt.z = cfg.get_double("scan.z", 3.0);
  if (opt.ladder_radius < 2) throw ConfigError("scan.ladder_radius must be >= 2");
  if (!(opt.z > 0)) throw ConfigError("scan.z must be > 0");
  for (double p : ps)
    for (double k : kappas) {
      try {
        validate_law(TwoPoint{p, k});
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("scan cell: ") + e.what());
      }
    }

  std::string curve, pairs;
  std::size_t flagged = 0;
  for (double p : ps)
    for (double k : kappas) {
      auto cell = nonmono_scan_cell(TwoPoint{p, k}, grid, size.horizon, size.replicas, run.seed, opt);
      for (const auto& pt : cell.points)
        curve += num(p) + "," + num(k) + "," + num(pt.lambda) + "," + num(pt.v1.mean) + "," + num(pt.v1.se) + "," +
                 num(pt.mean_ta.mean) + "," + num(pt.mean_ta.se) + "," + std::to_string(pt.dead_ends) + "," +
                 std::to_string(pt.censored) + "\n";
      for (const auto& d : cell.decreases)
        pairs += num(p) + "," + num(k) + "," + num(d.lambda1) + "," + num(d.lambda2) + "," + num(d.drop) + "," +
                 num(d.joint_se) + "\n";
      flagged += cell.decreases.size();
      run.err << "[nonmono-scan] p " << p << " kappa " << k << ": " << cell.decreases.size() << " decreasing pairs\n";
    }
  write_file(run, "nonmono_curve.csv",
             csv(run, "p,kappa,lambda,v1_hat,stderr,mean_ta,ta_stderr,dead_ends,censored", curve));
  write_file(run, "nonmono_pairs.csv", csv(run, "p,kappa,lambda1,lambda2,drop,joint_se", pairs));
  run.out << "decreasing pairs: " << flagged << "\n";
  return kOk;
}

// ---------------------------------------------------------------- trap-census

int cmd_trap_census(Run& run) {
  const auto& cfg = run.cfg;
  cfg.restrict_to(common_keys({"census.box", "census.horizon", "census.pad", "census.tail_samples",
                               "census.tail_nmax", "census.tail_radius"}));
  auto spec = law_from_config(cfg);
  const auto law = require_two_point(spec, "trap-census");
  Box box;
  try {
    box = Box::parse(cfg.get_string("census.box", "-10:10,-10:10"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("census.box: ") + e.what());
  }
  const auto horizon = cfg.get_int("census.horizon", 32);
  const auto pad = cfg.get_int("census.pad", 24);
  const auto tail_samples = cfg.get_uint("census.tail_samples", 0);
  TrapTailOptions topt;
  topt.horizon = static_cast<int>(horizon);
  topt.n_max = cfg.get_int("census.tail_nmax", 12);
  topt.box_radius = cfg.get_int("census.tail_radius", 24);
  if (horizon < 1 || horizon > 4096) throw ConfigError("census.horizon must lie in 1..4096");
  if (pad < 1) throw ConfigError("census.pad must be >= 1");
  if (topt.n_max < 1 || topt.box_radius < 2) throw ConfigError("census tail settings out of range");
  if (box.width() * box.height() > 4'000'000) throw ConfigError("census.box is too large");

  ConductanceField field(law, 2, run.seed);
  nlohmann::ordered_json j;
  j["meta"] = meta(run);
  j["census"] = trap_census(field, box, static_cast<int>(horizon), pad);
  if (tail_samples > 0) {
    run.err << "[trap-census] tail statistics over " << tail_samples << " fields\n";
    auto t = trap_tail_statistics(law, tail_samples, run.seed, topt);
    auto rows = [](const std::vector<TailRow>& tail) {
      nlohmann::ordered_json a = nlohmann::ordered_json::array();
      for (const auto& r : tail)
        a.push_back({{"n", r.n}, {"count", r.count}, {"prob", r.prob}, {"ci_lo", r.ci.lo}, {"ci_hi", r.ci.hi}});
      return a;
    };
    auto fit = [](const DecayFit& f) {
      return nlohmann::ordered_json{{"valid", f.valid},     {"alpha", f.alpha},     {"alpha_ci_lo", f.alpha_ci.lo},
                                    {"alpha_ci_hi", f.alpha_ci.hi}, {"slope", f.fit.slope}, {"r2", f.fit.r2}};
    };
    j["tails"] = {{"samples", t.samples},           {"in_cluster", t.in_cluster},     {"bad", t.bad},
                  {"inconclusive", t.inconclusive}, {"capped", t.capped},             {"length", rows(t.length_tail)},
                  {"width", rows(t.width_tail)},    {"length_fit", fit(t.length_fit)}, {"width_fit", fit(t.width_fit)}};
  }
  write_file(run, "trap_census.json", j.dump(2) + "\n");
  return kOk;
}

// ------------------------------------------------------------ validate-bounds

struct Check {
  std::string name, parameter;
  double value = 0.0, bound = 0.0;
  bool ok = true;
};

Network random_grid(int side, CounterRng& rng, double lo, double hi) {
  Network net;
  net.vertices = side * side;
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j) {
      int v = i * side + j;
      if (i + 1 < side) net.add_edge(v, v + side, lo + (hi - lo) * rng.uniform01());
      if (j + 1 < side) net.add_edge(v, v + 1, lo + (hi - lo) * rng.uniform01());
    }
  net.source = 0;
  net.sinks = {side * side - 1};
  return net;
}

int cmd_validate_bounds(Run& run) {
  const auto& cfg = run.cfg;
  cfg.restrict_to(common_keys({"bounds.lambda", "bounds.ell", "bounds.height", "bounds.samples", "bounds.cv_nmax",
                               "bounds.networks", "bounds.box"}));
  auto spec = law_from_config(cfg);
  if (spec.dim != 2) throw ConfigError("validate-bounds runs in d = 2");
  const double lambda = cfg.get_double("bounds.lambda", 1.5);
  auto ells = cfg.has("bounds.ell") ? cfg.get_doubles("bounds.ell") : std::vector<double>{6, 12, 24};
  const auto height = cfg.get_int("bounds.height", 8);
  const auto samples = cfg.get_uint("bounds.samples", 8);
  const auto cv_nmax = cfg.get_int("bounds.cv_nmax", 20);
  const auto networks = cfg.get_uint("bounds.networks", 100);
  Box box;
  try {
    box = Box::parse(cfg.get_string("bounds.box", "-6:6,-6:6"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("bounds.box: ") + e.what());
  }
  if (!(lambda > 0)) throw ConfigError("bounds.lambda must be > 0");
  if (ells.size() < 2) throw ConfigError("bounds.ell needs at least two values");
  for (double e : ells)
    if (e < 3 || e != std::floor(e) || e > 300) throw ConfigError("bounds.ell values must be integers in 3..300");
  if (height < 1 || samples < 2 || networks < 1) throw ConfigError("bounds.height >= 1, bounds.samples >= 2, bounds.networks >= 1");
  if (cv_nmax < 1 || cv_nmax > 30) throw ConfigError("bounds.cv_nmax must lie in 1..30");
  if (box.width() * box.height() > 20000) throw ConfigError("bounds.box is too large");

  std::vector<Check> checks;
  auto aux = [&](std::uint64_t i) { return CounterRng(derive_seed(run.seed, StreamTag::Aux, i)); };

  // series / parallel, exact elimination
  {
    double worst_s = 0.0, worst_p = 0.0;
    for (std::uint64_t t = 0; t < networks; ++t) {
      auto rng = aux(t);
      Network s, p;
      s.vertices = 6;
      p.vertices = 2;
      double inv = 0.0, sum = 0.0;
      for (int k = 0; k < 5; ++k) {
        double w = 0.01 + 10 * rng.uniform01();
        s.add_edge(k, k + 1, w);
        inv += 1.0 / w;
        double q = 0.01 + 10 * rng.uniform01();
        p.add_edge(0, 1, q);
        sum += q;
      }
      worst_s = std::max(worst_s, std::fabs(kron_reduce(s, {0, 5})[0][1] * inv - 1.0));
      worst_p = std::max(worst_p, std::fabs(kron_reduce(p, {0, 1})[0][1] / sum - 1.0));
    }
    checks.push_back({"series", "edges=5", worst_s, 1e-12, worst_s <= 1e-12});
    checks.push_back({"parallel", "edges=5", worst_p, 1e-12, worst_p <= 1e-12});
  }

  // CG solver against exact elimination, and Nash-Williams on random grids
  {
    double worst = 0.0;
    std::uint64_t nw_viol = 0;
    for (std::uint64_t t = 0; t < networks; ++t) {
      auto rng = aux(1000 + t);
      auto g5 = random_grid(5, rng, 0.1, 2.0);
      double exact = kron_reduce(g5, {g5.source, g5.sinks[0]})[0][1];
      worst = std::max(worst, std::fabs(solve_dirichlet(g5, 1e-13).effective_conductance / exact - 1.0));
      auto g6 = random_grid(6, rng, 0.01, 5.0);
      std::vector<std::vector<int>> cuts(5);
      for (std::size_t k = 0; k < g6.edges.size(); ++k)
        if (g6.edges[k].v - g6.edges[k].u == 6) cuts[g6.edges[k].u / 6].push_back(static_cast<int>(k));
      double c = solve_dirichlet(g6).effective_conductance;
      if (c > nash_williams_bound(g6, cuts) * (1 + 1e-9)) ++nw_viol;
    }
    checks.push_back({"solver_5x5", "networks=" + std::to_string(networks), worst, 1e-8, worst <= 1e-8});
    checks.push_back({"nash_williams", "networks=" + std::to_string(networks), static_cast<double>(nw_viol), 0,
                      nw_viol == 0});
  }

  // tilted box network: Nash-Williams with square annuli around the centre
  {
    ConductanceField field(spec.law, 2, derive_seed(run.seed, StreamTag::Field, 0));
    LatticePoint c{(box.x_lo + box.x_hi) / 2, (box.y_lo + box.y_hi) / 2};
    auto tn = tilted_box_network(field, lambda, box, c[0]);
    tn.net.source = tn.index(c);
    for (int v = 0; v < tn.net.vertices; ++v)
      if (box.on_boundary(tn.net.sites[v])) tn.net.sinks.push_back(v);
    auto ring = [&](const LatticePoint& z) { return std::max(std::llabs(z[0] - c[0]), std::llabs(z[1] - c[1])); };
    const std::int64_t m = std::min({c[0] - box.x_lo, box.x_hi - c[0], c[1] - box.y_lo, box.y_hi - c[1]});
    std::vector<std::vector<int>> cuts(static_cast<std::size_t>(m));
    for (std::size_t k = 0; k < tn.net.edges.size(); ++k) {
      auto a = ring(tn.net.sites[tn.net.edges[k].u]), b = ring(tn.net.sites[tn.net.edges[k].v]);
      auto lo = std::min(a, b);
      if (a != b && lo < m) cuts[static_cast<std::size_t>(lo)].push_back(static_cast<int>(k));
    }
    double ce = solve_dirichlet(tn.net).effective_conductance;
    double nw = nash_williams_bound(tn.net, cuts);
    checks.push_back({"box_nash_williams", "box=" + box.to_string(), ce, nw, ce <= nw * (1 + 1e-9)});
  }

  // exit-probability slope in ell
  {
    std::vector<double> means, ses;
    for (double e : ells) {
      std::vector<double> lp(samples);
      parallel_for(samples, [&](std::size_t s) {
        ConductanceField field(spec.law, 2, derive_seed(run.seed, StreamTag::Field, s));
        lp[s] = exit_probability_exact(field, lambda, LatticePoint{0, 0}, static_cast<std::int64_t>(e), height)
                    .log_probability;
      });
      auto ms = mean_stderr(lp);
      means.push_back(ms.mean);
      ses.push_back(ms.se);
      checks.push_back({"exit_log_probability", "ell=" + num(e), ms.mean, NAN, std::isfinite(ms.mean)});
      run.err << "[validate-bounds] ell " << e << " done\n";
    }
    double xbar = 0.0;
    for (double e : ells) xbar += e;
    xbar /= static_cast<double>(ells.size());
    double sxx = 0.0;
    for (double e : ells) sxx += (e - xbar) * (e - xbar);
    double slope = 0.0, var = 0.0;
    for (std::size_t i = 0; i < ells.size(); ++i) {
      double a = (ells[i] - xbar) / sxx;
      slope += a * means[i];
      var += a * a * ses[i] * ses[i];
    }
    const double bound = -lambda / 3.0 + 1.959963984540054 * std::sqrt(var);
    checks.push_back({"exit_slope", "lambda=" + num(lambda), slope, bound, slope <= bound});
  }

  // layer sums
  {
    double worst = 0.0;
    for (double e : ells) {
      auto ell = static_cast<std::int64_t>(e);
      worst = std::max(worst, lateral_layer_sum(lambda, ell) / std::exp(-lambda * e / 3.0));
    }
    double cst = lateral_layer_constant(lambda);
    checks.push_back({"layer_sum", "lambda=" + num(lambda), worst, cst, worst <= cst * (1 + 1e-12)});
  }

  // Carne-Varopoulos by exact dynamic programming
  {
    std::vector<std::uint64_t> viol(samples), checked(samples);
    parallel_for(samples, [&](std::size_t s) {
      BiasedKernel k(ConductanceField(spec.law, 2, derive_seed(run.seed, StreamTag::Field, s)), lambda);
      auto rep = carne_varopoulos_check(k, LatticePoint{0, 0}, static_cast<int>(cv_nmax));
      viol[s] = rep.violations;
      checked[s] = rep.checked;
    });
    std::uint64_t v = 0, c = 0;
    for (std::size_t s = 0; s < samples; ++s) {
      v += viol[s];
      c += checked[s];
    }
    checks.push_back({"carne_varopoulos", "n_max=" + std::to_string(cv_nmax) + ";points=" + std::to_string(c),
                      static_cast<double>(v), 0, v == 0});
  }

  std::string rows;
  bool all = true;
  for (const auto& c : checks) {
    std::string param = c.parameter;
    std::replace(param.begin(), param.end(), ',', ' ');
    rows += c.name + "," + param + "," + num(c.value) + "," + num(c.bound) + "," + (c.ok ? "1" : "0") + "\n";
    all = all && c.ok;
  }
  write_file(run, "validate_bounds.csv", csv(run, "check,parameter,value,bound,ok", rows));
  for (const auto& c : checks)
    if (!c.ok) run.err << "violation: " << c.name << " " << c.parameter << " value " << num(c.value) << " bound " << num(c.bound) << "\n";
  run.out << (all ? "all bounds hold" : "bound violation") << "\n";
  return all ? kOk : kBoundViolation;
}

// -------------------------------------------------------------- coupling-diag

int cmd_coupling_diag(Run& run) {
  const auto& cfg = run.cfg;
  cfg.restrict_to(common_keys({"lambda.*", "run.horizon", "run.replicas", "coupling.reference", "coupling.ordering_dim"}));
  auto spec = law_from_config(cfg);
  auto grid = lambda_grid(cfg);
  auto size = run_size(cfg, 2000, 100);
  LawSpec ref;
  try {
    ref = parse_law_spec(cfg.get_string("coupling.reference", "law=homogeneous"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("coupling.reference: ") + e.what());
  }
  const auto odim = cfg.get_int("coupling.ordering_dim", 1);
  if (odim < 1 || odim > kMaxDim) throw ConfigError("coupling.ordering_dim out of range");

  std::string rows;
  for (double l : grid) {
    auto r = coupling_divergence_rate(spec.law, ref.law, l, spec.dim, size.horizon, size.replicas, run.seed);
    rows += num(l) + "," + num(r.rate) + "," + num(r.std_error) + "," + std::to_string(r.disagreements) + "," +
            std::to_string(r.steps) + "\n";
  }
  write_file(run, "coupling_divergence.csv",
             csv(run, "lambda,divergence_rate,stderr,disagreements,steps", rows));

  bool ok = true;
  if (grid.size() >= 2) {
    auto oc = coupled_ordering_check(spec.law, static_cast<int>(odim), grid, size.horizon, size.replicas, run.seed);
    std::string orow = std::to_string(odim) + "," + std::to_string(oc.replicas) + "," +
                       std::to_string(oc.violating_replicas) + "," + std::to_string(oc.violations) + "," +
                       std::to_string(oc.comparisons) + "\n";
    write_file(run, "coupling_ordering.csv",
               csv(run, "dim,replicas,violating_replicas,violations,comparisons", orow));
    // pathwise order only holds in d = 1
    if (odim == 1 && oc.violations > 0) ok = false;
  }
  return ok ? kOk : kBoundViolation;
}

using Command = int (*)(Run&);

const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> m = {
      {"speed-curve", cmd_speed_curve},     {"derivative-curve", cmd_derivative_curve},
      {"nonmono-scan", cmd_nonmono_scan},   {"trap-census", cmd_trap_census},
      {"validate-bounds", cmd_validate_bounds}, {"coupling-diag", cmd_coupling_diag}};
  return m;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Biased random walk among random conductances: experiment runner.\n"
               "Overrides: --section.key=value. Threads: RCWALK_THREADS."};
  app.set_version_flag("--version", std::string(build_id()));
  std::string command, config_path;
  std::vector<std::string> names;
  for (const auto& [k, v] : commands()) names.push_back(k);
  app.add_option("command", command, "subcommand")->required()->check(CLI::IsMember(names));
  app.add_option("config", config_path, "config file")->required();
  app.allow_extras();
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  Run run{command, {}, out, err, 1, {}};
  try {
    run.cfg = Config::load(config_path);
    auto extra = app.remaining();
    for (std::size_t i = 0; i < extra.size(); ++i) {
      const auto& tok = extra[i];
      if (tok.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + tok + "'");
      auto body = tok.substr(2);
      auto eq = body.find('=');
      if (eq != std::string::npos) {
        run.cfg.set(body.substr(0, eq), body.substr(eq + 1));
      } else {
        if (i + 1 >= extra.size()) throw ConfigError("override " + tok + " needs a value");
        run.cfg.set(body, extra[++i]);
      }
    }
    run.seed = run.cfg.get_uint("experiment.seed", 1);
    run.dir = run.cfg.get_string("output.dir", ".");
    err << "[" << command << "] config hash fnv1a64:" << hex64(run.cfg.hash()) << ", threads " << configured_threads()
        << "\n";
    return commands().at(command)(run);
  } catch (const InvalidArgument& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNumericalFailure;
  }
}

}  // namespace rcwalk::cli
