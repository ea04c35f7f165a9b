#include "rcwalk/network.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>
#include <unordered_set>

namespace rcwalk {

int Network::add_vertex() { return vertices++; }

void Network::add_edge(int u, int v, double w) {
  if (u < 0 || v < 0 || u >= vertices || v >= vertices || u == v) throw InvalidArgument("bad network edge");
  if (!(w >= 0) || !std::isfinite(w)) throw InvalidArgument("edge weight must be finite and >= 0");
  edges.push_back({u, v, w});
}

void Network::validate() const {
  if (source < 0 || source >= vertices) throw InvalidArgument("source out of range");
  if (sinks.empty()) throw InvalidArgument("network needs a sink set");
  for (int s : sinks) {
    if (s < 0 || s >= vertices) throw InvalidArgument("sink out of range");
    if (s == source) throw InvalidArgument("source lies in the sink set");
  }
}

int TiltedNetwork::index(const LatticePoint& z) const {
  if (!box.contains(z)) throw InvalidArgument("site outside network box");
  return static_cast<int>((z[0] - box.x_lo) * box.height() + (z[1] - box.y_lo));
}

TiltedNetwork tilted_box_network(const ConductanceField& field, double lambda, const Box& box, std::int64_t shift) {
  if (field.dim() != 2) throw InvalidArgument("box networks are 2-D");
  TiltedNetwork tn;
  tn.box = box;
  tn.lambda = lambda;
  tn.shift = shift;
  tn.net.vertices = static_cast<int>(box.width() * box.height());
  tn.net.sites.resize(static_cast<std::size_t>(tn.net.vertices));
  for (std::int64_t i = box.x_lo; i <= box.x_hi; ++i)
    for (std::int64_t j = box.y_lo; j <= box.y_hi; ++j) tn.net.sites[static_cast<std::size_t>(tn.index({i, j}))] = {i, j};
  for (std::int64_t i = box.x_lo; i <= box.x_hi; ++i) {
    for (std::int64_t j = box.y_lo; j <= box.y_hi; ++j) {
      LatticePoint z{i, j};
      double a = static_cast<double>(i - shift);
      if (i < box.x_hi)
        tn.net.add_edge(tn.index(z), tn.index({i + 1, j}), field.conductance(z, 0) * std::exp(lambda * (2 * a + 1)));
      if (j < box.y_hi)
        tn.net.add_edge(tn.index(z), tn.index({i, j + 1}), field.conductance(z, 1) * std::exp(lambda * 2 * a));
    }
  }
  return tn;
}

namespace {

std::vector<std::vector<std::pair<int, double>>> adjacency(const Network& net) {
  std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(net.vertices));
  for (const auto& e : net.edges) {
    if (e.w <= 0) continue;
    adj[e.u].push_back({e.v, e.w});
    adj[e.v].push_back({e.u, e.w});
  }
  return adj;
}

}  // namespace

DirichletSolution solve_dirichlet(const Network& net, double tol) {
  net.validate();
  const auto adj = adjacency(net);
  const auto n = static_cast<std::size_t>(net.vertices);
  std::vector<std::int8_t> role(n, 0);  // 0 free, 1 source, 2 sink
  role[net.source] = 1;
  for (int s : net.sinks) role[s] = 2;

  DirichletSolution sol;
  sol.potentials.assign(n, 0.0);
  sol.flow.assign(net.edges.size(), 0.0);

  // Source-to-sink connectivity
  std::vector<std::uint8_t> seen(n, 0);
  std::deque<int> q{net.source};
  seen[net.source] = 1;
  bool hit = false;
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    for (auto [v, w] : adj[u]) {
      if (seen[v]) continue;
      seen[v] = 1;
      if (role[v] == 2) {
        hit = true;
        continue;
      }
      q.push_back(v);
    }
  }
  if (!hit) {
    sol.connected = false;
    for (std::size_t v = 0; v < n; ++v)
      if (seen[v] && role[v] != 2) sol.potentials[v] = 1.0;
    return sol;
  }

  // Free vertices attached to the boundary get unknowns; floating ones stay at 0.
  std::vector<int> unknown(n, -1);
  std::fill(seen.begin(), seen.end(), 0);
  q.clear();
  for (std::size_t v = 0; v < n; ++v)
    if (role[v] != 0) {
      seen[v] = 1;
      q.push_back(static_cast<int>(v));
    }
  int m = 0;
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    for (auto [v, w] : adj[u]) {
      if (seen[v]) continue;
      seen[v] = 1;
      unknown[v] = m++;
      q.push_back(v);
    }
  }
  sol.potentials[net.source] = 1.0;
  if (m > 0) {
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    for (std::size_t u = 0; u < n; ++u) {
      int iu = unknown[u];
      if (iu < 0) continue;
      double diag = 0.0;
      for (auto [v, w] : adj[u]) {
        diag += w;
        if (unknown[v] >= 0)
          trip.emplace_back(iu, unknown[v], -w);
        else if (role[v] == 1)
          b[iu] += w;
      }
      trip.emplace_back(iu, iu, diag);
    }
    Eigen::SparseMatrix<double> A(m, m);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(tol);
    cg.setMaxIterations(10 * std::max(net.vertices, 1));
    cg.compute(A);
    Eigen::VectorXd x = cg.solve(b);
    sol.iterations = static_cast<int>(cg.iterations());
    sol.relative_residual = cg.error();
    if (cg.info() != Eigen::Success)
      throw NumericalError("conjugate gradient did not converge, relative residual " +
                           std::to_string(cg.error()));
    for (std::size_t u = 0; u < n; ++u)
      if (unknown[u] >= 0) sol.potentials[u] = x[unknown[u]];
  }
  for (std::size_t k = 0; k < net.edges.size(); ++k) {
    const auto& e = net.edges[k];
    sol.flow[k] = e.w * (sol.potentials[e.u] - sol.potentials[e.v]);
    sol.energy += sol.flow[k] * (sol.potentials[e.u] - sol.potentials[e.v]);
  }
  for (auto [v, w] : adj[net.source]) sol.effective_conductance += w * (1.0 - sol.potentials[v]);
  return sol;
}

double nash_williams_bound(const Network& net, const std::vector<std::vector<int>>& cuts) {
  net.validate();
  if (cuts.empty()) throw InvalidArgument("need at least one cut");
  std::unordered_set<int> used;
  std::vector<std::uint8_t> is_sink(static_cast<std::size_t>(net.vertices), 0);
  for (int s : net.sinks) is_sink[s] = 1;
  double inv_sum = 0.0;
  for (const auto& cut : cuts) {
    std::vector<std::uint8_t> removed(net.edges.size(), 0);
    double total = 0.0;
    for (int k : cut) {
      if (k < 0 || static_cast<std::size_t>(k) >= net.edges.size()) throw InvalidArgument("cut edge out of range");
      if (!used.insert(k).second) throw InvalidArgument("cut sets are not disjoint");
      removed[k] = 1;
      total += net.edges[k].w;
    }
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(net.vertices));
    for (std::size_t k = 0; k < net.edges.size(); ++k) {
      if (removed[k] || net.edges[k].w <= 0) continue;
      adj[net.edges[k].u].push_back(net.edges[k].v);
      adj[net.edges[k].v].push_back(net.edges[k].u);
    }
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(net.vertices), 0);
    std::deque<int> q{net.source};
    seen[net.source] = 1;
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      if (is_sink[u]) throw InvalidArgument("cut does not separate source from sink");
      for (int v : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          q.push_back(v);
        }
    }
    if (total <= 0) return 0.0;
    inv_sum += 1.0 / total;
  }
  return 1.0 / inv_sum;
}

std::vector<std::vector<double>> kron_reduce(const Network& net, const std::vector<int>& terminals) {
  const int n = net.vertices;
  if (n > 8000) throw InvalidArgument("network too large for dense reduction");
  std::vector<double> C(static_cast<std::size_t>(n) * n, 0.0);
  auto at = [&](int i, int j) -> double& { return C[static_cast<std::size_t>(i) * n + j]; };
  for (const auto& e : net.edges) {
    at(e.u, e.v) += e.w;
    at(e.v, e.u) += e.w;
  }
  std::vector<std::uint8_t> keep(static_cast<std::size_t>(n), 0), gone(static_cast<std::size_t>(n), 0);
  for (int t : terminals) {
    if (t < 0 || t >= n) throw InvalidArgument("terminal out of range");
    keep[t] = 1;
  }
  std::vector<int> nb;
  std::vector<double> wk;
  for (int k = 0; k < n; ++k) {
    if (keep[k]) continue;
    nb.clear();
    wk.clear();
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      double c = at(k, j);
      if (c > 0 && !gone[j] && j != k) {
        nb.push_back(j);
        wk.push_back(c);
        s += c;
      }
    }
    gone[k] = 1;
    if (s <= 0) continue;
    for (std::size_t a = 0; a < nb.size(); ++a) {
      at(nb[a], k) = 0.0;
      at(k, nb[a]) = 0.0;
      for (std::size_t b = a + 1; b < nb.size(); ++b) {
        double add = wk[a] * wk[b] / s;
        at(nb[a], nb[b]) += add;
        at(nb[b], nb[a]) += add;
      }
    }
  }
  std::vector<std::vector<double>> out(terminals.size(), std::vector<double>(terminals.size(), 0.0));
  for (std::size_t a = 0; a < terminals.size(); ++a)
    for (std::size_t b = 0; b < terminals.size(); ++b)
      if (a != b) out[a][b] = at(terminals[a], terminals[b]);
  return out;
}

ExitProbability exit_probability_exact(const ConductanceField& field, double lambda, const LatticePoint& x,
                                       std::int64_t ell, std::int64_t height) {
  if (field.dim() != 2) throw InvalidArgument("exit probability is computed in d=2");
  if (ell < 3) throw InvalidArgument("ell must be >= 3");
  if (height < 0) throw InvalidArgument("box height must be >= 0");
  const std::int64_t right = ell / 3;
  const std::int64_t x1 = x[0], x2 = x[1];
  const std::int64_t cols = ell + right - 1;  // interior columns x1-ell+1 .. x1+right-1
  const std::int64_t rows = 2 * height + 1;
  Network net;
  net.vertices = static_cast<int>(cols * rows + 2);
  const int L = static_cast<int>(cols * rows), R = L + 1;
  auto id = [&](std::int64_t i, std::int64_t j) -> int {
    if (i == x1 - ell) return L;
    if (i == x1 + right) return R;
    return static_cast<int>((i - (x1 - ell + 1)) * rows + (j - (x2 - height)));
  };
  for (std::int64_t i = x1 - ell; i <= x1 + right; ++i) {
    for (std::int64_t j = x2 - height; j <= x2 + height; ++j) {
      LatticePoint z{i, j};
      double a = static_cast<double>(i - x1);
      bool face = i == x1 - ell || i == x1 + right;
      if (i < x1 + right) net.add_edge(id(i, j), id(i + 1, j), field.conductance(z, 0) * std::exp(lambda * (2 * a + 1)));
      if (j < x2 + height && !face)
        net.add_edge(id(i, j), id(i, j + 1), field.conductance(z, 1) * std::exp(lambda * 2 * a));
    }
  }
  const int xs = id(x1, x2);
  auto red = kron_reduce(net, {xs, L, R});
  ExitProbability out;
  out.c_left = red[0][1];
  out.c_right = red[0][2];
  double tot = out.c_left + out.c_right;
  if (!(tot > 0)) throw NumericalError("site is disconnected from both faces");
  out.probability = out.c_left / tot;
  out.log_probability = std::log(out.c_left) - std::log(tot);
  return out;
}

double lateral_layer_sum(double lambda, std::int64_t ell) {
  double s = 0.0;
  for (std::int64_t i = -ell; i <= ell / 3; ++i) s += std::exp(2.0 * lambda * static_cast<double>(i + 1));
  return std::exp(-lambda * static_cast<double>(ell)) * s;
}

double lateral_layer_constant(double lambda) {
  if (!(lambda > 0)) throw InvalidArgument("lambda must be positive");
  return std::exp(2.0 * lambda) / (1.0 - std::exp(-2.0 * lambda));
}

CarneVaropoulosReport carne_varopoulos_check(const BiasedKernel& kernel, const LatticePoint& x, int n_max) {
  if (n_max < 1 || n_max > 30) throw InvalidArgument("n_max must lie in 1..30");
  CarneVaropoulosReport rep;
  rep.n_max = n_max;
  const double log_pi_x = kernel.log_reversible_measure(x);
  std::unordered_map<LatticePoint, double, LatticePointHash> log_pi;
  auto lpi = [&](const LatticePoint& z) {
    auto it = log_pi.find(z);
    if (it != log_pi.end()) return it->second;
    double v = kernel.log_reversible_measure(z);
    log_pi.emplace(z, v);
    return v;
  };
  std::unordered_map<LatticePoint, double, LatticePointHash> cur{{x, 1.0}}, nxt;
  const int d = kernel.dim();
  for (int n = 1; n <= n_max; ++n) {
    nxt.clear();
    for (const auto& [y, p] : cur) {
      auto s = kernel.step_distribution(y);
      for (int k = 0; k < 2 * d; ++k)
        if (s.probs[k] > 0) nxt[y.neighbor(k)] += p * s.probs[k];
    }
    std::swap(cur, nxt);
    for (const auto& [y, p] : cur) {
      if (p <= 0) continue;
      double dist = static_cast<double>(y.l1_distance(x));
      double log_bound = std::log(2.0) + 0.5 * (lpi(y) - log_pi_x) - dist * dist / (2.0 * n);
      double r = std::log(p) - log_bound;
      rep.max_log_ratio = std::max(rep.max_log_ratio, r);
      ++rep.checked;
      if (r > 1e-12) ++rep.violations;
    }
    if (d == 2) {
      for (std::int64_t a = -n; a <= n; ++a) {
        std::int64_t rem = n - std::llabs(a);
        for (std::int64_t b = -rem; b <= rem; ++b) {
          LatticePoint y{x[0] + a, x[1] + b};
          auto it = cur.find(y);
          if (it == cur.end() || it->second <= 0) ++rep.unreachable;
        }
      }
    }
  }
  return rep;
}

KappaEscape kappa_component_escape(const BiasedKernel& kernel, const LatticePoint& x, const Box& box,
                                   int survival_steps) {
  KappaEscape out;
  out.component = kappa_component(kernel.field(), x, box);
  out.survival.assign(static_cast<std::size_t>(survival_steps) + 1, 0.0);
  if (out.component.sites.empty()) return out;
  if (out.component.inconclusive) throw NumericalError("kappa component touches the box boundary");
  const auto& sites = out.component.sites;
  const int m = static_cast<int>(sites.size());
  std::unordered_map<LatticePoint, int, LatticePointHash> idx;
  for (int i = 0; i < m; ++i) idx[sites[static_cast<std::size_t>(i)]] = i;
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    auto s = kernel.step_distribution(sites[static_cast<std::size_t>(i)]);
    for (int k = 0; k < 4; ++k) {
      auto it = idx.find(sites[static_cast<std::size_t>(i)].neighbor(k));
      if (it != idx.end()) Q(i, it->second) += s.probs[k];
    }
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(m, m) - Q;
  Eigen::VectorXd t = A.partialPivLu().solve(Eigen::VectorXd::Ones(m));
  out.mean_exit_time = t[idx.at(x)];
  Eigen::RowVectorXd mass = Eigen::RowVectorXd::Zero(m);
  mass[idx.at(x)] = 1.0;
  for (int n = 0; n <= survival_steps; ++n) {
    out.survival[static_cast<std::size_t>(n)] = mass.sum();
    mass = mass * Q;
  }
  return out;
}

void write_network_csv(std::ostream& os, const Network& net) {
  os << "u,v,weight\n";
  os.precision(17);
  for (const auto& e : net.edges) os << e.u << "," << e.v << "," << e.w << "\n";
}

void write_potentials_csv(std::ostream& os, const Network& net, const DirichletSolution& sol) {
  os << "vertex,potential\n";
  os.precision(17);
  for (int v = 0; v < net.vertices; ++v) os << v << "," << sol.potentials[static_cast<std::size_t>(v)] << "\n";
}

}  // namespace rcwalk
