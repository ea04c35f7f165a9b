#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "rcwalk/kernel.hpp"
#include "rcwalk/traps.hpp"

namespace rcwalk {

struct NetworkEdge {
  int u = 0;
  int v = 0;
  double w = 0.0;
};

// Undirected weighted graph with one source vertex and a sink set; all other
// vertices are free (insulated).
struct Network {
  int vertices = 0;
  std::vector<NetworkEdge> edges;
  int source = 0;
  std::vector<int> sinks;
  std::vector<LatticePoint> sites;  // optional labels

  int add_vertex();
  void add_edge(int u, int v, double w);
  void validate() const;
};

// Tilted weights w(y,z) = omega(y,z) e^{lambda (y+z).e1 - 2 lambda shift} over a 2-D box.
struct TiltedNetwork {
  Network net;
  Box box;
  double lambda = 0.0;
  std::int64_t shift = 0;
  int index(const LatticePoint& z) const;
};

TiltedNetwork tilted_box_network(const ConductanceField& field, double lambda, const Box& box, std::int64_t shift);

struct DirichletSolution {
  std::vector<double> potentials;  // source 1, sinks 0
  std::vector<double> flow;        // per edge, oriented u -> v
  double effective_conductance = 0.0;
  double energy = 0.0;
  double relative_residual = 0.0;
  int iterations = 0;
  bool connected = true;
};

// Weighted Laplacian, Jacobi-preconditioned conjugate gradient.
DirichletSolution solve_dirichlet(const Network& net, double tol = 1e-10);

// Upper bound on C_eff from disjoint source/sink cut sets (edge indices).
double nash_williams_bound(const Network& net, const std::vector<std::vector<int>>& cuts);

// Subtraction-free star-mesh reduction onto the given terminals; returns the
// effective conductance matrix between them.
std::vector<std::vector<double>> kron_reduce(const Network& net, const std::vector<int>& terminals);

struct ExitProbability {
  double probability = 0.0;
  double log_probability = 0.0;
  double c_left = 0.0;   // effective conductance x <-> left face, in units of e^{2 lambda x.e1}
  double c_right = 0.0;  // x <-> right face
};

// P(hit column x.e1 - ell before column x.e1 + floor(ell/3)) inside rows
// x.e2 +- height; the top and bottom rows are reflecting.
ExitProbability exit_probability_exact(const ConductanceField& field, double lambda, const LatticePoint& x,
                                       std::int64_t ell, std::int64_t height);

// e^{-lambda ell} sum_{i = x1-ell}^{x1+ell/3} e^{2 lambda (i+1)}, shifted by e^{-2 lambda x1}.
double lateral_layer_sum(double lambda, std::int64_t ell);
// e^{2 lambda} / (1 - e^{-2 lambda}); bounds lateral_layer_sum / e^{-lambda ell/3}.
double lateral_layer_constant(double lambda);

struct CarneVaropoulosReport {
  std::uint64_t checked = 0;
  std::uint64_t violations = 0;
  std::uint64_t unreachable = 0;
  double max_log_ratio = -INFINITY;  // max log(P / bound) over reachable points
  int n_max = 0;
};

// Exact n-step probabilities by forward recursion, compared with
// 2 sqrt(pi(y)/pi(x)) exp(-|y-x|_1^2 / (2n)) for n = 1..n_max.
CarneVaropoulosReport carne_varopoulos_check(const BiasedKernel& kernel, const LatticePoint& x, int n_max);

struct KappaEscape {
  KappaComponent component;
  double mean_exit_time = 0.0;
  std::vector<double> survival;  // P(T > n), n = 0..
};

KappaEscape kappa_component_escape(const BiasedKernel& kernel, const LatticePoint& x, const Box& box,
                                   int survival_steps = 64);

void write_network_csv(std::ostream& os, const Network& net);
void write_potentials_csv(std::ostream& os, const Network& net, const DirichletSolution& sol);

}  // namespace rcwalk
