#include "rcwalk/kernel.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"

namespace rcwalk {

LatticePoint WalkPath::end() const {
  LatticePoint x = start;
  for (auto k : steps) x.move(k);
  return x;
}

std::vector<LatticePoint> WalkPath::positions() const {
  std::vector<LatticePoint> out;
  out.reserve(steps.size() + 1);
  LatticePoint x = start;
  out.push_back(x);
  for (auto k : steps) {
    x.move(k);
    out.push_back(x);
  }
  return out;
}

std::vector<std::int64_t> WalkPath::e1_trace() const {
  std::vector<std::int64_t> out;
  out.reserve(steps.size() + 1);
  std::int64_t v = start[0];
  const int d = start.dim;
  out.push_back(v);
  for (auto k : steps) {
    if (k == 0)
      ++v;
    else if (k == d)
      --v;
    out.push_back(v);
  }
  return out;
}

DegenerateVertex::DegenerateVertex(const LatticePoint& site, std::shared_ptr<const WalkPath> partial)
    : NumericalError("degenerate vertex at " + site.to_string() + ": all incident conductances are 0"),
      site_(site),
      partial_(std::move(partial)) {}

double StepDistribution::threshold(int k) const {
  if (k <= 0) return 0.0;
  if (k >= 2 * dim) return 1.0;
  double cum = 0.0;
  for (int j = 0; j < k; ++j) cum += probs[j];
  return cum;
}

std::vector<double> StepDistribution::thresholds() const {
  std::vector<double> q(2 * dim + 1, 0.0);
  double cum = 0.0;
  for (int k = 0; k < 2 * dim; ++k) {
    cum += probs[k];
    q[k + 1] = cum;
  }
  q[2 * dim] = 1.0;
  return q;
}

double log_partition(const LocalConductances& c, double lambda) {
  const int d = c.dim;
  double s = c.w[0] + c.w[d] * std::exp(-2.0 * lambda);
  double side = 0.0;
  for (int i = 1; i < d; ++i) side += c.w[i] + c.w[i + d];
  s += side * std::exp(-lambda);
  return lambda + std::log(s);
}

BiasedKernel::BiasedKernel(ConductanceField field, double lambda)
    : field_(std::move(field)), lambda_(lambda), e_m1_(std::exp(-lambda)), e_m2_(std::exp(-2.0 * lambda)) {
  if (!std::isfinite(lambda) || lambda < 0) throw InvalidArgument("lambda must be finite and >= 0");
}

std::vector<double> BiasedKernel::cumulative_thresholds(const LatticePoint& x) const {
  return step_distribution(x).thresholds();
}

int BiasedKernel::step_from_uniform(const LatticePoint& x, double u) const {
  if (!(u > 0.0 && u <= 1.0)) throw InvalidArgument("uniform must lie in (0,1]");
  return step_distribution(x).select(u);
}

std::vector<double> BiasedKernel::local_drift(const LatticePoint& x) const {
  auto s = step_distribution(x);
  std::vector<double> out(dim());
  for (int i = 0; i < dim(); ++i) out[i] = s.drift(i);
  return out;
}

double BiasedKernel::local_second_moment(const LatticePoint& x) const { return step_distribution(x).second_moment(); }

double BiasedKernel::log_reversible_measure(const LatticePoint& x) const {
  return 2.0 * lambda_ * static_cast<double>(x[0]) + log_partition(local_conductances(field_, x), lambda_);
}

double BiasedKernel::reversible_measure(const LatticePoint& x) const { return std::exp(log_reversible_measure(x)); }

WalkPath run_path(const BiasedKernel& kernel, const LatticePoint& start, std::int64_t n_steps, CounterRng& rng,
                  bool store_uniforms) {
  if (n_steps < 0) throw InvalidArgument("n_steps must be >= 0");
  if (start.dim != kernel.dim()) throw InvalidArgument("start point dimension mismatch");
  WalkPath path;
  path.start = start;
  path.steps.reserve(static_cast<std::size_t>(n_steps));
  if (store_uniforms) {
    path.uniforms.emplace();
    path.uniforms->reserve(static_cast<std::size_t>(n_steps));
  }
  LatticePoint x = start;
  StepDistribution s;
  for (std::int64_t n = 0; n < n_steps; ++n) {
    if (!tilt_into(local_conductances(kernel.field(), x), kernel.exp_minus_lambda(), kernel.exp_minus_2lambda(), s))
      throw DegenerateVertex(x, std::make_shared<WalkPath>(path));
    double u = rng.uniform();
    int k = s.select(u);
    path.steps.push_back(static_cast<std::uint8_t>(k));
    if (store_uniforms) path.uniforms->push_back(u);
    x.move(k);
  }
  return path;
}

WalkPath replay(const BiasedKernel& kernel, const LatticePoint& start, const std::vector<double>& uniforms) {
  WalkPath path;
  path.start = start;
  path.uniforms = uniforms;
  path.steps.reserve(uniforms.size());
  LatticePoint x = start;
  for (double u : uniforms) {
    if (!(u > 0.0 && u <= 1.0)) throw InvalidArgument("uniform must lie in (0,1]");
    StepDistribution s;
    if (!tilt_into(local_conductances(kernel.field(), x), kernel.exp_minus_lambda(), kernel.exp_minus_2lambda(), s))
      throw DegenerateVertex(x, std::make_shared<WalkPath>(path));
    int k = s.select(u);
    path.steps.push_back(static_cast<std::uint8_t>(k));
    x.move(k);
  }
  return path;
}

double homogeneous_speed(double lambda, int d) {
  if (lambda < 0) throw InvalidArgument("lambda must be >= 0");
  // (e^l - e^-l) / (e^l + e^-l + 2d - 2), divided through by e^l
  const double a = std::exp(-2.0 * lambda);
  const double b = std::exp(-lambda);
  return (1.0 - a) / (1.0 + a + (2.0 * d - 2.0) * b);
}

double homogeneous_speed_derivative(double lambda, int d) {
  // (4 + 4(d-1) cosh l) / (2 cosh l + 2d - 2)^2, scaled by e^{-2l}
  const double b = std::exp(-lambda);
  const double a = b * b;
  const double num = 4.0 * a + 2.0 * (d - 1.0) * (b + a * b);
  const double den = 1.0 + a + (2.0 * d - 2.0) * b;
  return num / (den * den);
}

namespace {

template <class T>
void put_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw InvalidArgument("path dump truncated");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  T v;
  std::memcpy(&v, &bits, sizeof(T));
  return v;
}

}  // namespace

void write_path_dump(const WalkPath& path, const BiasedKernel& kernel, const std::string& stem) {
  std::ofstream os(stem + ".rcwp", std::ios::binary);
  if (!os) throw InvalidArgument("cannot open " + stem + ".rcwp");
  os.write("RCWP", 4);
  put_le<std::uint32_t>(os, 1);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(path.start.dim));
  put_le<std::uint32_t>(os, path.uniforms ? 1u : 0u);
  for (int i = 0; i < path.start.dim; ++i) put_le<std::int64_t>(os, path.start[i]);
  put_le<std::uint64_t>(os, path.steps.size());
  os.write(reinterpret_cast<const char*>(path.steps.data()), static_cast<std::streamsize>(path.steps.size()));
  if (path.uniforms)
    for (double u : *path.uniforms) put_le<double>(os, u);

  nlohmann::ordered_json meta;
  meta["format"] = "rcwp";
  meta["version"] = 1;
  meta["law"] = format_law_spec(LawSpec{kernel.field().law(), kernel.dim(), kernel.field().seed()});
  meta["lambda"] = kernel.lambda();
  meta["dim"] = kernel.dim();
  meta["n_steps"] = path.steps.size();
  meta["has_uniforms"] = path.uniforms.has_value();
  std::ofstream js(stem + ".json");
  js << meta.dump(2) << "\n";
}

PathDump read_path_dump(const std::string& stem) {
  std::ifstream is(stem + ".rcwp", std::ios::binary);
  if (!is) throw InvalidArgument("cannot open " + stem + ".rcwp");
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "RCWP", 4) != 0) throw InvalidArgument("not a path dump");
  auto version = get_le<std::uint32_t>(is);
  if (version != 1) throw InvalidArgument("unsupported path dump version");
  auto dim = get_le<std::uint32_t>(is);
  auto flags = get_le<std::uint32_t>(is);
  PathDump out;
  out.path.start = LatticePoint(static_cast<int>(dim));
  for (std::uint32_t i = 0; i < dim; ++i) out.path.start[static_cast<int>(i)] = get_le<std::int64_t>(is);
  auto n = get_le<std::uint64_t>(is);
  out.path.steps.resize(n);
  if (!is.read(reinterpret_cast<char*>(out.path.steps.data()), static_cast<std::streamsize>(n)))
    throw InvalidArgument("path dump truncated");
  if (flags & 1u) {
    out.path.uniforms.emplace(n);
    for (auto& u : *out.path.uniforms) u = get_le<double>(is);
  }
  std::ifstream js(stem + ".json");
  if (js) out.sidecar_json.assign(std::istreambuf_iterator<char>(js), std::istreambuf_iterator<char>());
  return out;
}

}  // namespace rcwalk
