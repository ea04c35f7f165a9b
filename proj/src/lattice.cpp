#include "rcwalk/lattice.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>

namespace rcwalk {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw InvalidArgument("law spec: bad number for " + key + ": '" + v + "'");
  }
}

enum Kind { kHomog = 0, kSym = 1, kInterval = 2, kTwoPoint = 3 };

}  // namespace

LatticePoint::LatticePoint(int d) : dim(d) {
  if (d < 1 || d > kMaxDim) throw InvalidArgument("dimension must be in 1.." + std::to_string(kMaxDim));
}

LatticePoint::LatticePoint(std::initializer_list<std::int64_t> c) : LatticePoint(static_cast<int>(c.size())) {
  int i = 0;
  for (auto v : c) coords[i++] = v;
}

LatticePoint LatticePoint::neighbor(int k) const {
  LatticePoint y = *this;
  y.move(k);
  return y;
}

void LatticePoint::move(int k) {
  if (k < dim)
    ++coords[k];
  else
    --coords[k - dim];
}

std::int64_t LatticePoint::l1_distance(const LatticePoint& other) const {
  std::int64_t s = 0;
  for (int i = 0; i < dim; ++i) s += std::llabs(coords[i] - other.coords[i]);
  return s;
}

std::string LatticePoint::to_string() const {
  std::string s = "(";
  for (int i = 0; i < dim; ++i) {
    if (i) s += ",";
    s += std::to_string(coords[i]);
  }
  return s + ")";
}

std::size_t LatticePointHash::operator()(const LatticePoint& p) const noexcept {
  std::uint64_t h = static_cast<std::uint64_t>(p.dim);
  for (int i = 0; i < p.dim; ++i) h = hash_combine(h, static_cast<std::uint64_t>(p.coords[i]));
  return static_cast<std::size_t>(h);
}

std::size_t EdgeHash::operator()(const Edge& e) const noexcept {
  return static_cast<std::size_t>(hash_combine(LatticePointHash{}(e.base), static_cast<std::uint64_t>(e.axis)));
}

Edge canonical_edge(const LatticePoint& a, const LatticePoint& b) {
  if (a.dim != b.dim) throw InvalidArgument("edge endpoints differ in dimension");
  int axis = -1;
  for (int i = 0; i < a.dim; ++i) {
    std::int64_t diff = b.coords[i] - a.coords[i];
    if (diff == 0) continue;
    if (axis >= 0 || (diff != 1 && diff != -1)) throw InvalidArgument("points are not nearest neighbours");
    axis = i;
  }
  if (axis < 0) throw InvalidArgument("points are not nearest neighbours");
  return b.coords[axis] > a.coords[axis] ? Edge{a, axis} : Edge{b, axis};
}

Edge incident_edge(const LatticePoint& x, int k) {
  if (k < x.dim) return Edge{x, k};
  return Edge{x.neighbor(k), k - x.dim};
}

void validate_law(const EnvironmentLaw& law) {
  std::visit(
      [](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Homogeneous>) {
          if (!(l.c > 0) || !std::isfinite(l.c)) throw InvalidArgument("homogeneous conductance must be positive");
        } else if constexpr (std::is_same_v<T, UniformElliptic>) {
          if (!(l.delta >= 0 && l.delta < 1)) throw InvalidArgument("delta must lie in [0,1)");
        } else {
          if (!(l.p > 0 && l.p < 1)) throw InvalidArgument("p must lie in (0,1)");
          if (!(l.kappa > 0 && l.kappa <= 1)) throw InvalidArgument("kappa must lie in (0,1]");
        }
      },
      law);
}

std::string law_name(const EnvironmentLaw& law) {
  switch (law.index()) {
    case 0: return "homogeneous";
    case 1: return "uniform_elliptic";
    default: return "two_point";
  }
}

double sample_conductance(const EnvironmentLaw& law, double u) {
  if (auto* h = std::get_if<Homogeneous>(&law)) return h->c;
  if (auto* ue = std::get_if<UniformElliptic>(&law)) {
    if (ue->marginal == Marginal::TwoPointSym) return u < 0.5 ? 1.0 - ue->delta : 1.0 + ue->delta;
    return 1.0 - ue->delta + 2.0 * ue->delta * u;
  }
  const auto& tp = std::get<TwoPoint>(law);
  return u < tp.p ? 1.0 : tp.kappa;
}

double law_cdf(const EnvironmentLaw& law, double w) {
  if (auto* h = std::get_if<Homogeneous>(&law)) return w >= h->c ? 1.0 : 0.0;
  if (auto* ue = std::get_if<UniformElliptic>(&law)) {
    double lo = 1.0 - ue->delta, hi = 1.0 + ue->delta;
    if (ue->marginal == Marginal::TwoPointSym) {
      if (ue->delta == 0) return w >= 1.0 ? 1.0 : 0.0;
      return w < lo ? 0.0 : (w < hi ? 0.5 : 1.0);
    }
    if (ue->delta == 0) return w >= 1.0 ? 1.0 : 0.0;
    if (w <= lo) return 0.0;
    if (w >= hi) return 1.0;
    return (w - lo) / (hi - lo);
  }
  const auto& tp = std::get<TwoPoint>(law);
  if (tp.kappa == 1.0) return w >= 1.0 ? 1.0 : 0.0;
  return w < tp.kappa ? 0.0 : (w < 1.0 ? 1.0 - tp.p : 1.0);
}

double ellipticity_ratio(const EnvironmentLaw& law) {
  if (std::holds_alternative<Homogeneous>(law)) return 1.0;
  if (auto* ue = std::get_if<UniformElliptic>(&law)) return (1.0 + ue->delta) / (1.0 - ue->delta);
  return 1.0 / std::get<TwoPoint>(law).kappa;
}

std::string format_law_spec(const LawSpec& spec) {
  std::string s = "law=" + law_name(spec.law);
  if (auto* h = std::get_if<Homogeneous>(&spec.law)) {
    s += ", c=" + fmt_double(h->c);
  } else if (auto* ue = std::get_if<UniformElliptic>(&spec.law)) {
    s += ", delta=" + fmt_double(ue->delta);
    s += std::string(", marginal=") + (ue->marginal == Marginal::TwoPointSym ? "two_point_sym" : "uniform_interval");
  } else {
    const auto& tp = std::get<TwoPoint>(spec.law);
    s += ", p=" + fmt_double(tp.p) + ", kappa=" + fmt_double(tp.kappa);
  }
  s += ", seed=" + std::to_string(spec.seed) + ", d=" + std::to_string(spec.dim);
  return s;
}

LawSpec parse_law_spec(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) throw InvalidArgument("law spec: expected key=value, got '" + item + "'");
    auto key = trim(item.substr(0, eq));
    if (kv.count(key)) throw InvalidArgument("law spec: duplicate key " + key);
    kv[key] = trim(item.substr(eq + 1));
  }
  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    auto v = it->second;
    kv.erase(it);
    return v;
  };
  LawSpec spec;
  auto name = take("law");
  if (!name) throw InvalidArgument("law spec: missing 'law'");
  if (*name == "homogeneous") {
    Homogeneous h;
    if (auto c = take("c")) h.c = parse_real("c", *c);
    spec.law = h;
  } else if (*name == "uniform_elliptic") {
    UniformElliptic ue;
    auto delta = take("delta");
    if (!delta) throw InvalidArgument("law spec: uniform_elliptic needs delta");
    ue.delta = parse_real("delta", *delta);
    if (auto m = take("marginal")) {
      if (*m == "two_point_sym")
        ue.marginal = Marginal::TwoPointSym;
      else if (*m == "uniform_interval")
        ue.marginal = Marginal::UniformInterval;
      else
        throw InvalidArgument("law spec: unknown marginal " + *m);
    }
    spec.law = ue;
  } else if (*name == "two_point") {
    TwoPoint tp;
    auto p = take("p");
    auto kappa = take("kappa");
    if (!p || !kappa) throw InvalidArgument("law spec: two_point needs p and kappa");
    tp.p = parse_real("p", *p);
    tp.kappa = parse_real("kappa", *kappa);
    spec.law = tp;
  } else {
    throw InvalidArgument("law spec: unknown law " + *name);
  }
  if (auto seed = take("seed")) {
    try {
      std::size_t pos = 0;
      spec.seed = std::stoull(*seed, &pos);
      if (pos != seed->size() || (*seed)[0] == '-') throw std::invalid_argument(*seed);
    } catch (const std::exception&) {
      throw InvalidArgument("law spec: bad seed '" + *seed + "'");
    }
  }
  if (auto d = take("d")) {
    double v = parse_real("d", *d);
    if (v != std::floor(v) || v < 1 || v > kMaxDim) throw InvalidArgument("law spec: d out of range");
    spec.dim = static_cast<int>(v);
  }
  if (!kv.empty()) throw InvalidArgument("law spec: unknown key " + kv.begin()->first);
  validate_law(spec.law);
  return spec;
}

double edge_uniform(std::uint64_t seed, const LatticePoint& base, int axis) {
  std::uint64_t h = hash_combine(mix64(seed ^ static_cast<std::uint64_t>(StreamTag::Field)), static_cast<std::uint64_t>(axis));
  for (int i = 0; i < base.dim; ++i) h = hash_combine(h, static_cast<std::uint64_t>(base.coords[i]));
  return to_unit_closed_open(h);
}

ConductanceField::ConductanceField(EnvironmentLaw law, int dim, std::uint64_t seed)
    : law_(std::move(law)), dim_(dim), seed_(seed) {
  validate_law(law_);
  if (dim < 1 || dim > kMaxDim) throw InvalidArgument("dimension must be in 1.." + std::to_string(kMaxDim));
  if (auto* h = std::get_if<Homogeneous>(&law_)) {
    kind_ = kHomog;
    c_ = h->c;
  } else if (auto* ue = std::get_if<UniformElliptic>(&law_)) {
    kind_ = ue->marginal == Marginal::TwoPointSym ? kSym : kInterval;
    a_ = 1.0 - ue->delta;
    b_ = 1.0 + ue->delta;
    if (ue->delta == 0) kind_ = kHomog;
  } else {
    const auto& tp = std::get<TwoPoint>(law_);
    kind_ = kTwoPoint;
    a_ = tp.p;
    b_ = tp.kappa;
  }
}

double ConductanceField::draw(const LatticePoint& base, int axis) const {
  switch (kind_) {
    case kHomog: return c_;
    case kSym: return edge_uniform(seed_, base, axis) < 0.5 ? a_ : b_;
    case kInterval: return a_ + (b_ - a_) * edge_uniform(seed_, base, axis);
    default: {
      bool open = edge_uniform(seed_, base, axis) < a_;
      if (projected_) return open ? 1.0 : 0.0;
      return open ? 1.0 : b_;
    }
  }
}

bool ConductanceField::drawn_open(const LatticePoint& base, int axis) const {
  if (kind_ == kTwoPoint) return edge_uniform(seed_, base, axis) < a_;
  return draw(base, axis) == 1.0;
}

double ConductanceField::conductance(const LatticePoint& base, int axis) const {
  if (overrides_) {
    auto it = overrides_->find(Edge{base, axis});
    if (it != overrides_->end()) {
      if (projected_ && it->second != 1.0) return 0.0;
      return it->second;
    }
  }
  return draw(base, axis);
}

double ConductanceField::conductance_toward(const LatticePoint& x, int k) const {
  if (k < dim_) return conductance(x, k);
  LatticePoint b = x;
  --b.coords[k - dim_];
  return conductance(b, k - dim_);
}

bool ConductanceField::is_open(const LatticePoint& base, int axis) const {
  if (overrides_) {
    auto it = overrides_->find(Edge{base, axis});
    if (it != overrides_->end()) return it->second == 1.0;
  }
  return drawn_open(base, axis);
}

bool ConductanceField::is_open_toward(const LatticePoint& x, int k) const {
  if (k < dim_) return is_open(x, k);
  LatticePoint b = x;
  --b.coords[k - dim_];
  return is_open(b, k - dim_);
}

ConductanceField ConductanceField::with_overrides(const EdgeOverrides& pins) const {
  auto merged = overrides_ ? std::make_shared<EdgeOverrides>(*overrides_) : std::make_shared<EdgeOverrides>();
  for (const auto& [e, w] : pins) {
    if (e.base.dim != dim_ || e.axis < 0 || e.axis >= dim_) throw InvalidArgument("override edge has wrong dimension");
    if (!(w > 0) || !std::isfinite(w)) throw InvalidArgument("override conductance must be positive");
    (*merged)[e] = w;
  }
  ConductanceField out = *this;
  out.overrides_ = std::move(merged);
  return out;
}

ConductanceField zero_kappa_projection(const ConductanceField& field) {
  if (!std::holds_alternative<TwoPoint>(field.law_)) throw InvalidArgument("kappa projection needs a two-point law");
  ConductanceField out = field;
  out.projected_ = true;
  return out;
}

}  // namespace rcwalk
