#include "mrf/registry.hpp"

#include <algorithm>
#include <cmath>

namespace mrf {

namespace {

Vector vec1(double a) { return Vector::Constant(1, a); }

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

ParamMap merge_params(const std::string& name, const ParamMap& defaults, const ParamMap& given) {
  ParamMap out = defaults;
  for (const auto& [key, value] : given) {
    if (!defaults.count(key)) {
      throw ConfigError("unknown parameter '" + key + "' for example '" + name + "'");
    }
    if (!std::isfinite(value)) throw ConfigError("parameter '" + key + "' must be finite");
    out[key] = value;
  }
  return out;
}

ControlSystem power_law_system(double r, double s, double m1, double m2) {
  ControlSystem sys;
  sys.name = "power_law";
  sys.state_dim = 1;
  sys.controls = {vec1(-1.0), vec1(1.0)};
  sys.dynamics = [r, m1](const Vector& x, const Vector& a) -> Vector {
    return vec1(a[0] * m1 * std::pow(std::fabs(x[0]), r));
  };
  sys.lagrangian = [s, m2](const Vector& x, const Vector&) { return m2 * std::pow(std::fabs(x[0]), s); };
  return sys;
}

std::vector<SmoothPiece> sign_pieces(std::function<double(double)> slope) {
  std::vector<SmoothPiece> pieces;
  pieces.push_back({[](const Vector& x) { return std::max(0.0, -x[0]); },
                    [slope](const Vector& x) { return vec1(slope(std::fabs(x[0]))); }});
  pieces.push_back({[](const Vector& x) { return std::max(0.0, x[0]); },
                    [slope](const Vector& x) { return vec1(-slope(std::fabs(x[0]))); }});
  return pieces;
}

ExampleDefaults one_dim_defaults() {
  ExampleDefaults d;
  d.box_lo = vec1(-3.0);
  d.box_hi = vec1(3.0);
  d.verify_spacing = 1e-3;
  d.delta = 1e-3;
  d.oracle_lo = vec1(-2.0);
  d.oracle_hi = vec1(2.0);
  d.oracle_spacing = 0.01;
  d.oracle_h = 0.01;
  d.initial_states = {vec1(1.0)};
  return d;
}

void check_range(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

std::vector<std::string> example_names() { return {"minimum_time_1d", "power_law", "spiral", "petrov_demo"}; }

ParamMap example_default_params(const std::string& name) {
  if (name == "minimum_time_1d") return {};
  if (name == "power_law") return {{"r", 0.0}, {"s", 0.0}, {"M1", 1.0}, {"M2", 1.0}};
  if (name == "spiral") return {{"epsilon", 0.5}, {"k", 1.0}, {"collar", 0.1}};
  if (name == "petrov_demo") return {{"c", 1.0}, {"q", 0.5}, {"delta", 1.0}};
  throw ConfigError("unknown example '" + name + "'; known: minimum_time_1d, power_law, spiral, petrov_demo");
}

CandidateMRF power_law_candidate(double r, double s, double m1, double m2, double p0_bar) {
  const double e = s - r + 1.0;
  const double ratio = m2 / m1;
  CandidateMRF mrf;
  mrf.name = "power_law";
  mrf.p0_bar = p0_bar;
  if (e == 0.0) {
    mrf.value = [ratio](const Vector& x) { return ratio * std::log(std::fabs(x[0])); };
  } else {
    const double c = ratio / e;
    mrf.value = [c, e](const Vector& x) { return c * std::pow(std::fabs(x[0]), e); };
  }
  const double q = s - r;
  mrf.pieces = sign_pieces([ratio, q](double ax) { return ratio * std::pow(ax, q); });
  return mrf;
}

CandidateMRF spiral_candidate(double epsilon, double p0_bar) {
  CandidateMRF mrf;
  mrf.name = "spiral";
  mrf.p0_bar = p0_bar;
  mrf.value = [epsilon](const Vector& z) {
    const double r = z.norm();
    if (r <= 2.0) return 2.0 * epsilon + std::pow(r - 1.0, 3) / 3.0;
    if (r <= 3.0) return epsilon * (4.0 - r) + std::pow(3.0 - r, 3) / 3.0;
    return epsilon * (4.0 - r);
  };
  auto radial = [](const Vector& z) -> Vector { return z / z.norm(); };
  mrf.pieces.push_back({[](const Vector& z) { return std::max(0.0, z.norm() - 2.0); },
                        [radial](const Vector& z) -> Vector {
                          const double r = z.norm();
                          return (r - 1.0) * (r - 1.0) * radial(z);
                        }});
  mrf.pieces.push_back({[](const Vector& z) {
                          const double r = z.norm();
                          return std::max({0.0, 2.0 - r, r - 3.0});
                        },
                        [epsilon, radial](const Vector& z) -> Vector {
                          const double r = z.norm();
                          return -(epsilon + (3.0 - r) * (3.0 - r)) * radial(z);
                        }});
  mrf.pieces.push_back({[](const Vector& z) { return std::max(0.0, 3.0 - z.norm()); },
                        [epsilon, radial](const Vector& z) -> Vector { return -epsilon * radial(z); }});
  return mrf;
}

ExampleSpec make_example(const std::string& name, const ParamMap& given, std::optional<double> p0_bar) {
  ExampleSpec ex;
  ex.name = name;
  ex.params = merge_params(name, example_default_params(name), given);
  const auto& P = ex.params;

  if (name == "minimum_time_1d" || name == "power_law") {
    const double r = name == "power_law" ? P.at("r") : 0.0;
    const double s = name == "power_law" ? P.at("s") : 0.0;
    const double m1 = name == "power_law" ? P.at("M1") : 1.0;
    const double m2 = name == "power_law" ? P.at("M2") : 1.0;
    check_range(m1 > 0.0 && m2 > 0.0, "power_law needs M1 > 0 and M2 > 0");
    ex.system = power_law_system(r, s, m1, m2);
    ex.system.name = name;
    ex.target = point_target(1);
    ex.mrf = power_law_candidate(r, s, m1, m2, p0_bar.value_or(0.9));
    ex.defaults = one_dim_defaults();
    const double e = s - r + 1.0;
    if (e > 0.0) {
      const double c = m2 / (m1 * e);
      ex.defaults.sigma = c * std::pow(2.0, e);
      ex.value_function = [c, e](const Vector& x) { return c * std::pow(std::fabs(x[0]), e); };
    }
  } else if (name == "spiral") {
    const double eps = P.at("epsilon");
    const double k = P.at("k");
    const double collar = P.at("collar");
    check_range(eps > 0.0, "spiral epsilon must be positive");
    check_range(k >= 0.0 && k <= 1.0, "spiral k must lie in [0, 1]");
    check_range(collar > 0.0 && collar < 1.0, "spiral collar must lie in ]0, 1[");

    ControlSystem sys;
    sys.name = "spiral";
    sys.state_dim = 2;
    sys.controls = {vec1(-1.0), vec1(1.0)};
    sys.dynamics = [](const Vector& z, const Vector& a) -> Vector {
      const double gap = z.norm() - 1.0;
      return vec2(z[1], -z[0]) / gap - a[0] * z;
    };
    sys.lagrangian = [k](const Vector& z, const Vector&) {
      const double r = z.norm();
      if (r <= 2.0) return (r - 1.0) * (r - 1.0) * k;
      if (r <= 3.0) return (3.0 - r) * (3.0 - r) * k;
      return 0.0;
    };
    ex.system = sys;
    ex.target = annulus_complement_target(1.0, 4.0);
    ex.mrf = spiral_candidate(eps, p0_bar.value_or(1.0));

    ExampleDefaults d;
    d.box_lo = vec2(-4.2, -4.2);
    d.box_hi = vec2(4.2, 4.2);
    d.verify_spacing = 0.01;
    d.delta = 0.05;
    d.oracle_lo = d.box_lo;
    d.oracle_hi = d.box_hi;
    d.oracle_spacing = 0.05;
    d.oracle_h = 0.01;
    d.initial_states = {vec2(3.5, 0.0)};
    ex.defaults = d;

    // Radial descent with alpha = 1 from radius r costs k times this amount.
    ex.oracle_fixed = [k, collar](const Vector& z) -> std::optional<double> {
      const double r = z.norm();
      if (r > 1.0 && r < 1.0 + collar) return k * ((r * r - 1.0) / 2.0 - 2.0 * (r - 1.0) + std::log(r));
      return std::nullopt;
    };
    ex.compare_region = [collar](const Vector& z) { return z.norm() >= 1.0 + collar; };
  } else if (name == "petrov_demo") {
    const double c = P.at("c");
    const double q = P.at("q");
    const double delta = P.at("delta");
    check_range(c > 0.0 && c <= 1.0, "petrov_demo c must lie in ]0, 1]");
    check_range(q >= 0.0, "petrov_demo q must be non-negative");
    check_range(delta > 0.0, "petrov_demo delta must be positive");
    ex.system = power_law_system(0.0, 0.0, 1.0, 1.0);
    ex.system.name = name;
    ex.target = point_target(1);
    ex.petrov_mu = [c, q](double rho) { return c * std::pow(std::min(rho, 1.0), q); };
    ex.petrov_delta = delta;
    ex.defaults = one_dim_defaults();
    ex.value_function = [](const Vector& x) { return std::fabs(x[0]); };
    const double p0 = p0_bar.value_or(0.5);
    check_range(p0 > 0.0 && p0 < 1.0, "petrov_demo p0_bar must lie in ]0, 1[");
    if (q < 1.0) {
      ex.mrf = potential_of_distance(ex.target, *ex.petrov_mu, delta, p0);
      ex.mrf.name = "petrov_demo";
    } else {
      // Not integrable: keep a placeholder candidate so the Petrov check can report it.
      ex.mrf = power_law_candidate(0.0, 0.0, 1.0, 1.0, p0);
    }
  }
  return ex;
}

}  // namespace mrf
