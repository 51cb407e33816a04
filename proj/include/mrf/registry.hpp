#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mrf/lyapunov.hpp"
#include "mrf/system_model.hpp"

namespace mrf {

using ParamMap = std::map<std::string, double>;

/// Verification, envelope and oracle defaults attached to a built-in example.
struct ExampleDefaults {
  Vector box_lo;
  Vector box_hi;
  double verify_spacing = 0.01;
  double delta = 0.05;
  std::optional<double> sigma;  // nullopt: max of U over the grid
  Vector oracle_lo;
  Vector oracle_hi;
  double oracle_spacing = 0.01;
  double oracle_h = 0.01;
  std::vector<Vector> initial_states;
};

struct ExampleSpec {
  std::string name;
  ParamMap params;
  ControlSystem system;
  TargetSet target;
  CandidateMRF mrf;
  ExampleDefaults defaults;
  // Exact value function where known in closed form.
  std::optional<ScalarField> value_function;
  // Oracle boundary data (collar values) and the region where the bound is compared.
  std::function<std::optional<double>(const Vector&)> oracle_fixed;
  std::function<bool(const Vector&)> compare_region;
  // Weak Petrov data (petrov_demo only).
  std::optional<RateFunction> petrov_mu;
  double petrov_delta = 0.0;
};

/// Registry keys: minimum_time_1d, power_law, spiral, petrov_demo.
std::vector<std::string> example_names();

/// Default parameters of an example (throws ConfigError for unknown names).
ParamMap example_default_params(const std::string& name);

/// Builds an example. Unknown parameter keys or out-of-range values raise
/// ConfigError; p0_bar, when given, overrides the example default.
ExampleSpec make_example(const std::string& name, const ParamMap& params = {},
                         std::optional<double> p0_bar = std::nullopt);

/// Power-law candidate c |x|^e with e = s - r + 1, continued by (M2/M1) ln|x|
/// at e = 0 and by c |x|^e for e < 0.
CandidateMRF power_law_candidate(double r, double s, double m1, double m2, double p0_bar);

/// The piecewise U_eps of the spiral example, with its three smooth pieces.
CandidateMRF spiral_candidate(double epsilon, double p0_bar);

}  // namespace mrf
