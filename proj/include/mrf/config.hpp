#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrf/kl_bound.hpp"
#include "mrf/oracle.hpp"
#include "mrf/registry.hpp"
#include "mrf/synthesis.hpp"

namespace mrf {

struct GridConfig {
  std::optional<Vector> lo;
  std::optional<Vector> hi;
  std::optional<double> spacing;
};

struct PetrovConfig {
  bool enabled = false;
  std::optional<double> delta;
};

struct VerifyConfig {
  std::optional<double> delta;
  std::optional<double> sigma;
  std::size_t bands = 32;
  double margin = 1e-12;
  double d_tol = 1e-3;
  double u_tol = 1e-6;
  double eta = 0.1;
  GridConfig grid;
  PetrovConfig petrov;
};

struct SynthesisRunConfig {
  SynthesisConfig params;
  std::vector<Vector> initial_states;  // empty: example defaults
  EnvelopeMode envelope_mode = EnvelopeMode::conservative;
  std::size_t audit_samples = 2000;
  double kl_tol = 1e-9;
  double kl_t_max = 10.0;
  // Multiplies the certified modulus; values above 1 provoke feedback gaps in tests.
  double modulus_scale = 1.0;
};

struct OracleConfig {
  GridConfig grid;
  std::optional<double> h;
  double iter_tol = 1e-8;
  int max_sweeps = 100000;
  SweepMode mode = SweepMode::gauss_seidel;
  std::optional<double> tol;  // default 2 (h + spacing)
};

struct RunConfig {
  std::string system;
  ParamMap params;
  double p0_bar = 0.0;
  VerifyConfig verify;
  SynthesisRunConfig synthesis;
  OracleConfig oracle;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  unsigned threads = 1;
};

/// Parses a JSON configuration. Syntax errors carry line and column; field
/// errors are prefixed with the dotted field path. Both raise ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Every key with its default value (system params of the chosen example).
nlohmann::ordered_json default_config(const std::string& system = "minimum_time_1d");

/// The effective configuration after defaults, as written into reports.
nlohmann::ordered_json config_to_json(const RunConfig& config);

}  // namespace mrf
