#include "mrf/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "mrf/kl_bound.hpp"
#include "mrf/lyapunov.hpp"
#include "mrf/oracle.hpp"
#include "mrf/registry.hpp"
#include "mrf/synthesis.hpp"

namespace mrf {

namespace fs = std::filesystem;

namespace {

std::uint64_t effective_seed(const RunConfig& config, const CommandOptions& options) {
  return options.seed.value_or(config.seed);
}

std::string out_path(const CommandOptions& options, const std::string& file) {
  fs::create_directories(options.out_dir);
  return (fs::path(options.out_dir) / file).string();
}

GridSpec make_grid(const GridConfig& g, const Vector& lo, const Vector& hi, double spacing, int dim,
                   const std::string& where) {
  const Vector a = g.lo.value_or(lo);
  const Vector b = g.hi.value_or(hi);
  if (a.size() != dim || b.size() != dim) {
    throw ConfigError(where + ": lo/hi must have " + std::to_string(dim) + " components");
  }
  if (!((b - a).minCoeff() > 0.0)) throw ConfigError(where + ": hi must exceed lo on every axis");
  return GridSpec::from_spacing(a, b, g.spacing.value_or(spacing));
}

// Largest sampled U whose sublevel set stays off the box faces, used when no
// band top is configured.
double default_sigma(const ExampleSpec& ex, const GridSpec& grid, double d_tol) {
  double face_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!grid.on_box_face(i)) continue;
    const Vector x = grid.point(i);
    if (ex.target.distance(x) < d_tol) continue;
    const double u = ex.mrf(x);
    if (std::isfinite(u)) face_min = std::min(face_min, u);
  }
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vector x = grid.point(i);
    if (ex.target.distance(x) < d_tol) continue;
    const double u = ex.mrf(x);
    if (std::isfinite(u) && u < face_min) best = std::max(best, u);
  }
  return best;
}

struct VerifyRun {
  ExampleSpec ex;
  GridSpec grid;
  BandCertificate cert;
  std::optional<DecreaseModulus> modulus;
  bool ok = false;
  ReportJson json;
};

VerifyRun run_verify(const RunConfig& config, const CommandOptions& options) {
  VerifyRun run;
  run.ex = make_example(config.system, config.params, config.p0_bar);
  const auto& ex = run.ex;
  const auto& vc = config.verify;
  run.grid = make_grid(vc.grid, ex.defaults.box_lo, ex.defaults.box_hi, ex.defaults.verify_spacing,
                       ex.system.state_dim, "verify.grid");

  VerifyOptions vo;
  vo.delta = vc.delta.value_or(ex.defaults.delta);
  if (vc.sigma) {
    vo.sigma = *vc.sigma;
  } else if (ex.defaults.sigma) {
    vo.sigma = *ex.defaults.sigma;
  } else {
    vo.sigma = std::max(vo.delta, default_sigma(ex, run.grid, vc.d_tol));
  }
  vo.bands = vc.bands;
  vo.margin = vc.margin;
  vo.d_tol = vc.d_tol;
  vo.u_tol = vc.u_tol;
  vo.threads = options.threads;

  run.cert = verify_mrf_band(ex.system, ex.target, ex.mrf, run.grid, vo);
  auto& j = run.json;
  j["certificate"] = to_json(run.cert);

  bool ok = run.cert.certified;
  try {
    run.modulus = build_decrease_modulus(modulus_samples(run.cert), vc.eta, vo.sigma);
    j["modulus"] = to_json(*run.modulus);
    const auto sup = check_supersolution(ex.system, ex.target, ex.mrf, *run.modulus, run.grid, vo.delta,
                                         vo.sigma, vc.d_tol);
    j["supersolution"] = to_json(sup);
    ok = ok && sup.passed;
  } catch (const ModulusError& e) {
    j["modulus"] = {{"error", e.what()}};
    ok = false;
  }

  if (vc.petrov.enabled) {
    if (!ex.petrov_mu) throw ConfigError("verify.petrov: system '" + ex.name + "' has no Petrov rate");
    const double delta = vc.petrov.delta.value_or(ex.petrov_delta);
    const auto points = grid_points(run.grid);
    try {
      const auto pr = check_weak_petrov(ex.system, ex.target, *ex.petrov_mu, delta, points, config.p0_bar, vc.d_tol);
      j["petrov"] = to_json(pr);
      j["petrov"]["integrable"] = true;
      ok = ok && pr.inequality_holds;
    } catch (const IntegrabilityError& e) {
      const auto pr = petrov_inequality_sweep(ex.system, ex.target, *ex.petrov_mu, delta, points, vc.d_tol);
      j["petrov"] = to_json(pr);
      j["petrov"]["integrable"] = false;
      j["petrov"]["integrability_error"] = e.what();
      ok = false;
    }
  }
  j["certified"] = ok;
  run.ok = ok;
  return run;
}

ReportJson with_header(const std::string& kind, const RunConfig& config, const CommandOptions& options,
                       ReportJson body) {
  ReportJson r = report_header(kind, effective_seed(config, options));
  r["config"] = config_to_json(config);
  for (auto& [k, v] : body.items()) r[k] = v;
  return r;
}

ReportJson dump_state_error(const char* kind, const std::string& what, const Vector& x) {
  return {{"error", kind}, {"message", what}, {"state", to_json(x)}};
}

}  // namespace

CommandResult cmd_verify(const RunConfig& config, const CommandOptions& options, std::ostream& log) {
  auto run = run_verify(config, options);
  CommandResult res;
  res.exit_code = run.ok ? kExitOk : kExitFailure;
  res.report = with_header("verify", config, options, std::move(run.json));
  write_json_file(out_path(options, "verify.json"), res.report);
  log << "verify: " << (run.ok ? "certified" : "NOT certified") << ", worst H " << run.cert.worst_h
      << " on [" << run.cert.delta << ", " << run.cert.sigma << "]\n";
  return res;
}

CommandResult cmd_synthesize(const RunConfig& config, const CommandOptions& options, std::ostream& log) {
  auto run = run_verify(config, options);
  const auto& ex = run.ex;
  ReportJson body;
  body["verify"] = run.json;
  CommandResult res;
  auto finish = [&](int code) {
    res.exit_code = code;
    res.report = with_header("synthesize", config, options, std::move(body));
    write_json_file(out_path(options, "synthesis.json"), res.report);
    return res;
  };

  if (!run.ok && !options.force) {
    body["error"] = "no verification certificate (use --force to synthesize anyway)";
    log << "synthesize: no certificate, refusing without --force\n";
    return finish(kExitFailure);
  }
  if (!run.modulus) {
    body["error"] = "no decrease modulus could be built from the verification samples";
    log << "synthesize: no decrease modulus\n";
    return finish(kExitFailure);
  }

  const auto& sc = config.synthesis;
  DecreaseModulus modulus = *run.modulus;
  if (sc.modulus_scale != 1.0) {
    std::vector<double> ys = modulus.knots_m();
    for (double& y : ys) y *= sc.modulus_scale;
    modulus.function = MonotonePiecewiseLinear(modulus.knots_r(), ys, modulus.function.tail_slope() * sc.modulus_scale);
    body["modulus_scale"] = sc.modulus_scale;
  }
  const SynthesisProblem problem{ex.system, ex.target, ex.mrf, modulus};
  const auto states = sc.initial_states.empty() ? ex.defaults.initial_states : sc.initial_states;

  EnvelopeOptions eo;
  eo.mode = sc.envelope_mode;
  eo.lipschitz = run.cert.constants.lipschitz;
  eo.threads = options.threads;
  const auto env = build_sigma_envelopes(ex.mrf, ex.target, run.cert.sigma, run.grid, eo);
  const auto beta = build_kl_bound(env, modulus, sc.params.epsilon);
  const auto sandwich = audit_sandwich(env, ex.mrf, ex.target, run.grid, sc.audit_samples,
                                       effective_seed(config, options));
  const auto axioms = check_kl_axioms(beta, env.upper(env.sigma), sc.kl_t_max);
  body["envelopes"] = to_json(env);
  body["sandwich_audit"] = to_json(sandwich);
  body["kl_axioms"] = to_json(axioms);
  bool ok = sandwich.passed() && axioms.passed();

  ReportJson runs = ReportJson::array();
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Vector& x = states[i];
    if (x.size() != ex.system.state_dim) {
      throw ConfigError("synthesis.initial_states[" + std::to_string(i) + "]: wrong dimension");
    }
    ReportJson entry;
    try {
      const auto result = synthesize(problem, x, sc.params);
      const std::string file = "trajectory_" + std::to_string(i) + ".csv";
      std::ofstream csv(out_path(options, file));
      write_trajectory_csv(csv, result.trajectory, ex.mrf, ex.target);
      const auto kl = verify_kl(result.trajectory, beta, ex.target, x, sc.kl_tol);
      entry = to_json(result);
      entry["trajectory_file"] = file;
      entry["kl_audit"] = to_json(kl);
      const bool in_band = result.u0 <= run.cert.sigma;
      entry["initial_level_in_band"] = in_band;
      ok = ok && result.invariants_ok() && kl.passed() && in_band;
      log << "synthesize[" << i << "]: " << to_string(result.trajectory.status) << ", cost " << result.cost
          << " (bound " << result.cost_bound << "), d " << result.final_distance << "\n";
    } catch (const FeedbackGap& e) {
      entry = dump_state_error("feedback_gap", e.what(), e.state);
      entry["best_quotient"] = e.best;
      write_json_file(out_path(options, "feedback_gap_" + std::to_string(i) + ".json"), entry);
      log << "synthesize[" << i << "]: feedback gap at state " << e.state.transpose() << "\n";
      ok = false;
    } catch (const StepCollapse& e) {
      entry = dump_state_error("step_collapse", e.what(), e.state);
      entry["step"] = e.step;
      log << "synthesize[" << i << "]: step collapse at state " << e.state.transpose() << "\n";
      ok = false;
    } catch (const SingularDynamics& e) {
      entry = dump_state_error("singular_dynamics", e.what(), e.state);
      log << "synthesize[" << i << "]: singular dynamics at state " << e.state.transpose() << "\n";
      ok = false;
    }
    runs.push_back(entry);
  }
  body["runs"] = runs;
  body["passed"] = ok;
  return finish(ok ? kExitOk : kExitFailure);
}

CommandResult cmd_oracle(const RunConfig& config, const CommandOptions& options, std::ostream& log) {
  const auto ex = make_example(config.system, config.params, config.p0_bar);
  const auto& oc = config.oracle;
  const double spacing = oc.grid.spacing.value_or(ex.defaults.oracle_spacing);
  const auto grid = make_grid(oc.grid, ex.defaults.oracle_lo, ex.defaults.oracle_hi, spacing,
                              ex.system.state_dim, "oracle.grid");
  HjbOptions ho;
  ho.h = oc.h.value_or(ex.defaults.oracle_h);
  ho.iter_tol = oc.iter_tol;
  ho.max_sweeps = oc.max_sweeps;
  ho.mode = oc.mode;
  ho.threads = options.threads;
  ho.fixed_value = ex.oracle_fixed;
  const double tol = oc.tol.value_or(2.0 * (ho.h + grid.max_spacing()));

  ReportJson body;
  CommandResult res;
  try {
    const auto table = hjb_value_iteration(ex.system, ex.target, grid, ho);
    std::ofstream csv(out_path(options, "value_table.csv"));
    write_value_table_csv(csv, table);
    const auto cmp = compare_bound(table, ex.mrf, config.p0_bar, tol, ex.compare_region);
    body["table"] = to_json(table);
    body["table_file"] = "value_table.csv";
    body["comparison"] = to_json(cmp);
    if (ex.value_function) {
      body["sup_error_vs_exact"] = sup_error(table, *ex.value_function, ex.compare_region);
    }
    body["passed"] = cmp.passed();
    res.exit_code = cmp.passed() ? kExitOk : kExitFailure;
    log << "oracle: " << table.sweeps << " sweeps, " << cmp.violations << " bound violations, worst margin "
        << cmp.worst_margin << "\n";
  } catch (const NonConvergence& e) {
    body["error"] = "non_convergence";
    body["message"] = e.what();
    body["sweeps"] = e.sweeps;
    body["last_change"] = e.change;
    body["passed"] = false;
    res.exit_code = kExitNonConvergence;
    log << "oracle: " << e.what() << "\n";
  }
  res.report = with_header("oracle", config, options, std::move(body));
  write_json_file(out_path(options, "oracle.json"), res.report);
  return res;
}

CommandResult cmd_report(const RunConfig& config, const CommandOptions& options, std::ostream& log) {
  const auto v = cmd_verify(config, options, log);
  const auto s = cmd_synthesize(config, options, log);
  const auto o = cmd_oracle(config, options, log);
  auto strip = [](ReportJson r) {
    for (const char* k : {"schema_version", "kind", "seed", "config"}) r.erase(k);
    return r;
  };
  ReportJson body;
  body["verify"] = strip(v.report);
  body["synthesis"] = strip(s.report);
  body["oracle"] = strip(o.report);
  if (config.system == "spiral") body["spiral_facts"] = to_json(spiral_facts(2.0, config.synthesis.params.d_tol));
  CommandResult res;
  const int codes[] = {v.exit_code, s.exit_code, o.exit_code};
  if (std::find(std::begin(codes), std::end(codes), kExitNonConvergence) != std::end(codes)) {
    res.exit_code = kExitNonConvergence;
  } else if (std::any_of(std::begin(codes), std::end(codes), [](int c) { return c != kExitOk; })) {
    res.exit_code = kExitFailure;
  }
  body["passed"] = res.exit_code == kExitOk;
  res.report = with_header("report", config, options, std::move(body));
  write_json_file(out_path(options, "report.json"), res.report);
  log << "report: " << (res.exit_code == kExitOk ? "all passed" : "failures present") << "\n";
  return res;
}

int run_command(const std::string& name, const std::string& config_path, const CommandOptions& options,
                std::ostream& log) {
  try {
    const RunConfig config = load_config(config_path);
    if (name == "verify") return cmd_verify(config, options, log).exit_code;
    if (name == "synthesize") return cmd_synthesize(config, options, log).exit_code;
    if (name == "oracle") return cmd_oracle(config, options, log).exit_code;
    if (name == "report") return cmd_report(config, options, log).exit_code;
    throw ConfigError("unknown command '" + name + "'");
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NonConvergence& e) {
    log << "non-convergence: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace mrf
