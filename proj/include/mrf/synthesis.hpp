#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mrf/lyapunov.hpp"
#include "mrf/system_model.hpp"

namespace mrf {

struct SynthesisConfig {
  double epsilon = 0.1;
  double nu_ratio = 0.5;
  std::size_t max_levels = 20;
  double delta_init = 0.05;
  std::size_t substeps = 16;
  double d_tol = 1e-3;
  double level_tol_rel = 1e-8;
  // Top of the working band; 0 means U at the initial state.
  double sigma = 0.0;
  // Semiconcavity radius R entering delta_1 = R m_g / M_f.
  double step_radius = 0.1;

  void validate() const;
};

/// Read-only bundle shared by every leg of a run.
struct SynthesisProblem {
  const ControlSystem& system;
  const TargetSet& target;
  const CandidateMRF& mrf;
  const DecreaseModulus& modulus;
};

struct FeedbackChoice {
  std::size_t control = 0;
  std::size_t gradient = 0;  // index into limiting_gradients(x)
  Vector p;
  double g = 0.0;
  double quotient = 0.0;     // <p, f(x,a)> / g(x,a)
};

/// Scans every (p, a) with p in D*U(x) and keeps the pair with the smallest
/// <p, f/g>; lowest indices win ties. Throws FeedbackGap when the best value
/// exceeds -1.
FeedbackChoice feedback_select(const SynthesisProblem& problem, const Vector& x);

/// One accepted step [s0, s1] with its substep samples (first sample is the anchor).
struct LegStep {
  std::size_t control = 0;
  std::vector<double> s;
  std::vector<Vector> x;
  std::vector<double> u;
  std::vector<double> t;      // filled by reparam_to_time
  std::vector<double> cost;   // running cost at each sample
  std::vector<double> m_int;  // running integral of m(U) dt
};

struct LegResult {
  Partition partition;
  std::vector<LegStep> steps;
  double mu_bar = 0.0;
  double mu_hat = 0.0;
  double s_bar = 0.0;
  double u_start = 0.0;
  double u_end = 0.0;
  bool approached_target = false;
  double initial_step = 0.0;
  double smallest_step = 0.0;
  std::size_t halvings = 0;
  std::size_t refinements = 0;
  // Sum of |Simpson - trapezoid| over all quadrature panels.
  double quadrature_error = 0.0;

  bool empty() const { return steps.empty(); }
  const Vector& end_state() const { return steps.back().x.back(); }
};

struct StepBounds {
  double m_g = 0.0;
  double M_f = 0.0;
  double delta_1 = 0.0;
};

/// Samples g and |f| at the given points whose level lies in [mu_hat/2, sigma + 1].
StepBounds estimate_step_bounds(const SynthesisProblem& problem, std::span<const Vector> points,
                                double mu_hat, double sigma, double radius);

/// Descends from U(x) = mu_bar to mu_hat along dzeta/ds = psi f/g with piecewise
/// constant feedback, checking the per-step decrease at every substep.
LegResult integrate_leg(const SynthesisProblem& problem, const Vector& x, double mu_bar,
                        double mu_hat, const SynthesisConfig& config);

/// Fills t, cost and m-integral samples of each step by Simpson quadrature of
/// 1/g, l/g and m(U)/g in s, starting from t0 and cost0.
void reparam_to_time(LegResult& leg, const SynthesisProblem& problem, double t0 = 0.0,
                     double cost0 = 0.0);

struct LegChecks {
  bool per_step_decrease = true;
  bool leg_duration = true;
  bool partition_monotone = true;
  bool cost_inequality = true;
  bool level_attained = true;
  bool tau_monotone = true;
  bool ode_residual = true;
  bool step_count = true;
  double worst_decrease = -std::numeric_limits<double>::infinity();
  double worst_cost_slack = -std::numeric_limits<double>::infinity();
  double max_ode_residual = 0.0;
  double max_dtds_residual = 0.0;

  bool all() const;
  std::vector<std::string> failed() const;
};

LegChecks check_leg(const LegResult& leg, const SynthesisProblem& problem,
                    const SynthesisConfig& config);

struct LegSummary {
  std::size_t level = 0;
  double mu_bar = 0.0;
  double mu_hat = 0.0;
  double s_bar = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
  double cost = 0.0;
  double u_end = 0.0;
  std::size_t steps = 0;
  std::size_t halvings = 0;
  double initial_step = 0.0;
  double smallest_step = 0.0;
  LegChecks checks;
};

struct SynthesisResult {
  Trajectory trajectory;
  std::vector<LegSummary> legs;
  Vector x0;
  double u0 = 0.0;
  double cost = 0.0;
  double cost_bound = std::numeric_limits<double>::infinity();  // (eps+1) U(x)/p0_bar
  double final_distance = 0.0;
  double final_level = 0.0;
  double max_u = 0.0;
  std::size_t levels_reached = 0;
  bool cost_bound_ok = true;
  bool level_bound_ok = true;  // U never exceeds U(x)

  bool invariants_ok() const;
  std::vector<std::string> failures() const;
};

/// Concatenates legs through the levels mu_k = nu^k U(x) until max_levels or d < d_tol.
SynthesisResult synthesize(const SynthesisProblem& problem, const Vector& x,
                           const SynthesisConfig& config);

/// One row per node: t, s, x1..xn, control_index, U, d, cost.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory, const CandidateMRF& mrf,
                          const TargetSet& target);

}  // namespace mrf
