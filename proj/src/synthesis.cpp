#include "mrf/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace mrf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxStepsPerLeg = 2'000'000;

double smoothstep(double e0, double e1, double v) {
  const double t = std::clamp((v - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

std::string describe(const Vector& x) {
  std::ostringstream out;
  out << "[" << x.transpose() << "]";
  return out.str();
}

// Reparameterized field psi(zeta) f(zeta, a) / g(zeta, a) for one leg.
class LegField {
 public:
  LegField(const SynthesisProblem& problem, double mu_hat, double sigma)
      : problem_(problem), mu_hat_(mu_hat), sigma_(sigma) {}

  double psi(double u) const {
    if (u < 0.5 * mu_hat_) return smoothstep(0.25 * mu_hat_, 0.5 * mu_hat_, u);
    if (u > sigma_) return 1.0 - smoothstep(sigma_, sigma_ + 1.0, u);
    return 1.0;
  }

  double g(const Vector& x, double u, std::size_t a) const {
    const double value = problem_.mrf.p0_bar * eval_lagrangian(problem_.system, x, a) + problem_.modulus(u);
    if (!(value > 0.0)) {
      throw ModulusError("g = p0 l + m(U) is not positive at " + describe(x));
    }
    return value;
  }

  Vector operator()(const Vector& x, std::size_t a) const {
    const double u = problem_.mrf(x);
    const double weight = psi(u);
    // The field vanishes below the leg's band; g need not be positive there.
    if (weight == 0.0) return Vector::Zero(x.size());
    return (weight / g(x, u, a)) * eval_dynamics(problem_.system, x, a);
  }

  Vector rk4(const Vector& y, double h, std::size_t a) const {
    const Vector k1 = (*this)(y, a);
    const Vector k2 = (*this)(y + 0.5 * h * k1, a);
    const Vector k3 = (*this)(y + 0.5 * h * k2, a);
    const Vector k4 = (*this)(y + h * k3, a);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

 private:
  const SynthesisProblem& problem_;
  double mu_hat_;
  double sigma_;
};

enum class TrialOutcome { full, crossed, approached, rejected };

struct Trial {
  TrialOutcome outcome = TrialOutcome::rejected;
  LegStep step;
};

}  // namespace

void SynthesisConfig::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("synthesis.epsilon must be positive");
  if (!(nu_ratio > 0.0 && nu_ratio < 1.0)) throw ConfigError("synthesis.nu_ratio must lie in ]0,1[");
  if (max_levels == 0) throw ConfigError("synthesis.max_levels must be at least 1");
  if (!(delta_init > 0.0)) throw ConfigError("synthesis.delta_init must be positive");
  if (substeps == 0) throw ConfigError("synthesis.substeps must be at least 1");
  if (!(d_tol >= 0.0)) throw ConfigError("synthesis.d_tol must be non-negative");
  if (!(level_tol_rel > 0.0 && level_tol_rel < 1.0)) throw ConfigError("synthesis.level_tol_rel must lie in ]0,1[");
  if (!(sigma >= 0.0)) throw ConfigError("synthesis.sigma must be non-negative");
  if (!(step_radius > 0.0)) throw ConfigError("synthesis.step_radius must be positive");
}

FeedbackChoice feedback_select(const SynthesisProblem& problem, const Vector& x) {
  const auto& system = problem.system;
  if (system.controls.empty()) throw ConfigError("control set is empty");
  const double u = problem.mrf(x);
  const double m = problem.modulus(u);
  const auto grads = problem.mrf.limiting_gradients(x);

  FeedbackChoice best;
  best.quotient = kInf;
  for (std::size_t a = 0; a < system.control_count(); ++a) {
    const double g = problem.mrf.p0_bar * eval_lagrangian(system, x, a) + m;
    if (!(g > 0.0)) throw ModulusError("g = p0 l + m(U) is not positive at " + describe(x));
    const Vector f = eval_dynamics(system, x, a);
    for (std::size_t k = 0; k < grads.size(); ++k) {
      const double q = grads[k].dot(f) / g;
      if (q < best.quotient || (q == best.quotient && k < best.gradient)) {
        best = {a, k, grads[k], g, q};
      }
    }
  }
  if (best.quotient > -1.0) {
    std::ostringstream msg;
    msg << "no (p, a) pair reaches <p, f/g> <= -1 at " << describe(x) << "; best value " << best.quotient;
    throw FeedbackGap(msg.str(), x, best.quotient);
  }
  return best;
}

StepBounds estimate_step_bounds(const SynthesisProblem& problem, std::span<const Vector> points,
                                double mu_hat, double sigma, double radius) {
  StepBounds b;
  b.m_g = kInf;
  for (const auto& x : points) {
    const double u = problem.mrf(x);
    if (u < 0.5 * mu_hat || u > sigma + 1.0) continue;
    const double m = problem.modulus(u);
    for (std::size_t a = 0; a < problem.system.control_count(); ++a) {
      b.m_g = std::min(b.m_g, problem.mrf.p0_bar * eval_lagrangian(problem.system, x, a) + m);
      b.M_f = std::max(b.M_f, eval_dynamics(problem.system, x, a).norm());
    }
  }
  if (b.m_g == kInf) b.m_g = 0.0;
  b.delta_1 = b.M_f > 0.0 ? radius * b.m_g / b.M_f : kInf;
  return b;
}

LegResult integrate_leg(const SynthesisProblem& problem, const Vector& x, double mu_bar,
                        double mu_hat, const SynthesisConfig& config) {
  config.validate();
  LegResult leg;
  leg.mu_bar = mu_bar;
  leg.mu_hat = mu_hat;
  leg.u_start = problem.mrf(x);
  leg.u_end = leg.u_start;
  if (!(mu_hat > 0.0)) throw ConfigError("target level must be positive");
  if (mu_hat >= mu_bar) return leg;

  const double sigma = config.sigma > 0.0 ? std::max(config.sigma, mu_bar) : mu_bar;
  const double level_tol = config.level_tol_rel * mu_hat;
  const double decay = 1.0 / (config.epsilon + 1.0);
  const LegField field(problem, mu_hat, sigma);

  const Vector anchor0 = x;
  const StepBounds bounds = estimate_step_bounds(problem, std::span<const Vector>(&anchor0, 1), mu_hat, sigma,
                                                 config.step_radius);
  const double delta = std::min({bounds.delta_1, 0.5 * mu_hat, config.delta_init});
  const double delta_min = 1e-9 * config.delta_init;
  leg.initial_step = delta;
  leg.smallest_step = delta;

  auto in_target = [&](const Vector& y) { return problem.target.distance(y) < config.d_tol; };

  // Integrates one step of length h from the anchor; every substep is checked
  // against the decrease U(zeta(s)) - U(x^j) <= -(s - s^{j-1})/(eps+1).
  auto attempt = [&](const Vector& anchor, double u_anchor, double s0, std::size_t a, double h) {
    Trial trial;
    auto& st = trial.step;
    st.control = a;
    st.s.push_back(s0);
    st.x.push_back(anchor);
    st.u.push_back(u_anchor);
    const double sub = h / static_cast<double>(config.substeps);
    try {
      for (std::size_t k = 1; k <= config.substeps; ++k) {
        const Vector& prev = st.x.back();
        const double s_prev = st.s.back();
        Vector y = field.rk4(prev, sub, a);
        double uy = problem.mrf(y);
        double sy = s0 + static_cast<double>(k) * sub;
        if (!std::isfinite(uy) || !y.allFinite()) return Trial{};
        bool crossed = false;
        if (uy <= mu_hat) {
          // Level crossing inside (s_prev, sy]: bisect on the substep length.
          double lo = 0.0;
          double hi = sub;
          Vector y_hi = y;
          double u_hi = uy;
          for (int it = 0; it < 200 && std::fabs(u_hi - mu_hat) > level_tol; ++it) {
            const double mid = 0.5 * (lo + hi);
            const Vector ym = field.rk4(prev, mid, a);
            const double um = problem.mrf(ym);
            if (um > mu_hat) {
              lo = mid;
            } else {
              hi = mid;
              y_hi = ym;
              u_hi = um;
            }
            if (hi - lo <= 1e-14 * hi) break;
          }
          y = y_hi;
          uy = u_hi;
          sy = s_prev + hi;
          crossed = true;
          if (!(sy > s_prev)) return Trial{};
        }
        // A node inside C means the step outran the level resolution.
        if (!(uy > 0.0) || problem.target.contains(y)) return Trial{};
        if (uy - u_anchor > -(sy - s0) * decay) return Trial{};
        st.s.push_back(sy);
        st.x.push_back(y);
        st.u.push_back(uy);
        if (crossed) {
          trial.outcome = TrialOutcome::crossed;
          return trial;
        }
        if (in_target(y)) {
          trial.outcome = TrialOutcome::approached;
          return trial;
        }
      }
    } catch (const SingularDynamics&) {
      return Trial{};
    }
    trial.outcome = TrialOutcome::full;
    return trial;
  };

  Vector cur = x;
  double u_cur = leg.u_start;
  double s = 0.0;
  double h = delta;
  for (std::size_t n = 0;; ++n) {
    if (n >= kMaxStepsPerLeg) {
      throw StepCollapse("leg exceeded the step budget before reaching its level", cur, h);
    }
    const FeedbackChoice choice = feedback_select(problem, cur);
    // Keep the level crossing a few substeps into the step when U falls fast.
    if (choice.quotient < 0.0) {
      const double s_res = 64.0 * std::numeric_limits<double>::epsilon() * std::fabs(s);
      h = std::min(h, std::max(s_res * config.substeps, (u_cur - mu_hat) / -choice.quotient));
    }
    const double h_floor = std::min(delta_min, 1e-9 * h);
    Trial trial;
    for (;;) {
      trial = attempt(cur, u_cur, s, choice.control, h);
      if (trial.outcome != TrialOutcome::rejected) break;
      h *= 0.5;
      ++leg.halvings;
      if (h < h_floor) {
        std::ostringstream msg;
        msg << "step halving fell below " << h_floor << " at " << describe(cur);
        throw StepCollapse(msg.str(), cur, h);
      }
    }
    auto& st = trial.step;
    if (trial.outcome == TrialOutcome::full) {
      // First substep whose level already matches the end of the step.
      const double u_last = st.u.back();
      for (std::size_t k = 1; k + 1 < st.u.size(); ++k) {
        if (st.u[k] <= u_last) {
          st.s.resize(k + 1);
          st.x.resize(k + 1);
          st.u.resize(k + 1);
          ++leg.refinements;
          break;
        }
      }
    }
    const double len = st.s.back() - st.s.front();
    if (trial.outcome == TrialOutcome::full) leg.smallest_step = std::min(leg.smallest_step, len);
    leg.partition.push_back(st.s.back());
    s = st.s.back();
    cur = st.x.back();
    u_cur = st.u.back();
    const TrialOutcome outcome = trial.outcome;
    leg.steps.push_back(std::move(st));
    if (outcome == TrialOutcome::approached || in_target(cur)) {
      leg.approached_target = true;
      break;
    }
    if (outcome == TrialOutcome::crossed || u_cur - mu_hat <= level_tol) break;
    h = std::min(delta, 2.0 * h);
  }
  leg.s_bar = s;
  leg.u_end = u_cur;
  return leg;
}

void reparam_to_time(LegResult& leg, const SynthesisProblem& problem, double t0, double cost0) {
  const LegField field(problem, leg.mu_hat, std::max(leg.mu_bar, leg.u_start));
  double t = t0;
  double cost = cost0;
  double m_int = 0.0;
  leg.quadrature_error = 0.0;
  for (auto& st : leg.steps) {
    const std::size_t a = st.control;
    const std::size_t n = st.x.size();
    st.t.assign(n, 0.0);
    st.cost.assign(n, 0.0);
    st.m_int.assign(n, 0.0);
    st.t[0] = t;
    st.cost[0] = cost;
    st.m_int[0] = m_int;

    auto sample = [&](const Vector& y, double u) {
      struct { double inv_g, l_over_g, m_over_g; } r;
      const double g = field.g(y, u, a);
      r.inv_g = 1.0 / g;
      r.l_over_g = eval_lagrangian(problem.system, y, a) / g;
      r.m_over_g = problem.modulus(u) / g;
      return r;
    };
    auto left = sample(st.x[0], st.u[0]);
    for (std::size_t k = 1; k < n; ++k) {
      const double h = st.s[k] - st.s[k - 1];
      const auto right = sample(st.x[k], st.u[k]);
      const Vector xm = field.rk4(st.x[k - 1], 0.5 * h, a);
      const auto mid = sample(xm, problem.mrf(xm));
      const double dt = h / 6.0 * (left.inv_g + 4.0 * mid.inv_g + right.inv_g);
      const double dc = h / 6.0 * (left.l_over_g + 4.0 * mid.l_over_g + right.l_over_g);
      const double dm = h / 6.0 * (left.m_over_g + 4.0 * mid.m_over_g + right.m_over_g);
      leg.quadrature_error += std::fabs(dt - 0.5 * h * (left.inv_g + right.inv_g));
      leg.quadrature_error += std::fabs(dc - 0.5 * h * (left.l_over_g + right.l_over_g));
      if (!(dt > 0.0)) throw ModulusError("time increment is not positive");
      t += dt;
      cost += dc;
      m_int += dm;
      st.t[k] = t;
      st.cost[k] = cost;
      st.m_int[k] = m_int;
      left = right;
    }
  }
}

bool LegChecks::all() const { return failed().empty(); }

std::vector<std::string> LegChecks::failed() const {
  std::vector<std::string> out;
  if (!per_step_decrease) out.emplace_back("per_step_decrease");
  if (!leg_duration) out.emplace_back("leg_duration");
  if (!partition_monotone) out.emplace_back("partition_monotone");
  if (!cost_inequality) out.emplace_back("cost_inequality");
  if (!level_attained) out.emplace_back("level_attained");
  if (!tau_monotone) out.emplace_back("tau_monotone");
  if (!ode_residual) out.emplace_back("ode_residual");
  if (!step_count) out.emplace_back("step_count");
  return out;
}

LegChecks check_leg(const LegResult& leg, const SynthesisProblem& problem,
                    const SynthesisConfig& config) {
  LegChecks c;
  if (leg.empty()) {
    c.worst_decrease = 0.0;
    c.worst_cost_slack = 0.0;
    return c;
  }
  const double eps1 = config.epsilon + 1.0;
  const double p0 = problem.mrf.p0_bar;
  const double level_tol = config.level_tol_rel * leg.mu_hat;
  const double quad_tol = 10.0 * leg.quadrature_error + 1e-12 * std::max(1.0, leg.u_start);
  const LegField field(problem, leg.mu_hat, std::max(leg.mu_bar, leg.u_start));

  double prev_t = -kInf;
  double min_full = kInf;
  for (std::size_t j = 0; j < leg.steps.size(); ++j) {
    const auto& st = leg.steps[j];
    const std::size_t n = st.x.size();
    const double u0 = st.u[0];
    const double s0 = st.s[0];
    const double u_last = st.u[n - 1];
    if (!st.t.empty()) {
      if (st.t[0] < prev_t) c.tau_monotone = false;
      prev_t = st.t[n - 1];
    }
    if (j + 1 < leg.steps.size()) min_full = std::min(min_full, st.s[n - 1] - s0);
    for (std::size_t k = 1; k < n; ++k) {
      const double dec = st.u[k] - u0 + (st.s[k] - s0) / eps1;
      c.worst_decrease = std::max(c.worst_decrease, dec);
      if (dec > 0.0) c.per_step_decrease = false;
      if (st.u[k] > u0 || (k + 1 < n && !(st.u[k] > u_last))) c.partition_monotone = false;

      if (!st.t.empty()) {
        const double lhs = st.u[k] - u0 + p0 / eps1 * (st.cost[k] - st.cost[0]);
        const double rhs = -(st.m_int[k] - st.m_int[0]) / eps1;
        c.worst_cost_slack = std::max(c.worst_cost_slack, lhs - rhs);
        if (lhs - rhs > quad_tol) c.cost_inequality = false;

        const double dt = st.t[k] - st.t[k - 1];
        if (!(dt > 0.0)) c.tau_monotone = false;

        // Finite-difference check of the t-path against z' = psi f at the panel midpoint.
        const double h = st.s[k] - st.s[k - 1];
        const Vector F0 = field(st.x[k - 1], st.control);
        const Vector F1 = field(st.x[k], st.control);
        const Vector xm = 0.5 * (st.x[k - 1] + st.x[k]) + (h / 8.0) * (F0 - F1);
        const double um = problem.mrf(xm);
        const Vector fm = field.psi(um) * eval_dynamics(problem.system, xm, st.control);
        const Vector fd = (st.x[k] - st.x[k - 1]) / dt;
        const double scale = std::max(fm.norm(), 1e-12);
        c.max_ode_residual = std::max(c.max_ode_residual, (fd - fm).norm() / scale);
        // Integrated form of dt/ds = 1/g: the panel's dt against Simpson on its two halves.
        auto inv_g_at = [&](const Vector& y) { return 1.0 / field.g(y, problem.mrf(y), st.control); };
        const Vector xq1 = field.rk4(st.x[k - 1], 0.25 * h, st.control);
        const Vector xq2 = field.rk4(st.x[k - 1], 0.5 * h, st.control);
        const Vector xq3 = field.rk4(st.x[k - 1], 0.75 * h, st.control);
        const double dt_fine = h / 12.0 * (inv_g_at(st.x[k - 1]) + 4.0 * inv_g_at(xq1) + 2.0 * inv_g_at(xq2) +
                                           4.0 * inv_g_at(xq3) + inv_g_at(st.x[k]));
        c.max_dtds_residual = std::max(c.max_dtds_residual, std::fabs(dt - dt_fine) / dt_fine);
      }
    }
  }
  c.ode_residual = c.max_ode_residual <= 1e-3 && c.max_dtds_residual <= 1e-3;

  const double drop = leg.approached_target ? leg.u_start - leg.u_end : leg.u_start - leg.mu_hat;
  c.leg_duration = leg.s_bar <= eps1 * (drop + level_tol) * (1.0 + 1e-12) && leg.s_bar <= eps1 * leg.u_start;
  if (!leg.approached_target) c.level_attained = std::fabs(leg.u_end - leg.mu_hat) <= level_tol;
  if (min_full < kInf) {
    const double bound = std::ceil(eps1 * (leg.mu_bar - leg.mu_hat) / min_full) + 1.0;
    c.step_count = static_cast<double>(leg.steps.size()) <= bound;
  }
  return c;
}

bool SynthesisResult::invariants_ok() const { return failures().empty(); }

std::vector<std::string> SynthesisResult::failures() const {
  std::vector<std::string> out;
  for (const auto& leg : legs) {
    for (const auto& name : leg.checks.failed()) out.push_back("leg " + std::to_string(leg.level) + ": " + name);
  }
  if (!cost_bound_ok) out.emplace_back("cost_bound");
  if (!level_bound_ok) out.emplace_back("level_bound");
  if (auto broken = trajectory.check_invariants()) out.push_back("trajectory: " + *broken);
  return out;
}

SynthesisResult synthesize(const SynthesisProblem& problem, const Vector& x,
                           const SynthesisConfig& config) {
  config.validate();
  SynthesisResult result;
  result.x0 = x;
  const double d0 = problem.target.distance(x);
  result.final_distance = d0;
  if (d0 <= problem.target.contains_tol || d0 < config.d_tol) {
    result.trajectory.status = TrajectoryStatus::approached_target;
    result.final_level = d0 <= problem.target.contains_tol ? 0.0 : problem.mrf(x);
    result.u0 = result.final_level;
    result.max_u = result.u0;
    return result;
  }
  const double u0 = problem.mrf(x);
  result.u0 = u0;
  result.max_u = u0;
  result.final_level = u0;
  if (!(u0 > 0.0)) throw PositiveDefinitenessViolation("U is not positive at the initial state", x, u0);
  if (config.sigma > 0.0 && u0 > config.sigma) {
    throw ConfigError("initial level U(x) exceeds the working band top sigma");
  }
  SynthesisConfig cfg = config;
  if (cfg.sigma <= 0.0) cfg.sigma = u0;

  auto& nodes = result.trajectory.nodes;
  Vector cur = x;
  double t = 0.0;
  double s_offset = 0.0;
  double cost = 0.0;
  double quad_err = 0.0;
  double level = u0;
  result.trajectory.status = TrajectoryStatus::truncated;

  for (std::size_t k = 1; k <= cfg.max_levels; ++k) {
    level *= cfg.nu_ratio;
    const double u_cur = problem.mrf(cur);
    LegResult leg = integrate_leg(problem, cur, u_cur, level, cfg);
    reparam_to_time(leg, problem, t, cost);
    LegSummary summary;
    summary.level = k;
    summary.mu_bar = u_cur;
    summary.mu_hat = level;
    summary.s_bar = leg.s_bar;
    summary.t_start = t;
    summary.steps = leg.steps.size();
    summary.halvings = leg.halvings;
    summary.initial_step = leg.initial_step;
    summary.smallest_step = leg.smallest_step;
    summary.checks = check_leg(leg, problem, cfg);
    quad_err += leg.quadrature_error;

    for (const auto& st : leg.steps) {
      for (std::size_t i = 0; i + 1 < st.x.size(); ++i) {
        if (!nodes.empty() && i == 0 && nodes.back().t == st.t[0]) {
          nodes.back().control = st.control;
          continue;
        }
        nodes.push_back({st.t[i], s_offset + st.s[i], st.x[i], st.control, st.cost[i]});
        result.max_u = std::max(result.max_u, st.u[i]);
      }
      nodes.push_back({st.t.back(), s_offset + st.s.back(), st.x.back(), st.control, st.cost.back()});
      result.max_u = std::max(result.max_u, st.u.back());
    }
    if (!leg.empty()) {
      t = leg.steps.back().t.back();
      cost = leg.steps.back().cost.back();
      cur = leg.end_state();
    }
    s_offset += leg.s_bar;
    summary.t_end = t;
    summary.cost = cost - (leg.empty() ? cost : leg.steps.front().cost.front());
    summary.u_end = leg.u_end;
    result.legs.push_back(summary);
    result.final_level = leg.u_end;
    if (leg.approached_target) {
      result.trajectory.status = TrajectoryStatus::approached_target;
      break;
    }
    result.levels_reached = k;
  }

  result.cost = cost;
  result.final_distance = problem.target.distance(cur);
  const double p0 = problem.mrf.p0_bar;
  if (p0 > 0.0) {
    result.cost_bound = (cfg.epsilon + 1.0) * u0 / p0;
    result.cost_bound_ok = cost <= result.cost_bound + 10.0 * quad_err + 1e-12 * result.cost_bound;
  }
  result.level_bound_ok = result.max_u <= u0 * (1.0 + 1e-12);
  return result;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory, const CandidateMRF& mrf,
                          const TargetSet& target) {
  const auto dim = trajectory.nodes.empty() ? 0 : trajectory.nodes.front().x.size();
  out << "t,s";
  for (Eigen::Index i = 0; i < dim; ++i) out << ",x" << (i + 1);
  out << ",control_index,U,d,cost\n";
  const auto old_precision = out.precision(17);
  for (const auto& node : trajectory.nodes) {
    out << node.t << ',' << node.s;
    for (Eigen::Index i = 0; i < node.x.size(); ++i) out << ',' << node.x[i];
    out << ',' << node.control << ',' << mrf(node.x) << ',' << target.distance(node.x) << ',' << node.cost << '\n';
  }
  out.precision(old_precision);
}

}  // namespace mrf
