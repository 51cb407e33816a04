#include "mrf/report.hpp"

#include <cmath>
#include <fstream>

namespace mrf {

namespace {

// nlohmann writes NaN and infinities as null already; keep it explicit for readers.
ReportJson num(double v) { return std::isfinite(v) ? ReportJson(v) : ReportJson(nullptr); }

ReportJson opt_vec(const std::optional<Vector>& v) { return v ? to_json(*v) : ReportJson(nullptr); }

ReportJson pl_json(const MonotonePiecewiseLinear& f) {
  ReportJson r = ReportJson::array(), y = ReportJson::array();
  for (double v : f.xs()) r.push_back(num(v));
  for (double v : f.ys()) y.push_back(num(v));
  return {{"r", r}, {"value", y}, {"tail_slope", num(f.tail_slope())}};
}

}  // namespace

ReportJson report_header(const std::string& kind, std::uint64_t seed) {
  return {{"schema_version", kReportSchemaVersion}, {"kind", kind}, {"seed", seed}};
}

ReportJson to_json(const Vector& v) {
  ReportJson a = ReportJson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

ReportJson to_json(const BandCertificate& c) {
  ReportJson bands = ReportJson::array();
  for (std::size_t i = 0; i < c.band_levels.size(); ++i) {
    bands.push_back({{"delta", num(c.band_levels[i])},
                     {"m_hat", c.m_hat[i] ? num(*c.m_hat[i]) : ReportJson(nullptr)}});
  }
  ReportJson viol = ReportJson::array();
  for (const auto& v : c.violations) viol.push_back({{"x", to_json(v.x)}, {"p", to_json(v.p)}, {"h", num(v.h)}});
  return {
      {"certified", c.certified},
      {"delta", num(c.delta)},
      {"sigma", num(c.sigma)},
      {"p0_bar", num(c.p0_bar)},
      {"margin", num(c.margin)},
      {"grid_resolution", num(c.grid_resolution)},
      {"worst_h", num(c.worst_h)},
      {"worst_point", to_json(c.worst_point)},
      {"bands", bands},
      {"points",
       {{"total", c.points_total},
        {"in_target", c.points_in_target},
        {"singular", c.points_singular},
        {"in_band", c.points_in_band},
        {"nonsmooth", c.nonsmooth_points}}},
      {"violation_count", c.violation_count},
      {"violations", viol},
      {"positive_definite", c.positive_definite},
      {"pd_failures", c.pd_failures},
      {"pd_first_failure", opt_vec(c.pd_first_failure)},
      {"pd_first_value", num(c.pd_first_value)},
      {"boundary",
       {{"shell_width", num(c.boundary.shell_width)},
        {"samples", c.boundary.samples},
        {"min_u", num(c.boundary.min_u)},
        {"max_u", num(c.boundary.max_u)},
        {"min_extrapolated", num(c.boundary.min_extrapolated)}}},
      {"sublevel_bounded", c.sublevel_bounded},
      {"constants",
       {{"lipschitz", num(c.constants.lipschitz)},
        {"semiconcavity", num(c.constants.semiconcavity)},
        {"estimated", c.constants.estimated}}},
  };
}

ReportJson to_json(const DecreaseModulus& m) {
  return {{"eta", num(m.eta)}, {"slope_floor", num(m.slope_floor)}, {"knots", pl_json(m.function)}};
}

ReportJson to_json(const SupersolutionReport& r) {
  return {{"passed", r.passed},
          {"checked", r.checked},
          {"skipped_nonsmooth", r.skipped_nonsmooth},
          {"skipped_other", r.skipped_other},
          {"failures", r.failures},
          {"worst_margin", num(r.worst_margin)},
          {"worst_point", opt_vec(r.worst_point)}};
}

ReportJson to_json(const PetrovReport& r) {
  return {{"inequality_holds", r.inequality_holds},
          {"checked", r.checked},
          {"worst_slack", num(r.worst_slack)},
          {"worst_point", opt_vec(r.worst_point)},
          {"potential_at_delta", num(r.potential_at_delta)},
          {"p0_bar", num(r.p0_bar)},
          {"induced_mrf", r.induced.has_value()}};
}

ReportJson to_json(const LegChecks& c) {
  ReportJson failed = ReportJson::array();
  for (const auto& f : c.failed()) failed.push_back(f);
  return {{"all_passed", c.all()},
          {"per_step_decrease", c.per_step_decrease},
          {"leg_duration", c.leg_duration},
          {"partition_monotone", c.partition_monotone},
          {"cost_inequality", c.cost_inequality},
          {"level_attained", c.level_attained},
          {"tau_monotone", c.tau_monotone},
          {"ode_residual", c.ode_residual},
          {"step_count", c.step_count},
          {"worst_decrease", num(c.worst_decrease)},
          {"worst_cost_slack", num(c.worst_cost_slack)},
          {"max_ode_residual", num(c.max_ode_residual)},
          {"max_dtds_residual", num(c.max_dtds_residual)},
          {"failed", failed}};
}

ReportJson to_json(const LegSummary& s) {
  return {{"level", s.level},       {"mu_bar", num(s.mu_bar)},
          {"mu_hat", num(s.mu_hat)}, {"s_bar", num(s.s_bar)},
          {"t_start", num(s.t_start)}, {"t_end", num(s.t_end)},
          {"cost", num(s.cost)},     {"u_end", num(s.u_end)},
          {"steps", s.steps},        {"halvings", s.halvings},
          {"initial_step", num(s.initial_step)}, {"smallest_step", num(s.smallest_step)},
          {"checks", to_json(s.checks)}};
}

ReportJson to_json(const SynthesisResult& r) {
  ReportJson legs = ReportJson::array();
  for (const auto& l : r.legs) legs.push_back(to_json(l));
  ReportJson failures = ReportJson::array();
  for (const auto& f : r.failures()) failures.push_back(f);
  return {{"x0", to_json(r.x0)},
          {"status", to_string(r.trajectory.status)},
          {"u0", num(r.u0)},
          {"cost", num(r.cost)},
          {"cost_bound", num(r.cost_bound)},
          {"cost_bound_ok", r.cost_bound_ok},
          {"final_distance", num(r.final_distance)},
          {"final_level", num(r.final_level)},
          {"max_u", num(r.max_u)},
          {"level_bound_ok", r.level_bound_ok},
          {"levels_reached", r.levels_reached},
          {"nodes", r.trajectory.nodes.size()},
          {"invariants_ok", r.invariants_ok()},
          {"failures", failures},
          {"legs", legs}};
}

ReportJson to_json(const SigmaEnvelopes& e) {
  return {{"mode", e.mode == EnvelopeMode::conservative ? "conservative" : "interpolating"},
          {"sigma", num(e.sigma)},
          {"samples", e.samples},
          {"minus", pl_json(e.minus)},
          {"plus", pl_json(e.plus)}};
}

ReportJson to_json(const SandwichAudit& a) {
  return {{"passed", a.passed()},
          {"checked", a.checked},
          {"failures", a.failures},
          {"worst_lower", num(a.worst_lower)},
          {"worst_upper", num(a.worst_upper)}};
}

ReportJson to_json(const KLAxiomReport& r) {
  return {{"passed", r.passed()},
          {"checked", r.checked},
          {"zero_failures", r.zero_failures},
          {"increasing_failures", r.increasing_failures},
          {"decreasing_failures", r.decreasing_failures},
          {"vanishing_failures", r.vanishing_failures}};
}

ReportJson to_json(const KLAudit& a) {
  return {{"passed", a.passed()},
          {"checked", a.checked},
          {"failures", a.failures},
          {"worst_slack", num(a.worst_slack)},
          {"worst_t", num(a.worst_t)}};
}

ReportJson to_json(const GridValueTable& t) {
  ReportJson counts(ReportJson::array());
  for (auto c : t.grid.counts) counts.push_back(c);
  return {{"grid", {{"lo", to_json(t.grid.lo)}, {"hi", to_json(t.grid.hi)}, {"counts", counts}}},
          {"h", num(t.h)},
          {"mode", to_string(t.mode)},
          {"sweeps", t.sweeps},
          {"last_change", num(t.last_change)},
          {"converged", t.converged},
          {"monotone", t.monotone},
          {"nodes",
           {{"free", t.count(NodeKind::free)},
            {"target", t.count(NodeKind::target)},
            {"fixed", t.count(NodeKind::fixed)}}},
          {"isa", t.isa}};
}

ReportJson to_json(const BoundComparison& c) {
  ReportJson first = ReportJson::array();
  for (const auto& v : c.first_violations) {
    first.push_back({{"x", to_json(v.x)}, {"value", num(v.value)}, {"bound", num(v.bound)}});
  }
  return {{"passed", c.passed()},
          {"checked", c.checked},
          {"violations", c.violations},
          {"tolerance", num(c.tolerance)},
          {"worst_margin", num(c.worst_margin)},
          {"worst_point", to_json(c.worst_point)},
          {"max_value", num(c.max_value)},
          {"first_violations", first}};
}

ReportJson to_json(const SpiralFacts& f) {
  return {{"rho_bar", num(f.rho_bar)},
          {"d_tol", num(f.d_tol)},
          {"approach_time", num(f.approach_time)},
          {"limit_time", num(f.limit_time)},
          {"time_to_tol", num(f.time_to_tol)},
          {"winding_rad", num(f.winding)},
          {"winding_turns", num(f.winding_turns)},
          {"winding_quadrature_rad", num(f.winding_quadrature)},
          {"steps", f.steps}};
}

std::string dump_json(const ReportJson& report) { return report.dump(2) + "\n"; }

void write_json_file(const std::string& path, const ReportJson& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << dump_json(report);
}

}  // namespace mrf
