// Acceptance criteria: one PASS/FAIL line per criterion, tolerances pinned here.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mrf/kl_bound.hpp"
#include "mrf/lyapunov.hpp"
#include "mrf/oracle.hpp"
#include "mrf/registry.hpp"
#include "mrf/synthesis.hpp"

using namespace mrf;

namespace {

int failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void report(const std::string& id, bool ok, const std::string& detail, double seconds, double limit) {
  const bool in_time = seconds < limit;
  const bool pass = ok && in_time;
  if (!pass) ++failures;
  std::printf("%s %s: %s [%.3f s, limit %.0f s%s]\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str(), seconds,
              limit, in_time ? "" : ", TOO SLOW");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Vector v1(double a) { return Vector::Constant(1, a); }

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

VerifyOptions band(double delta, double sigma) {
  VerifyOptions o;
  o.delta = delta;
  o.sigma = sigma;
  return o;
}

// Shared by criteria 3, 6 and 7.
struct Run {
  std::string name;
  ExampleSpec ex;
  GridSpec grid;
  BandCertificate cert;
  DecreaseModulus modulus;
  SynthesisResult result;
  std::optional<KLBound> beta;
  KLAudit kl;
  SandwichAudit sandwich;
};

Run synthesize_run(const std::string& name, const ExampleSpec& ex, double spacing, double delta, double sigma,
                   const Vector& x, double epsilon, EnvelopeMode mode) {
  Run run{name, ex, GridSpec::from_spacing(ex.defaults.box_lo, ex.defaults.box_hi, spacing), {}, {}, {}, {}, {}, {}};
  run.cert = verify_mrf_band(run.ex.system, run.ex.target, run.ex.mrf, run.grid, band(delta, sigma));
  run.modulus = build_decrease_modulus(modulus_samples(run.cert), 0.1, sigma);
  const SynthesisProblem pr{run.ex.system, run.ex.target, run.ex.mrf, run.modulus};
  SynthesisConfig cfg;
  cfg.epsilon = epsilon;
  run.result = synthesize(pr, x, cfg);
  EnvelopeOptions eo;
  eo.mode = mode;
  eo.lipschitz = run.cert.constants.lipschitz;
  const auto env = build_sigma_envelopes(run.ex.mrf, run.ex.target, sigma, run.grid, eo);
  run.sandwich = audit_sandwich(env, run.ex.mrf, run.ex.target, run.grid, 1000, 2024);
  run.beta.emplace(build_kl_bound(env, run.modulus, epsilon));
  run.kl = verify_kl(run.result.trajectory, *run.beta, run.ex.target, x);
  return run;
}

}  // namespace

int main() {
  Timer total;

  {
    Timer t;
    const auto ex = make_example("spiral", {{"epsilon", 0.5}, {"k", 1.0}}, 1.0);
    const auto grid = GridSpec::from_spacing(ex.defaults.box_lo, ex.defaults.box_hi, 0.01);
    double max_u = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Vector z = grid.point(i);
      if (ex.target.distance(z) >= 1e-3) max_u = std::max(max_u, ex.mrf(z));
    }
    const auto cert = verify_mrf_band(ex.system, ex.target, ex.mrf, grid, band(0.05, max_u));
    report("criterion 1 (spiral U_eps certified, p0_bar 1)", cert.certified && cert.worst_h < 0.0,
           fmt("band [0.05, %.6f], worst H %.3e < 0", max_u, cert.worst_h), t.seconds(), 10.0);
  }

  {
    Timer t;
    const auto ex = make_example("power_law", {{"r", 0.0}, {"s", -1.0}}, 0.9);
    const auto grid = GridSpec::from_spacing(ex.defaults.box_lo, ex.defaults.box_hi, 1e-3);
    const auto cert = verify_mrf_band(ex.system, ex.target, ex.mrf, grid, band(1e-3, 1.0));
    report("criterion 2 (power law s-r=-1 rejected)", !cert.certified && !cert.positive_definite,
           fmt("positive-definiteness failures %.0f, first value %.4f", double(cert.pd_failures), cert.pd_first_value),
           t.seconds(), 1.0);
  }

  std::vector<Run> runs;
  {
    Timer t;
    const auto ex = make_example("minimum_time_1d", {}, 0.9);
    runs.push_back(synthesize_run("minimum_time_1d", ex, 1e-3, 1e-3, 2.0, v1(1.0), 0.1, EnvelopeMode::conservative));
    const auto& r = runs.back().result;
    const double bound = 1.1 / 0.9;
    const bool ok = r.cost <= bound && std::fabs(r.cost - 1.0) <= 0.1;
    report("criterion 3 (cost bound, 1-D minimum time)", ok,
           fmt("cost %.6f <= (1+eps) U(x)/p0_bar = %.6f, |cost - 1| = %.4f <= 0.1", r.cost, bound,
               std::fabs(r.cost - 1.0)),
           t.seconds(), 5.0);
  }

  {
    Timer t;
    const auto grid = GridSpec::from_spacing(v1(-2.0), v1(2.0), 0.01);
    const double h = 0.01;
    const double tol = 2.0 * (h + grid.max_spacing());
    HjbOptions o;
    o.h = h;
    bool ok = grid.size() >= 400;
    std::string detail = fmt("%.0f nodes, tolerance %.2f", double(grid.size()), tol);
    for (double s : {0.0, 1.0}) {
      const auto ex = make_example("power_law", {{"r", 0.0}, {"s", s}}, 0.9);
      const auto table = hjb_value_iteration(ex.system, ex.target, grid, o);
      const double err = sup_error(table, *ex.value_function);
      const auto cmp = compare_bound(table, ex.mrf, 0.9, tol);
      ok = ok && err <= tol && cmp.passed();
      detail += fmt("; s=%.0f: sup error %.3e, bound violations %.0f", s, err, double(cmp.violations));
    }
    report("criterion 4 (oracle cross-check)", ok, detail, t.seconds(), 30.0);
  }

  {
    Timer t;
    const auto f = spiral_facts(2.0, 1e-3);
    const double rel = std::fabs(f.approach_time - std::log(2.0)) / std::log(2.0);
    const double seconds = t.seconds();
    report("criterion 5a (spiral approach time ~ ln 2)", rel <= 0.02,
           fmt("approach time %.6f vs ln 2 = %.6f, relative error %.4f <= 0.02", f.approach_time, std::log(2.0), rel),
           seconds, 5.0);
    // Closed form: the winding equals ln((rho_bar - 1)(1 + d_tol)/(rho_bar d_tol)), about 0.99 turns here.
    report("criterion 5b (spiral winding > 10 turns before d < 1e-3)", f.winding_turns > 10.0,
           fmt("winding %.4f rad = %.4f turns (quadrature %.4f rad); 10 turns is not reached", f.winding,
               f.winding_turns, f.winding_quadrature),
           seconds, 5.0);
  }

  {
    Timer t;
    const auto ex = make_example("spiral", {{"epsilon", 0.01}, {"k", 1.0}}, 1.0);
    runs.push_back(synthesize_run("spiral eps=0.01", ex, 0.01, 1e-5, 0.01, v2(3.5, 0.0), 0.1,
                                  EnvelopeMode::conservative));
    const auto& r = runs.back().result;
    report("criterion 6 (ring R cost, eps = 0.01)", r.cost <= 0.1 && runs.back().cert.certified,
           fmt("cost %.3e <= 0.1 (bound %.3e), final d %.3e", r.cost, r.cost_bound, r.final_distance), t.seconds(),
           10.0);
  }

  {
    Timer t;
    std::vector<std::string> problems;
    auto need = [&](bool ok, const std::string& what) {
      if (!ok) problems.push_back(what);
    };

    {
      const auto ex = make_example("spiral", {{"epsilon", 0.5}, {"k", 1.0}}, 1.0);
      // Band top below 2 eps keeps the region near |z| = 1, where H tends to 0, out of the band.
      runs.push_back(synthesize_run("spiral eps=0.5", ex, 0.02, 0.05, 0.9, v2(3.5, 0.0), 0.1,
                                    EnvelopeMode::conservative));
      const auto ex1 = make_example("minimum_time_1d", {}, 0.9);
      runs.push_back(synthesize_run("minimum_time_1d x=-1.5", ex1, 1e-3, 1e-3, 2.0, v1(-1.5), 0.1,
                                    EnvelopeMode::interpolating));
      const auto ex2 = make_example("power_law", {{"r", 0.0}, {"s", 1.0}}, 0.9);
      runs.push_back(synthesize_run("power_law s=1", ex2, 1e-3, 1e-3, 2.0, v1(1.5), 0.2, EnvelopeMode::conservative));
    }

    std::size_t legs = 0;
    for (const auto& run : runs) {
      const auto& r = run.result;
      for (const auto& f : r.failures()) problems.push_back(run.name + ": " + f);
      legs += r.legs.size();
      need(!r.trajectory.check_invariants().has_value(), run.name + ": trajectory invariants");
      need(run.kl.passed(), run.name + ": d(z(t)) <= beta(d(x), t)");
      need(run.sandwich.passed(), run.name + ": envelope sandwich");
      need(run.modulus.function.strictly_increasing(), run.name + ": modulus strictly increasing");
      double prev = -std::numeric_limits<double>::infinity();
      for (const auto& m : run.cert.m_hat) {
        if (!m) continue;
        need(*m >= prev, run.name + ": m_hat monotone");
        prev = *m;
      }
      const auto env_top = run.beta->envelopes().upper(run.beta->envelopes().sigma);
      const auto axioms = check_kl_axioms(*run.beta, env_top, 10.0, 50, 50);
      need(axioms.passed() && axioms.checked >= 2500, run.name + ": KL axioms on 50x50 lattice");
    }

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::size_t ham_failures = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      ControlSystem sys;
      sys.state_dim = 2;
      const double c0 = u(rng), c1 = u(rng);
      for (int c = 0; c < 6; ++c) sys.controls.push_back(v2(u(rng), u(rng)));
      sys.dynamics = [=](const Vector& x, const Vector& a) { return v2(a[0] + c0 * x[1], a[1] * x[0] - c1); };
      sys.lagrangian = [](const Vector& x, const Vector& a) { return a.squaredNorm() + x.squaredNorm(); };
      const Vector x = v2(u(rng), u(rng)), p = v2(u(rng), u(rng));
      const double p0 = std::fabs(u(rng)), lambda = 0.01 + std::fabs(u(rng)) * 5.0;
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t c = 0; c < sys.controls.size(); ++c) {
        const double v = p0 * sys.lagrangian(x, sys.controls[c]) + p.dot(sys.dynamics(x, sys.controls[c]));
        if (v < best) {
          best = v;
          arg = c;
        }
      }
      const auto h = minimize_hamiltonian(sys, x, p0, p);
      const double scaled = hamiltonian(sys, x, lambda * p0, lambda * p);
      if (h.argmin != arg || std::fabs(h.value - best) > 1e-12 * (1.0 + std::fabs(best)) ||
          std::fabs(scaled - lambda * h.value) > 1e-12 * (1.0 + std::fabs(scaled))) {
        ++ham_failures;
      }
    }
    need(ham_failures == 0, fmt("hamiltonian homogeneity/argmin failures %.0f", double(ham_failures)));

    std::string detail = fmt("%.0f trajectories, %.0f legs, 1000 random Hamiltonian instances", double(runs.size()),
                             double(legs));
    for (const auto& p : problems) detail += "; " + p;
    report("criterion 7 (property suite)", problems.empty(), detail, t.seconds(), 120.0);
  }

  std::printf("%s: %d criterion line(s) failed, total %.3f s\n", failures == 0 ? "ALL PASS" : "SOME FAIL", failures,
              total.seconds());
  return failures == 0 ? 0 : 1;
}
