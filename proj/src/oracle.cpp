#include "mrf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "mrf/simd/kernels.hpp"

namespace mrf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool foot_inside(const GridSpec& grid, const Vector& y) {
  for (int k = 0; k < grid.dim(); ++k) {
    const double slack = 1e-12 * grid.spacing(k);
    if (!(y[k] >= grid.lo[k] - slack && y[k] <= grid.hi[k] + slack)) return false;
  }
  return true;
}

// Multilinear weights of y over the enclosing cell; corner bit k selects the upper node on axis k.
void cell_weights(const GridSpec& grid, const Vector& y, std::vector<std::int32_t>& index,
                  std::vector<double>& weight) {
  const int dim = grid.dim();
  std::vector<std::size_t> base(static_cast<std::size_t>(dim));
  std::vector<double> frac(static_cast<std::size_t>(dim));
  for (int k = 0; k < dim; ++k) {
    const auto n = grid.counts[static_cast<std::size_t>(k)];
    const double pos = (y[k] - grid.lo[k]) / grid.spacing(k);
    const double cell = std::clamp(std::floor(pos), 0.0, static_cast<double>(n - 2));
    base[static_cast<std::size_t>(k)] = static_cast<std::size_t>(cell);
    frac[static_cast<std::size_t>(k)] = std::clamp(pos - cell, 0.0, 1.0);
  }
  const std::size_t corners = std::size_t{1} << dim;
  index.resize(corners);
  weight.resize(corners);
  std::vector<std::size_t> node(static_cast<std::size_t>(dim));
  for (std::size_t c = 0; c < corners; ++c) {
    double w = 1.0;
    for (int k = 0; k < dim; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      const bool up = (c >> k) & 1U;
      node[ku] = base[ku] + (up ? 1 : 0);
      w *= up ? frac[ku] : 1.0 - frac[ku];
    }
    index[c] = static_cast<std::int32_t>(grid.flatten(node));
    weight[c] = w;
  }
}

double relax_node(const simd::RelaxStencil& st, const std::vector<double>& v, std::size_t i) {
  double best = 0.0;
  for (std::size_t c = 0; c < st.controls; ++c) {
    double cand = st.cost[c * st.nodes + i];
    for (std::size_t k = 0; k < st.corners; ++k) {
      const std::size_t s = st.slot(c, k, i);
      cand = std::fma(st.weight[s], v[static_cast<std::size_t>(st.index[s])], cand);
    }
    best = (c == 0 || cand < best) ? cand : best;
  }
  return best;
}

}  // namespace

const char* to_string(SweepMode mode) {
  return mode == SweepMode::jacobi ? "jacobi" : "gauss_seidel";
}

SweepMode sweep_mode_from_string(const std::string& name) {
  if (name == "gauss_seidel") return SweepMode::gauss_seidel;
  if (name == "jacobi") return SweepMode::jacobi;
  throw ConfigError("unknown sweep mode '" + name + "' (expected gauss_seidel or jacobi)");
}

std::size_t GridValueTable::count(NodeKind k) const {
  return static_cast<std::size_t>(std::count(kind.begin(), kind.end(), k));
}

GridValueTable hjb_value_iteration(const ControlSystem& system, const TargetSet& target,
                                   const GridSpec& grid, const HjbOptions& options) {
  if (grid.dim() != system.state_dim) throw ConfigError("oracle grid dimension differs from state dimension");
  if (grid.dim() > 2) throw ConfigError("the oracle supports state dimension at most 2");
  if (system.controls.empty()) throw ConfigError("control set is empty");
  if (!(options.h > 0.0)) throw ConfigError("oracle time step h must be positive");
  if (!(options.iter_tol > 0.0)) throw ConfigError("oracle iter_tol must be positive");
  if (options.max_sweeps < 1) throw ConfigError("oracle max_sweeps must be at least 1");
  if (grid.size() > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max())) {
    throw ConfigError("oracle grid too large");
  }

  const std::size_t n = grid.size();
  const std::size_t nc = system.control_count();
  const std::size_t corners = std::size_t{1} << grid.dim();

  GridValueTable table;
  table.grid = grid;
  table.h = options.h;
  table.mode = options.mode;
  table.isa = simd::to_string(simd::active_isa());
  table.values.assign(n, kUnreached);
  table.kind.assign(n, NodeKind::free);

  simd::RelaxStencil st;
  st.resize(n, nc, corners);
  std::vector<std::int32_t> idx;
  std::vector<double> w;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector x = grid.point(i);
    std::optional<double> fixed;
    if (target.contains(x)) {
      table.kind[i] = NodeKind::target;
      fixed = 0.0;
    } else if (options.fixed_value) {
      fixed = options.fixed_value(x);
      if (fixed) table.kind[i] = NodeKind::fixed;
    }
    if (fixed) {
      table.values[i] = *fixed;
      for (std::size_t c = 0; c < nc; ++c) {
        st.cost[c * n + i] = *fixed;
        for (std::size_t k = 0; k < corners; ++k) {
          st.index[st.slot(c, k, i)] = static_cast<std::int32_t>(i);
          st.weight[st.slot(c, k, i)] = 0.0;
        }
      }
      continue;
    }
    for (std::size_t c = 0; c < nc; ++c) {
      bool feasible = true;
      double cost = 0.0;
      Vector y;
      try {
        cost = options.h * eval_lagrangian(system, x, c);
        y = x + options.h * eval_dynamics(system, x, c);
        feasible = foot_inside(grid, y);
      } catch (const SingularDynamics&) {
        feasible = false;
      }
      if (!feasible) {
        st.cost[c * n + i] = kUnreached;
        for (std::size_t k = 0; k < corners; ++k) {
          st.index[st.slot(c, k, i)] = static_cast<std::int32_t>(i);
          st.weight[st.slot(c, k, i)] = 0.0;
        }
        continue;
      }
      cell_weights(grid, y, idx, w);
      st.cost[c * n + i] = cost;
      for (std::size_t k = 0; k < corners; ++k) {
        st.index[st.slot(c, k, i)] = idx[k];
        st.weight[st.slot(c, k, i)] = w[k];
      }
    }
  }

  auto& v = table.values;
  std::vector<double> scratch;
  const std::size_t chunks = std::max<std::size_t>(1, n / 4096);
  std::vector<double> chunk_change(chunks, 0.0);

  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    double change = 0.0;
    if (options.mode == SweepMode::gauss_seidel) {
      const bool forward = sweep % 2 == 1;
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t i = forward ? j : n - 1 - j;
        const double nv = relax_node(st, v, i);
        if (nv > v[i]) table.monotone = false;
        change = std::max(change, std::fabs(nv - v[i]));
        v[i] = nv;
      }
    } else {
      scratch.resize(n);
      parallel_for_chunks(n, chunks, options.threads, [&](std::size_t b, std::size_t e, std::size_t c) {
        chunk_change[c] = simd::relax_jacobi(st, v, scratch, b, e);
      });
      for (std::size_t i = 0; i < n && table.monotone; ++i) {
        if (scratch[i] > v[i]) table.monotone = false;
      }
      change = simd::max_element(chunk_change);
      v.swap(scratch);
    }
    table.sweeps = sweep;
    table.last_change = change;
    table.change_history.push_back(change);
    if (change < options.iter_tol) {
      table.converged = true;
      return table;
    }
  }
  std::ostringstream msg;
  msg << "value iteration did not converge in " << options.max_sweeps << " sweeps (last change "
      << table.last_change << ")";
  throw NonConvergence(msg.str(), table.sweeps, table.last_change);
}

void write_value_table_csv(std::ostream& out, const GridValueTable& table) {
  for (int k = 0; k < table.grid.dim(); ++k) out << "x" << (k + 1) << ',';
  out << "value\n";
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < table.values.size(); ++i) {
    const Vector x = table.grid.point(i);
    for (Eigen::Index k = 0; k < x.size(); ++k) out << x[k] << ',';
    out << table.values[i] << '\n';
  }
  out.precision(old);
}

BoundComparison compare_bound(const GridValueTable& table, const CandidateMRF& mrf, double p0_bar,
                              double tol, const std::function<bool(const Vector&)>& include) {
  if (!(p0_bar > 0.0)) throw ConfigError("bound comparison needs p0_bar > 0");
  BoundComparison rep;
  rep.tolerance = tol;
  for (std::size_t i = 0; i < table.values.size(); ++i) {
    if (table.kind[i] != NodeKind::free) continue;
    const Vector x = table.grid.point(i);
    if (include && !include(x)) continue;
    const double v = table.values[i];
    const double bound = mrf(x) / p0_bar;
    const double margin = v - bound;
    ++rep.checked;
    rep.max_value = std::max(rep.max_value, v);
    if (margin > rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_point = x;
    }
    if (margin > tol) {
      ++rep.violations;
      if (rep.first_violations.size() < 20) rep.first_violations.push_back({x, v, bound});
    }
  }
  return rep;
}

double sup_error(const GridValueTable& table, const ScalarField& exact,
                 const std::function<bool(const Vector&)>& include) {
  double err = 0.0;
  for (std::size_t i = 0; i < table.values.size(); ++i) {
    if (table.kind[i] != NodeKind::free) continue;
    const Vector x = table.grid.point(i);
    if (include && !include(x)) continue;
    err = std::max(err, std::fabs(table.values[i] - exact(x)));
  }
  return err;
}

SpiralFacts spiral_facts(double rho_bar, double d_tol) {
  if (!(rho_bar > 1.0 && rho_bar < 4.0)) throw ConfigError("initial radius must lie in ]1, 4[");
  if (!(d_tol > 0.0 && d_tol < rho_bar - 1.0)) throw ConfigError("d_tol must lie in ]0, rho_bar - 1[");
  SpiralFacts f;
  f.rho_bar = rho_bar;
  f.d_tol = d_tol;
  f.limit_time = std::log(rho_bar);
  f.time_to_tol = std::log(rho_bar / (1.0 + d_tol));
  f.winding_quadrature = std::log((rho_bar - 1.0) * (1.0 + d_tol) / (rho_bar * d_tol));

  // State (rho, theta); the step shrinks with rho - 1 so the angular rate stays resolved.
  auto field = [](double rho, double& drho, double& dtheta) {
    const double gap = rho - 1.0;
    if (!(gap > 0.0)) throw SingularDynamics("spiral reached the unit circle", Vector::Constant(1, rho));
    drho = -rho;
    dtheta = -1.0 / gap;
  };
  auto rk4 = [&](double rho, double theta, double h, double& rho1, double& theta1) {
    double a1, b1, a2, b2, a3, b3, a4, b4;
    field(rho, a1, b1);
    field(rho + 0.5 * h * a1, a2, b2);
    field(rho + 0.5 * h * a2, a3, b3);
    field(rho + h * a3, a4, b4);
    rho1 = rho + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    theta1 = theta + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
  };
  auto dist = [](double rho) { return std::max(0.0, std::min(rho - 1.0, 4.0 - rho)); };

  constexpr double kStepFactor = 1e-3;
  double t = 0.0;
  double rho = rho_bar;
  double theta = 0.0;
  while (dist(rho) >= d_tol) {
    const double h = kStepFactor * (rho - 1.0);
    double r1, th1;
    rk4(rho, theta, h, r1, th1);
    if (dist(r1) < d_tol) {
      double lo = 0.0;
      double hi = h;
      for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, t); ++it) {
        const double mid = 0.5 * (lo + hi);
        double rm, tm;
        rk4(rho, theta, mid, rm, tm);
        (dist(rm) < d_tol ? hi : lo) = mid;
      }
      rk4(rho, theta, hi, r1, th1);
      t += hi;
      rho = r1;
      theta = th1;
      ++f.steps;
      break;
    }
    t += h;
    rho = r1;
    theta = th1;
    ++f.steps;
  }
  f.approach_time = t;
  f.winding = std::fabs(theta);
  f.winding_turns = f.winding / (2.0 * std::numbers::pi);
  return f;
}

}  // namespace mrf
