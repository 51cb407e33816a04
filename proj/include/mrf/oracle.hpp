#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mrf/grid.hpp"
#include "mrf/lyapunov.hpp"
#include "mrf/system_model.hpp"

namespace mrf {

enum class SweepMode { gauss_seidel, jacobi };

const char* to_string(SweepMode mode);
SweepMode sweep_mode_from_string(const std::string& name);

/// Value used for "not reached yet" and for controls whose foot point leaves the box.
inline constexpr double kUnreached = 1e30;

struct HjbOptions {
  double h = 0.01;
  double iter_tol = 1e-8;
  int max_sweeps = 100000;
  SweepMode mode = SweepMode::gauss_seidel;
  unsigned threads = 1;
  // Nodes held at a prescribed value (e.g. a collar around a singular set).
  std::function<std::optional<double>(const Vector&)> fixed_value;
};

enum class NodeKind : std::uint8_t { free, target, fixed };

struct GridValueTable {
  GridSpec grid;
  std::vector<double> values;
  std::vector<NodeKind> kind;
  double h = 0.0;
  SweepMode mode = SweepMode::gauss_seidel;
  int sweeps = 0;
  double last_change = 0.0;
  bool converged = false;
  // True when no sweep ever raised a node value.
  bool monotone = true;
  std::vector<double> change_history;
  std::string isa;

  std::size_t count(NodeKind k) const;
};

/// Semi-Lagrangian fixed point V(x) = min_a [h l(x,a) + V(x + h f(x,a))] with
/// multilinear interpolation and V = 0 on target nodes. Throws NonConvergence
/// when max_sweeps is exhausted.
GridValueTable hjb_value_iteration(const ControlSystem& system, const TargetSet& target,
                                   const GridSpec& grid, const HjbOptions& options);

/// Node coordinates followed by the value, one node per row.
void write_value_table_csv(std::ostream& out, const GridValueTable& table);

struct BoundViolation {
  Vector x;
  double value = 0.0;
  double bound = 0.0;
};

struct BoundComparison {
  std::size_t checked = 0;
  std::size_t violations = 0;
  double tolerance = 0.0;
  double worst_margin = -std::numeric_limits<double>::infinity();  // max V - U/p0_bar
  Vector worst_point;
  double max_value = 0.0;
  std::vector<BoundViolation> first_violations;
  bool passed() const { return violations == 0; }
};

/// Checks V_h(x) <= U(x)/p0_bar + tol at free nodes (optionally restricted).
BoundComparison compare_bound(const GridValueTable& table, const CandidateMRF& mrf, double p0_bar,
                              double tol, const std::function<bool(const Vector&)>& include = {});

/// Largest |V_h - V| over free nodes for an analytic V.
double sup_error(const GridValueTable& table, const ScalarField& exact,
                 const std::function<bool(const Vector&)>& include = {});

struct SpiralFacts {
  double rho_bar = 0.0;
  double d_tol = 0.0;
  double approach_time = 0.0;       // integrated time until d < d_tol
  double limit_time = 0.0;          // ln rho_bar
  double time_to_tol = 0.0;         // ln(rho_bar / (1 + d_tol))
  double winding = 0.0;             // |theta(t) - theta_bar| at the stop, radians
  double winding_turns = 0.0;
  double winding_quadrature = 0.0;  // closed-form integral of (rho - 1)^{-1}
  std::size_t steps = 0;
};

/// Integrates rho' = -rho, theta' = -1/(rho - 1) from rho_bar until rho - 1 < d_tol.
SpiralFacts spiral_facts(double rho_bar, double d_tol = 1e-3);

}  // namespace mrf
