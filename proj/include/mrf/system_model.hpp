#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mrf/errors.hpp"

namespace mrf {

using Vector = Eigen::VectorXd;

using VectorField = std::function<Vector(const Vector& x, const Vector& a)>;
using CostRate = std::function<double(const Vector& x, const Vector& a)>;
using ScalarField = std::function<double(const Vector& x)>;
using GradientField = std::function<Vector(const Vector& x)>;

/// Controlled system z' = f(z, a), running cost l(z, a) >= 0, with the compact
/// control set replaced by a finite ordered sample.
struct ControlSystem {
  std::string name;
  int state_dim = 0;
  VectorField dynamics;
  CostRate lagrangian;
  std::vector<Vector> controls;
  // Distance to the target below which the dynamics are no longer evaluated.
  double singular_d_tol = 1e-3;

  std::size_t control_count() const { return controls.size(); }
};

/// A C^1 piece of a piecewise-smooth function. The piece is active at x when
/// region_gap(x) <= tolerance; region_gap is 0 on the closed region.
struct SmoothPiece {
  ScalarField region_gap;
  GradientField gradient;
};

/// Gradients of every piece active at x. Empty when no piece is active.
std::vector<Vector> active_gradients(std::span<const SmoothPiece> pieces, const Vector& x,
                                     double tol);

/// Closed target C given by its Euclidean distance function.
struct TargetSet {
  ScalarField distance;
  // Gradient pieces of the distance function off C (optional).
  std::vector<SmoothPiece> distance_pieces;
  double contains_tol = 0.0;

  bool contains(const Vector& x) const { return distance(x) <= contains_tol; }
};

TargetSet point_target(int dim);
/// C = {|z| <= inner} U {|z| >= outer}.
TargetSet annulus_complement_target(double inner, double outer);

/// Returns f(x, a); throws SingularDynamics on any non-finite component.
Vector eval_dynamics(const ControlSystem& system, const Vector& x, std::size_t a_index);

/// Returns l(x, a); throws NegativeLagrangian when l < 0.
double eval_lagrangian(const ControlSystem& system, const Vector& x, std::size_t a_index);

struct HamiltonianMin {
  double value = 0.0;
  std::size_t argmin = 0;
};

/// min over the control sample of p0 l(x,a) + <p, f(x,a)>, lowest index on ties.
HamiltonianMin minimize_hamiltonian(const ControlSystem& system, const Vector& x, double p0,
                                    const Vector& p);

double hamiltonian(const ControlSystem& system, const Vector& x, double p0, const Vector& p);

std::size_t hamiltonian_argmin(const ControlSystem& system, const Vector& x, double p0,
                               const Vector& p);

/// Strictly increasing sequence of parameter values starting at 0.
class Partition {
 public:
  Partition() : points_{0.0} {}
  explicit Partition(std::vector<double> points);

  void push_back(double s);
  const std::vector<double>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  double back() const { return points_.back(); }
  double diameter() const;

 private:
  std::vector<double> points_;
};

enum class TrajectoryStatus { reached_level, approached_target, truncated };

const char* to_string(TrajectoryStatus status);

struct TrajectoryNode {
  double t = 0.0;
  double s = 0.0;
  Vector x;
  std::size_t control = 0;
  double cost = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryNode> nodes;
  TrajectoryStatus status = TrajectoryStatus::truncated;

  /// Describes the first broken invariant (monotone t and s, non-decreasing
  /// cost starting at 0), or nullopt when all hold.
  std::optional<std::string> check_invariants() const;
};

}  // namespace mrf
