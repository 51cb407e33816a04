#include "mrf/system_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mrf {

namespace {

void check_index(const ControlSystem& system, std::size_t a_index) {
  if (system.controls.empty()) throw ConfigError("control set is empty");
  if (a_index >= system.controls.size()) {
    throw ConfigError("control index " + std::to_string(a_index) + " out of range");
  }
}

}  // namespace

std::vector<Vector> active_gradients(std::span<const SmoothPiece> pieces, const Vector& x,
                                     double tol) {
  std::vector<Vector> out;
  for (const auto& piece : pieces) {
    if (piece.region_gap(x) <= tol) out.push_back(piece.gradient(x));
  }
  return out;
}

TargetSet point_target(int dim) {
  TargetSet target;
  target.distance = [](const Vector& x) { return x.norm(); };
  if (dim == 1) {
    target.distance_pieces.push_back(
        {[](const Vector& x) { return std::max(0.0, -x[0]); },
         [](const Vector&) { return Vector::Constant(1, 1.0); }});
    target.distance_pieces.push_back(
        {[](const Vector& x) { return std::max(0.0, x[0]); },
         [](const Vector&) { return Vector::Constant(1, -1.0); }});
  } else {
    target.distance_pieces.push_back(
        {[](const Vector&) { return 0.0; }, [](const Vector& x) -> Vector { return x / x.norm(); }});
  }
  return target;
}

TargetSet annulus_complement_target(double inner, double outer) {
  TargetSet target;
  target.distance = [inner, outer](const Vector& x) {
    const double r = x.norm();
    return std::max(0.0, std::min(r - inner, outer - r));
  };
  const double mid = 0.5 * (inner + outer);
  // d = r - inner on the inner half, outer - r on the outer half.
  target.distance_pieces.push_back(
      {[mid](const Vector& x) { return std::max(0.0, x.norm() - mid); },
       [](const Vector& x) -> Vector { return x / x.norm(); }});
  target.distance_pieces.push_back(
      {[mid](const Vector& x) { return std::max(0.0, mid - x.norm()); },
       [](const Vector& x) -> Vector { return -x / x.norm(); }});
  return target;
}

Vector eval_dynamics(const ControlSystem& system, const Vector& x, std::size_t a_index) {
  check_index(system, a_index);
  Vector v = system.dynamics(x, system.controls[a_index]);
  if (!v.allFinite()) {
    std::ostringstream msg;
    msg << "non-finite dynamics at x = [" << x.transpose() << "]";
    throw SingularDynamics(msg.str(), x);
  }
  return v;
}

double eval_lagrangian(const ControlSystem& system, const Vector& x, std::size_t a_index) {
  check_index(system, a_index);
  const double l = system.lagrangian(x, system.controls[a_index]);
  if (!std::isfinite(l)) {
    std::ostringstream msg;
    msg << "non-finite Lagrangian at x = [" << x.transpose() << "]";
    throw SingularDynamics(msg.str(), x);
  }
  if (l < 0.0) {
    std::ostringstream msg;
    msg << "negative Lagrangian " << l << " at x = [" << x.transpose() << "]";
    throw NegativeLagrangian(msg.str(), x, l);
  }
  return l;
}

HamiltonianMin minimize_hamiltonian(const ControlSystem& system, const Vector& x, double p0,
                                    const Vector& p) {
  if (system.controls.empty()) throw ConfigError("control set is empty");
  if (!(p0 >= 0.0)) throw ConfigError("p0 must be non-negative");
  HamiltonianMin best{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t a = 0; a < system.controls.size(); ++a) {
    const double v = p0 * eval_lagrangian(system, x, a) + p.dot(eval_dynamics(system, x, a));
    if (v < best.value) best = {v, a};
  }
  return best;
}

double hamiltonian(const ControlSystem& system, const Vector& x, double p0, const Vector& p) {
  return minimize_hamiltonian(system, x, p0, p).value;
}

std::size_t hamiltonian_argmin(const ControlSystem& system, const Vector& x, double p0,
                               const Vector& p) {
  return minimize_hamiltonian(system, x, p0, p).argmin;
}

Partition::Partition(std::vector<double> points) : points_(std::move(points)) {
  if (points_.empty() || points_.front() != 0.0) {
    throw ConfigError("partition must start at 0");
  }
  for (std::size_t j = 1; j < points_.size(); ++j) {
    if (!(points_[j] > points_[j - 1])) throw ConfigError("partition must be strictly increasing");
  }
}

void Partition::push_back(double s) {
  if (!(s > points_.back())) throw ConfigError("partition must be strictly increasing");
  points_.push_back(s);
}

double Partition::diameter() const {
  double diam = 0.0;
  for (std::size_t j = 1; j < points_.size(); ++j) diam = std::max(diam, points_[j] - points_[j - 1]);
  return diam;
}

const char* to_string(TrajectoryStatus status) {
  switch (status) {
    case TrajectoryStatus::reached_level: return "reached_level";
    case TrajectoryStatus::approached_target: return "approached_target";
    case TrajectoryStatus::truncated: return "truncated";
  }
  return "unknown";
}

std::optional<std::string> Trajectory::check_invariants() const {
  if (nodes.empty()) return std::nullopt;
  if (nodes.front().cost != 0.0) return "cost at first node is not 0";
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const auto& a = nodes[i - 1];
    const auto& b = nodes[i];
    if (!(b.t > a.t)) return "t not strictly increasing at node " + std::to_string(i);
    if (!(b.s > a.s)) return "s not strictly increasing at node " + std::to_string(i);
    if (b.cost < a.cost) return "cost decreases at node " + std::to_string(i);
  }
  return std::nullopt;
}

}  // namespace mrf
