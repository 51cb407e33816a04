#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace mrf {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (empty control set, bad parameters, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A dynamics or cost evaluation produced a non-finite value.
class SingularDynamics : public Error {
 public:
  SingularDynamics(const std::string& what, Eigen::VectorXd where)
      : Error(what), state(std::move(where)) {}
  Eigen::VectorXd state;
};

/// The Lagrangian returned a negative value.
class NegativeLagrangian : public Error {
 public:
  NegativeLagrangian(const std::string& what, Eigen::VectorXd where, double v)
      : Error(what), state(std::move(where)), value(v) {}
  Eigen::VectorXd state;
  double value;
};

class PositiveDefinitenessViolation : public Error {
 public:
  PositiveDefinitenessViolation(const std::string& what, Eigen::VectorXd where, double u)
      : Error(what), state(std::move(where)), value(u) {}
  Eigen::VectorXd state;
  double value;
};

/// Raised when the decrease modulus cannot be built or is inconsistent with a band.
class ModulusError : public Error {
 public:
  using Error::Error;
};

class IntegrabilityError : public Error {
 public:
  IntegrabilityError(const std::string& what, double last_ratio)
      : Error(what), ratio(last_ratio) {}
  double ratio;
};

/// No (gradient, control) pair reaches the required quotient of -1.
class FeedbackGap : public Error {
 public:
  FeedbackGap(const std::string& what, Eigen::VectorXd where, double best_value)
      : Error(what), state(std::move(where)), best(best_value) {}
  Eigen::VectorXd state;
  double best;
};

/// Step halving went below the minimum step without satisfying the decrease test.
class StepCollapse : public Error {
 public:
  StepCollapse(const std::string& what, Eigen::VectorXd where, double step_size)
      : Error(what), state(std::move(where)), step(step_size) {}
  Eigen::VectorXd state;
  double step;
};

class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, int sweeps_done, double last_change)
      : Error(what), sweeps(sweeps_done), change(last_change) {}
  int sweeps;
  double change;
};

}  // namespace mrf
