#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mrf/grid.hpp"
#include "mrf/lyapunov.hpp"
#include "mrf/piecewise_linear.hpp"
#include "mrf/system_model.hpp"

namespace mrf {

enum class EnvelopeMode {
  // Knots at sampled U values; exact at the knots when U is a function of d.
  interpolating,
  // Knots shifted by the grid half-diagonal and L times it, so the sandwich
  // also holds between grid nodes.
  conservative,
};

struct EnvelopeOptions {
  EnvelopeMode mode = EnvelopeMode::conservative;
  std::size_t max_knots = 256;
  // Lipschitz constant of U on the sampled sublevel set; required in conservative mode.
  double lipschitz = 0.0;
  unsigned threads = 1;
};

/// sigma_-(U(z)) <= d(z) <= sigma_+(U(z)) on U^{-1}([0, sigma]). The knots of
/// `minus` already carry the min{sigma_-(r), r} replacement; lower() also applies
/// it between knots.
struct SigmaEnvelopes {
  MonotonePiecewiseLinear minus;
  MonotonePiecewiseLinear plus;
  double sigma = 0.0;
  std::size_t samples = 0;
  EnvelopeMode mode = EnvelopeMode::conservative;

  double lower(double r) const;
  double upper(double r) const;
  double lower_inverse(double y) const;
};

SigmaEnvelopes build_sigma_envelopes(const CandidateMRF& mrf, const TargetSet& target, double sigma,
                                     const GridSpec& grid, const EnvelopeOptions& options = {});

struct SandwichAudit {
  std::size_t checked = 0;
  std::size_t failures = 0;
  double worst_lower = -std::numeric_limits<double>::infinity();  // max sigma_-(U) - d
  double worst_upper = -std::numeric_limits<double>::infinity();  // max d - sigma_+(U)
  bool passed() const { return failures == 0; }
};

/// Draws `count` uniform points in the grid box and checks the sandwich at
/// those with 0 < U <= sigma.
SandwichAudit audit_sandwich(const SigmaEnvelopes& env, const CandidateMRF& mrf, const TargetSet& target,
                             const GridSpec& grid, std::size_t count, std::uint64_t seed,
                             double tol = 1e-12);

/// beta(r, t) = sigma_+(mtilde^{-1}(sigma_-^{-1}(r) (2 eps + 1)/(2 eps + 1 + t)))
/// with mtilde(r) = min{r, m(r)}.
class KLBound {
 public:
  KLBound(SigmaEnvelopes envelopes, DecreaseModulus modulus, double epsilon);

  double operator()(double r, double t) const;
  double mtilde(double r) const;
  double mtilde_inverse(double y) const;

  const SigmaEnvelopes& envelopes() const { return env_; }
  const DecreaseModulus& modulus() const { return modulus_; }
  double epsilon() const { return epsilon_; }

 private:
  SigmaEnvelopes env_;
  DecreaseModulus modulus_;
  double epsilon_;
};

KLBound build_kl_bound(const SigmaEnvelopes& envelopes, const DecreaseModulus& modulus, double epsilon);

struct KLAxiomReport {
  std::size_t checked = 0;
  std::size_t zero_failures = 0;       // beta(0, t) = 0
  std::size_t increasing_failures = 0; // beta(., t) strictly increasing
  std::size_t decreasing_failures = 0; // beta(r, .) non-increasing
  std::size_t vanishing_failures = 0;  // beta(r, t) -> 0
  bool passed() const {
    return zero_failures + increasing_failures + decreasing_failures + vanishing_failures == 0;
  }
};

/// Checks the class-KL axioms on an n_r x n_t lattice of ]0, r_max] x [0, t_max].
KLAxiomReport check_kl_axioms(const KLBound& beta, double r_max, double t_max, std::size_t n_r = 50,
                              std::size_t n_t = 50);

struct KLAudit {
  std::size_t checked = 0;
  std::size_t failures = 0;
  double worst_slack = -std::numeric_limits<double>::infinity();  // max d(z(t)) - beta(d(x), t)
  double worst_t = 0.0;
  bool passed() const { return failures == 0; }
};

/// Checks d(z(t)) <= beta(d(x), t) + tol at every node.
KLAudit verify_kl(const Trajectory& trajectory, const KLBound& beta, const TargetSet& target,
                  const Vector& x, double tol = 1e-9);

}  // namespace mrf
