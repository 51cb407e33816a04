#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mrf/grid.hpp"
#include "mrf/piecewise_linear.hpp"
#include "mrf/system_model.hpp"

namespace mrf {

/// Lipschitz and semiconcavity constants of U on a level band.
struct BandConstants {
  double lipschitz = 0.0;
  double semiconcavity = 0.0;
  bool estimated = true;
};

/// Candidate Minimum Restraint Function U with its constant p0_bar.
///
/// The limiting gradient set D*U(x) is read off the smooth pieces: every piece
/// whose closed region contains x (within act_tol) contributes its gradient.
/// Without pieces, a central finite-difference gradient is used.
struct CandidateMRF {
  std::string name;
  ScalarField value;
  std::vector<SmoothPiece> pieces;
  double p0_bar = 0.0;
  double act_tol = 1e-9;
  double fd_step = 1e-7;
  std::optional<BandConstants> constants;

  double operator()(const Vector& x) const { return value(x); }
  std::vector<Vector> limiting_gradients(const Vector& x) const;
  std::size_t active_piece_count(const Vector& x) const;
};

struct VerifyOptions {
  double delta = 0.0;
  double sigma = 0.0;
  std::size_t bands = 32;
  // Certificate requires every band modulus sample to exceed this.
  double margin = 1e-12;
  // Points closer than this to the target are not evaluated.
  double d_tol = 1e-3;
  // Tolerance for U vanishing on the target boundary.
  double u_tol = 1e-6;
  unsigned threads = 1;
  std::size_t max_reported = 20;
};

struct HamiltonianViolation {
  Vector x;
  Vector p;
  double h = 0.0;
};

struct BoundaryShell {
  double shell_width = 0.0;
  std::size_t samples = 0;
  double min_u = 0.0;
  double max_u = 0.0;
  // Smallest limit of U along the normal from the lowest shell samples toward the
  // target; <= u_tol iff U vanishes somewhere on the boundary.
  double min_extrapolated = 0.0;
};

/// Outcome of the grid verification of H(x, p0_bar, D*U(x)) < 0 on U^{-1}([delta, sigma]).
struct BandCertificate {
  bool certified = false;
  double delta = 0.0;
  double sigma = 0.0;
  double p0_bar = 0.0;
  double margin = 0.0;
  double grid_resolution = 0.0;

  std::vector<double> band_levels;            // delta_i, increasing
  std::vector<std::optional<double>> m_hat;   // -max H over U^{-1}([delta_i, sigma]); empty band -> nullopt
  double worst_h = 0.0;                       // max sampled H over the band
  Vector worst_point;

  std::size_t points_total = 0;
  std::size_t points_in_target = 0;
  std::size_t points_singular = 0;
  std::size_t points_in_band = 0;
  std::size_t nonsmooth_points = 0;

  std::size_t violation_count = 0;
  std::vector<HamiltonianViolation> violations;

  bool positive_definite = true;
  std::size_t pd_failures = 0;
  std::optional<Vector> pd_first_failure;
  double pd_first_value = 0.0;
  BoundaryShell boundary;

  bool sublevel_bounded = true;
  BandConstants constants;

  /// Throws PositiveDefinitenessViolation or MrfViolation when not certified.
  void raise_if_failed() const;
};

class MrfViolation : public Error {
 public:
  MrfViolation(const std::string& what, std::optional<HamiltonianViolation> first)
      : Error(what), violation(std::move(first)) {}
  std::optional<HamiltonianViolation> violation;
};

BandCertificate verify_mrf_band(const ControlSystem& system, const TargetSet& target,
                                const CandidateMRF& mrf, const GridSpec& grid,
                                const VerifyOptions& options);

struct ModulusSample {
  double level = 0.0;
  double m_hat = 0.0;
};

/// Strictly increasing piecewise-linear minorant m of the band modulus with m(0) = 0.
struct DecreaseModulus {
  MonotonePiecewiseLinear function;
  double slope_floor = 0.0;
  double eta = 0.1;

  double operator()(double r) const { return r <= 0.0 ? 0.0 : function(r); }
  double inverse(double y) const { return y <= 0.0 ? 0.0 : function.inverse(y); }
  const std::vector<double>& knots_r() const { return function.xs(); }
  const std::vector<double>& knots_m() const { return function.ys(); }
};

/// Builds m from (delta_i, m_hat(delta_i)) samples. On [delta_i, delta_{i+1}] the
/// construction stays below (1 - eta) m_hat(delta_i), so m(r) <= (1 - eta) m_hat(r)
/// for every r in [delta_0, upper_end] and not only at the samples.
DecreaseModulus build_decrease_modulus(std::span<const ModulusSample> samples, double eta = 0.1,
                                       std::optional<double> upper_end = std::nullopt);

/// Collects the finite samples of a certificate.
std::vector<ModulusSample> modulus_samples(const BandCertificate& certificate);

struct SupersolutionReport {
  bool passed = true;
  std::size_t checked = 0;
  std::size_t skipped_nonsmooth = 0;
  std::size_t skipped_other = 0;
  std::size_t failures = 0;
  double worst_margin = -std::numeric_limits<double>::infinity();  // max of H + m(U)
  std::optional<Vector> worst_point;
};

/// Checks H(x, p0_bar, grad U(x)) <= -m(U(x)) where exactly one smooth piece is active
/// and U(x) lies in [u_lo, u_hi].
SupersolutionReport check_supersolution(const ControlSystem& system, const TargetSet& target,
                                        const CandidateMRF& mrf, const DecreaseModulus& modulus,
                                        std::span<const Vector> points, double u_lo, double u_hi,
                                        double d_tol = 1e-3);

SupersolutionReport check_supersolution(const ControlSystem& system, const TargetSet& target,
                                        const CandidateMRF& mrf, const DecreaseModulus& modulus,
                                        const GridSpec& grid, double u_lo, double u_hi,
                                        double d_tol = 1e-3);

using RateFunction = std::function<double(double)>;

struct DyadicIntegral {
  double value = 0.0;
  bool converged = false;
  double tail_ratio = 0.0;
  std::size_t pieces = 0;
};

/// Integral of 1/mu over ]0, r], summed over dyadic pieces [r 2^{-k-1}, r 2^{-k}].
/// Divergence is declared when consecutive pieces stop shrinking geometrically.
DyadicIntegral integrate_reciprocal(const RateFunction& mu, double r);

struct PetrovReport {
  bool inequality_holds = true;
  std::size_t checked = 0;
  double worst_slack = -std::numeric_limits<double>::infinity();  // max of inf<p,f> + mu(d)
  std::optional<Vector> worst_point;
  double potential_at_delta = 0.0;                                  // Phi(delta)
  double p0_bar = 0.0;
  std::optional<CandidateMRF> induced;                              // Phi o d
};

/// Sweeps inf_a <p, f(x,a)> <= -mu(d(x)) for all p in D*d(x), at points with 0 < d(x) < delta.
PetrovReport petrov_inequality_sweep(const ControlSystem& system, const TargetSet& target,
                                     const RateFunction& mu, double delta,
                                     std::span<const Vector> points, double d_tol = 0.0);

/// Full weak Petrov check for a system with l == 1. Throws IntegrabilityError when
/// the integral of 1/mu diverges at 0; on success `induced` holds Phi o d with p0_bar.
PetrovReport check_weak_petrov(const ControlSystem& system, const TargetSet& target,
                               const RateFunction& mu, double delta,
                               std::span<const Vector> points, double p0_bar = 0.5,
                               double d_tol = 0.0);

/// Phi o d with Phi(r) = int_0^r d rho / mu(rho), continued linearly past delta.
CandidateMRF potential_of_distance(const TargetSet& target, const RateFunction& mu, double delta,
                                   double p0_bar);

std::vector<Vector> grid_points(const GridSpec& grid);

}  // namespace mrf
