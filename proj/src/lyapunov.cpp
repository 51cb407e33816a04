#include "mrf/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "mrf/simd/kernels.hpp"

namespace mrf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector central_gradient(const ScalarField& f, const Vector& x, double step) {
  Vector g(x.size());
  const double h = step * std::max(1.0, x.norm());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Vector xp = x;
    Vector xm = x;
    xp[k] += h;
    xm[k] -= h;
    g[k] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

std::string describe(const Vector& x) {
  std::ostringstream out;
  out << "[" << x.transpose() << "]";
  return out.str();
}

struct QueuedPair {
  Vector x;
  Vector p;
  double u;
};

// Partial result of one grid chunk; merged in chunk order.
struct SweepPartial {
  std::size_t total = 0, in_target = 0, singular = 0, in_band = 0, nonsmooth = 0;
  std::vector<double> bin_max;
  double worst_h = -kInf;
  Vector worst_point;
  std::size_t violation_count = 0;
  std::vector<HamiltonianViolation> violations;
  std::size_t pd_failures = 0;
  std::optional<Vector> pd_first;
  double pd_first_value = 0.0;
  std::vector<std::pair<double, Vector>> shell;  // (u, x)
  bool sublevel_bounded = true;
  double max_grad = 0.0;
  double max_semiconcavity = 0.0;
};

class HamiltonianBatch {
 public:
  HamiltonianBatch(const ControlSystem& system, double p0, std::size_t capacity)
      : system_(system), p0_(p0), capacity_(capacity) {
    queue_.reserve(capacity);
  }

  bool full() const { return queue_.size() >= capacity_; }
  void push(QueuedPair pair) { queue_.push_back(std::move(pair)); }

  template <class Sink>
  void flush(Sink&& sink) {
    const std::size_t n = queue_.size();
    if (n == 0) return;
    const std::size_t nc = system_.control_count();
    const auto dim = static_cast<std::size_t>(system_.state_dim);
    lagr_.assign(n * nc, 0.0);
    flow_.assign(n * nc * dim, 0.0);
    covec_.assign(n * dim, 0.0);
    out_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& q = queue_[i];
      for (std::size_t d = 0; d < dim; ++d) covec_[d * n + i] = q.p[static_cast<Eigen::Index>(d)];
      for (std::size_t c = 0; c < nc; ++c) {
        lagr_[c * n + i] = eval_lagrangian(system_, q.x, c);
        const Vector f = eval_dynamics(system_, q.x, c);
        for (std::size_t d = 0; d < dim; ++d) flow_[(c * dim + d) * n + i] = f[static_cast<Eigen::Index>(d)];
      }
    }
    simd::min_hamiltonian_batch(n, nc, dim, p0_, lagr_, flow_, covec_, out_);
    for (std::size_t i = 0; i < n; ++i) sink(queue_[i], out_[i]);
    queue_.clear();
  }

 private:
  const ControlSystem& system_;
  double p0_;
  std::size_t capacity_;
  std::vector<QueuedPair> queue_;
  std::vector<double> lagr_, flow_, covec_, out_;
};

// U at distance d(x) 2^-40 along the descent direction of d, or the last finite
// value before that. Tends to the boundary value of U for continuous U.
double boundary_limit(const CandidateMRF& mrf, const TargetSet& target, const Vector& x) {
  const double d = target.distance(x);
  Vector grad(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = 1e-7 * std::max(1.0, std::fabs(x[k]));
    Vector xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    grad[k] = (target.distance(xp) - target.distance(xm)) / (2.0 * h);
  }
  if (!(grad.norm() > 0.0) || !grad.allFinite()) return mrf(x);
  const Vector foot = x - d * grad.normalized();
  double last = mrf(x);
  for (int k = 1; k <= 40; ++k) {
    const double u = mrf(foot + std::ldexp(1.0, -k) * (x - foot));
    if (!std::isfinite(u)) break;
    last = u;
  }
  return last;
}

}  // namespace

std::vector<Vector> CandidateMRF::limiting_gradients(const Vector& x) const {
  if (pieces.empty()) return {central_gradient(value, x, fd_step)};
  auto grads = active_gradients(pieces, x, act_tol);
  if (grads.empty()) throw ConfigError("no smooth piece of " + name + " is active at " + describe(x));
  return grads;
}

std::size_t CandidateMRF::active_piece_count(const Vector& x) const {
  if (pieces.empty()) return 1;
  std::size_t n = 0;
  for (const auto& piece : pieces) n += piece.region_gap(x) <= act_tol ? 1 : 0;
  return n;
}

void BandCertificate::raise_if_failed() const {
  if (certified) return;
  if (!positive_definite) {
    std::ostringstream msg;
    msg << "candidate is not positive definite";
    if (pd_first_failure) msg << ": U = " << pd_first_value << " at " << describe(*pd_first_failure);
    else msg << ": U does not vanish on the target boundary";
    throw PositiveDefinitenessViolation(msg.str(), pd_first_failure.value_or(Vector{}), pd_first_value);
  }
  if (!violations.empty()) {
    std::ostringstream msg;
    msg << violation_count << " sampled points with H >= 0; first at " << describe(violations.front().x)
        << " with H = " << violations.front().h;
    throw MrfViolation(msg.str(), violations.front());
  }
  if (!sublevel_bounded) throw MrfViolation("sublevel set reaches the bounding box", std::nullopt);
  if (points_in_band == 0) throw MrfViolation("no grid point falls in the verification band", std::nullopt);
  throw MrfViolation("band modulus does not exceed the margin", std::nullopt);
}

BandCertificate verify_mrf_band(const ControlSystem& system, const TargetSet& target,
                                const CandidateMRF& mrf, const GridSpec& grid,
                                const VerifyOptions& options) {
  if (grid.dim() != system.state_dim) throw ConfigError("grid dimension differs from state dimension");
  if (!(options.delta > 0.0) || !(options.sigma >= options.delta)) {
    throw ConfigError("verification band needs 0 < delta <= sigma");
  }
  if (options.bands == 0) throw ConfigError("at least one band is required");
  if (!(mrf.p0_bar >= 0.0)) throw ConfigError("p0_bar must be non-negative");

  const double delta = options.delta;
  const double sigma = options.sigma;
  const std::size_t bands = sigma > delta ? options.bands : 1;
  const double shell_width = options.d_tol + grid.max_spacing() * std::sqrt(static_cast<double>(grid.dim()));

  auto bin_of = [&](double u) -> std::size_t {
    if (bands == 1) return 0;
    const auto j = static_cast<std::size_t>(std::floor((u - delta) / (sigma - delta) * static_cast<double>(bands)));
    return std::min(j, bands - 1);
  };

  const std::size_t chunk_count = std::max<std::size_t>(1, grid.size() / 4096);
  std::vector<SweepPartial> partials(chunk_count);

  parallel_for_chunks(grid.size(), chunk_count, options.threads, [&](std::size_t begin, std::size_t end, std::size_t chunk) {
    SweepPartial& part = partials[chunk];
    part.bin_max.assign(bands, -kInf);
    HamiltonianBatch batch(system, mrf.p0_bar, 256);
    auto sink = [&](const QueuedPair& q, double h) {
      const std::size_t j = bin_of(q.u);
      part.bin_max[j] = std::max(part.bin_max[j], h);
      if (h > part.worst_h) {
        part.worst_h = h;
        part.worst_point = q.x;
      }
      if (h >= 0.0) {
        ++part.violation_count;
        if (part.violations.size() < options.max_reported) part.violations.push_back({q.x, q.p, h});
      }
    };

    for (std::size_t i = begin; i < end; ++i) {
      ++part.total;
      const Vector x = grid.point(i);
      const double d = target.distance(x);
      if (d <= target.contains_tol) {
        ++part.in_target;
        continue;
      }
      if (d < options.d_tol) {
        ++part.singular;
        continue;
      }
      const double u = mrf(x);
      if (!std::isfinite(u) || u <= 0.0) {
        if (part.pd_failures++ == 0) {
          part.pd_first = x;
          part.pd_first_value = u;
        }
        continue;
      }
      if (d <= shell_width) part.shell.emplace_back(u, x);
      if (u <= sigma && grid.on_box_face(i)) part.sublevel_bounded = false;
      if (u < delta || u > sigma) continue;

      ++part.in_band;
      const auto grads = mrf.limiting_gradients(x);
      if (grads.size() > 1) ++part.nonsmooth;
      for (const auto& p : grads) {
        part.max_grad = std::max(part.max_grad, p.norm());
        batch.push({x, p, u});
        if (batch.full()) batch.flush(sink);
      }

      // Second-difference quotient along each axis, as in the midpoint form of semiconcavity.
      for (int k = 0; k < grid.dim(); ++k) {
        const double h = 0.5 * grid.spacing(k);
        Vector xp = x;
        Vector xm = x;
        xp[k] += h;
        xm[k] -= h;
        if (target.distance(xp) < options.d_tol || target.distance(xm) < options.d_tol) continue;
        const double q = (mrf(xp) + mrf(xm) - 2.0 * u) / (4.0 * h * h);
        if (std::isfinite(q)) part.max_semiconcavity = std::max(part.max_semiconcavity, q);
      }
    }
    batch.flush(sink);
  });

  BandCertificate cert;
  cert.delta = delta;
  cert.sigma = sigma;
  cert.p0_bar = mrf.p0_bar;
  cert.margin = options.margin;
  cert.grid_resolution = grid.max_spacing();
  cert.worst_h = -kInf;

  std::vector<double> bin_max(bands, -kInf);
  double max_grad = 0.0;
  double max_sc = 0.0;
  std::vector<std::pair<double, Vector>> shell;
  for (auto& part : partials) {
    cert.points_total += part.total;
    cert.points_in_target += part.in_target;
    cert.points_singular += part.singular;
    cert.points_in_band += part.in_band;
    cert.nonsmooth_points += part.nonsmooth;
    for (std::size_t j = 0; j < bands && !part.bin_max.empty(); ++j) bin_max[j] = std::max(bin_max[j], part.bin_max[j]);
    if (part.worst_h > cert.worst_h) {
      cert.worst_h = part.worst_h;
      cert.worst_point = part.worst_point;
    }
    cert.violation_count += part.violation_count;
    for (auto& v : part.violations) {
      if (cert.violations.size() < options.max_reported) cert.violations.push_back(std::move(v));
    }
    if (part.pd_failures > 0 && cert.pd_failures == 0) {
      cert.pd_first_failure = part.pd_first;
      cert.pd_first_value = part.pd_first_value;
    }
    cert.pd_failures += part.pd_failures;
    shell.insert(shell.end(), part.shell.begin(), part.shell.end());
    cert.sublevel_bounded = cert.sublevel_bounded && part.sublevel_bounded;
    max_grad = std::max(max_grad, part.max_grad);
    max_sc = std::max(max_sc, part.max_semiconcavity);
  }

  cert.constants = mrf.constants.value_or(BandConstants{1.5 * max_grad, 1.5 * max_sc, true});

  cert.boundary.shell_width = shell_width;
  cert.boundary.samples = shell.size();
  cert.boundary.min_u = kInf;
  cert.boundary.max_u = -kInf;
  cert.boundary.min_extrapolated = kInf;
  for (const auto& [u, x] : shell) {
    cert.boundary.min_u = std::min(cert.boundary.min_u, u);
    cert.boundary.max_u = std::max(cert.boundary.max_u, u);
  }
  // Probe the smallest shell values along the normal toward the target.
  std::stable_sort(shell.begin(), shell.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  const std::size_t probes = std::min<std::size_t>(shell.size(), 64);
  for (std::size_t i = 0; i < probes; ++i) {
    cert.boundary.min_extrapolated =
        std::min(cert.boundary.min_extrapolated, boundary_limit(mrf, target, shell[i].second));
  }
  const bool vanishes = shell.empty() || cert.boundary.min_extrapolated <= options.u_tol;
  cert.positive_definite = cert.pd_failures == 0 && vanishes;

  cert.band_levels.resize(bands);
  cert.m_hat.resize(bands);
  double suffix = -kInf;
  for (std::size_t j = bands; j-- > 0;) {
    cert.band_levels[j] = delta + (sigma - delta) * static_cast<double>(j) / static_cast<double>(bands);
    suffix = std::max(suffix, bin_max[j]);
    if (suffix > -kInf) cert.m_hat[j] = -suffix;
  }

  bool margins_ok = cert.points_in_band > 0;
  for (const auto& m : cert.m_hat) {
    if (m && !(*m > options.margin)) margins_ok = false;
  }
  cert.certified = cert.positive_definite && cert.sublevel_bounded && cert.violation_count == 0 && margins_ok;
  return cert;
}

DecreaseModulus build_decrease_modulus(std::span<const ModulusSample> samples, double eta,
                                       std::optional<double> upper_end) {
  if (samples.empty()) throw ModulusError("no modulus samples");
  if (!(eta > 0.0 && eta < 1.0)) throw ModulusError("safety factor eta must lie in ]0,1[");
  std::vector<ModulusSample> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.level < b.level; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& s = sorted[i];
    if (!(s.level > 0.0) || !std::isfinite(s.level)) throw ModulusError("modulus sample levels must be positive");
    if (!(s.m_hat > 0.0) || !std::isfinite(s.m_hat)) {
      throw ModulusError("band modulus sample is not positive at level " + std::to_string(s.level));
    }
    if (i > 0 && s.level == sorted[i - 1].level) throw ModulusError("duplicate modulus sample level");
    if (i > 0 && s.m_hat < sorted[i - 1].m_hat) throw ModulusError("band modulus samples must be non-decreasing");
  }

  // Knot i >= 1 sits at the right end of [delta_{i-1}, delta_i] and is capped by
  // the left sample; the factor ramp makes the knot values strictly increasing.
  std::vector<double> xs{0.0};
  std::vector<double> caps{0.0};
  xs.push_back(sorted[0].level);
  caps.push_back((1.0 - eta) * sorted[0].m_hat);
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    xs.push_back(sorted[i].level);
    caps.push_back((1.0 - eta) * sorted[i - 1].m_hat);
  }
  if (upper_end && *upper_end > xs.back()) {
    xs.push_back(*upper_end);
    caps.push_back((1.0 - eta) * sorted.back().m_hat);
  }
  constexpr double kRamp = 0.1;
  const double x_last = xs.back();
  std::vector<double> ys(xs.size(), 0.0);
  for (std::size_t i = 1; i < xs.size(); ++i) ys[i] = caps[i] * (1.0 - kRamp * (1.0 - xs[i] / x_last));

  double floor = kInf;
  for (std::size_t i = 1; i < xs.size(); ++i) floor = std::min(floor, (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]));
  if (!(floor > 0.0)) throw ModulusError("constructed modulus is not strictly increasing");

  DecreaseModulus m;
  m.function = MonotonePiecewiseLinear(std::move(xs), std::move(ys), floor);
  m.slope_floor = floor;
  m.eta = eta;
  return m;
}

std::vector<ModulusSample> modulus_samples(const BandCertificate& certificate) {
  std::vector<ModulusSample> out;
  for (std::size_t i = 0; i < certificate.band_levels.size(); ++i) {
    if (certificate.m_hat[i]) out.push_back({certificate.band_levels[i], *certificate.m_hat[i]});
  }
  return out;
}

SupersolutionReport check_supersolution(const ControlSystem& system, const TargetSet& target,
                                        const CandidateMRF& mrf, const DecreaseModulus& modulus,
                                        std::span<const Vector> points, double u_lo, double u_hi,
                                        double d_tol) {
  SupersolutionReport report;
  for (const auto& x : points) {
    const double d = target.distance(x);
    if (d <= target.contains_tol || d < d_tol) {
      ++report.skipped_other;
      continue;
    }
    const double u = mrf(x);
    if (!(u >= u_lo && u <= u_hi)) {
      ++report.skipped_other;
      continue;
    }
    if (mrf.active_piece_count(x) != 1) {
      ++report.skipped_nonsmooth;
      continue;
    }
    const Vector p = mrf.limiting_gradients(x).front();
    const double h = hamiltonian(system, x, mrf.p0_bar, p);
    const double margin = h + modulus(u);
    ++report.checked;
    if (margin > report.worst_margin) {
      report.worst_margin = margin;
      report.worst_point = x;
    }
    if (margin > 1e-14 * std::max(1.0, std::fabs(h))) ++report.failures;
  }
  report.passed = report.failures == 0;
  return report;
}

SupersolutionReport check_supersolution(const ControlSystem& system, const TargetSet& target,
                                        const CandidateMRF& mrf, const DecreaseModulus& modulus,
                                        const GridSpec& grid, double u_lo, double u_hi, double d_tol) {
  const auto points = grid_points(grid);
  return check_supersolution(system, target, mrf, modulus, points, u_lo, u_hi, d_tol);
}

DyadicIntegral integrate_reciprocal(const RateFunction& mu, double r) {
  DyadicIntegral out;
  if (!(r > 0.0)) return out;
  using Rule = boost::math::quadrature::gauss<double, 15>;
  auto inv = [&](double rho) { return 1.0 / mu(rho); };

  constexpr std::size_t kMaxPieces = 1000;
  constexpr double kTailTol = 1e-14;
  double prev = 0.0;
  double upper = r;
  std::size_t stalled = 0;
  for (std::size_t k = 0; k < kMaxPieces; ++k) {
    const double lower = 0.5 * upper;
    const double piece = Rule::integrate(inv, lower, upper);
    out.pieces = k + 1;
    if (!std::isfinite(piece)) {
      out.value = kInf;
      out.tail_ratio = kInf;
      return out;
    }
    out.value += piece;
    if (k >= 4) {
      const double ratio = piece / prev;
      out.tail_ratio = ratio;
      if (ratio >= 1.0 - 1e-6) {
        if (++stalled >= 16) return out;  // not shrinking: divergent
      } else {
        stalled = 0;
        const double tail = piece * ratio / (1.0 - ratio);
        if (tail <= kTailTol * out.value) {
          out.value += tail;
          out.converged = true;
          return out;
        }
      }
    }
    prev = piece;
    upper = lower;
  }
  // Slow geometric decay: close with the geometric tail estimate.
  if (out.tail_ratio < 1.0 - 1e-3) {
    out.value += prev * out.tail_ratio / (1.0 - out.tail_ratio);
    out.converged = true;
  }
  return out;
}

PetrovReport petrov_inequality_sweep(const ControlSystem& system, const TargetSet& target,
                                     const RateFunction& mu, double delta,
                                     std::span<const Vector> points, double d_tol) {
  PetrovReport report;
  for (const auto& x : points) {
    const double d = target.distance(x);
    if (d <= target.contains_tol || d < d_tol || !(d < delta)) continue;
    std::vector<Vector> grads = target.distance_pieces.empty()
                                    ? std::vector<Vector>{central_gradient(target.distance, x, 1e-7)}
                                    : active_gradients(target.distance_pieces, x, 1e-12);
    if (grads.empty()) throw ConfigError("no distance piece is active at " + describe(x));
    const double rate = mu(d);
    for (const auto& p : grads) {
      const double slack = hamiltonian(system, x, 0.0, p) + rate;
      ++report.checked;
      if (slack > report.worst_slack) {
        report.worst_slack = slack;
        report.worst_point = x;
      }
    }
  }
  report.inequality_holds = report.checked == 0 || report.worst_slack <= 1e-12;
  return report;
}

PetrovReport check_weak_petrov(const ControlSystem& system, const TargetSet& target,
                               const RateFunction& mu, double delta,
                               std::span<const Vector> points, double p0_bar, double d_tol) {
  if (!(delta > 0.0)) throw ConfigError("Petrov radius delta must be positive");
  if (!(p0_bar >= 0.0 && p0_bar < 1.0)) throw ConfigError("p0_bar must lie in [0, 1[");
  for (const auto& x : points) {
    const double d = target.distance(x);
    if (d <= target.contains_tol || d < d_tol || !(d < delta)) continue;
    for (std::size_t a = 0; a < system.control_count(); ++a) {
      if (std::fabs(eval_lagrangian(system, x, a) - 1.0) > 1e-12) {
        throw ConfigError("weak Petrov check requires a Lagrangian identically 1");
      }
    }
  }
  PetrovReport report = petrov_inequality_sweep(system, target, mu, delta, points, d_tol);
  const auto integral = integrate_reciprocal(mu, delta);
  if (!integral.converged) {
    std::ostringstream msg;
    msg << "integral of 1/mu over ]0, " << delta << "] diverges (piece ratio " << integral.tail_ratio
        << " after " << integral.pieces << " dyadic pieces)";
    throw IntegrabilityError(msg.str(), integral.tail_ratio);
  }
  report.potential_at_delta = integral.value;
  report.p0_bar = p0_bar;
  if (report.inequality_holds) report.induced = potential_of_distance(target, mu, delta, p0_bar);
  return report;
}

CandidateMRF potential_of_distance(const TargetSet& target, const RateFunction& mu, double delta,
                                   double p0_bar) {
  const auto at_delta = integrate_reciprocal(mu, delta);
  if (!at_delta.converged) throw IntegrabilityError("integral of 1/mu diverges at 0", at_delta.tail_ratio);
  const double phi_delta = at_delta.value;
  const double slope_delta = 1.0 / mu(delta);
  auto phi = [mu, delta, phi_delta, slope_delta](double r) {
    if (r <= 0.0) return 0.0;
    if (r >= delta) return phi_delta + slope_delta * (r - delta);
    return integrate_reciprocal(mu, r).value;
  };
  auto dphi = [mu, delta, slope_delta](double r) { return r >= delta ? slope_delta : 1.0 / mu(r); };

  CandidateMRF mrf;
  mrf.name = "potential_of_distance";
  mrf.p0_bar = p0_bar;
  auto dist = target.distance;
  mrf.value = [dist, phi](const Vector& x) { return phi(dist(x)); };
  for (const auto& piece : target.distance_pieces) {
    auto grad = piece.gradient;
    mrf.pieces.push_back({piece.region_gap, [dist, grad, dphi](const Vector& x) -> Vector {
                            return dphi(dist(x)) * grad(x);
                          }});
  }
  return mrf;
}

std::vector<Vector> grid_points(const GridSpec& grid) {
  std::vector<Vector> pts;
  pts.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) pts.push_back(grid.point(i));
  return pts;
}

}  // namespace mrf
