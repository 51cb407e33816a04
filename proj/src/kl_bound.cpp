#include "mrf/kl_bound.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mrf {

namespace {

struct LevelSample {
  double u;
  double d;
};

// Sorted (U, d) samples answering max{d : U <= level} and min{d : U >= level}.
class LevelTable {
 public:
  explicit LevelTable(std::vector<LevelSample> samples) : samples_(std::move(samples)) {
    std::sort(samples_.begin(), samples_.end(), [](const auto& a, const auto& b) {
      return a.u < b.u || (a.u == b.u && a.d < b.d);
    });
    const std::size_t n = samples_.size();
    prefix_max_.resize(n);
    suffix_min_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      prefix_max_[i] = i == 0 ? samples_[i].d : std::max(prefix_max_[i - 1], samples_[i].d);
    }
    for (std::size_t i = n; i-- > 0;) {
      suffix_min_[i] = i + 1 == n ? samples_[i].d : std::min(suffix_min_[i + 1], samples_[i].d);
    }
  }

  std::optional<double> max_below(double level) const {
    const auto it = std::upper_bound(samples_.begin(), samples_.end(), level,
                                     [](double v, const LevelSample& s) { return v < s.u; });
    if (it == samples_.begin()) return std::nullopt;
    return prefix_max_[static_cast<std::size_t>(it - samples_.begin()) - 1];
  }

  std::optional<double> min_above(double level) const {
    const auto it = std::lower_bound(samples_.begin(), samples_.end(), level,
                                     [](const LevelSample& s, double v) { return s.u < v; });
    if (it == samples_.end()) return std::nullopt;
    return suffix_min_[static_cast<std::size_t>(it - samples_.begin())];
  }

  const std::vector<LevelSample>& samples() const { return samples_; }

 private:
  std::vector<LevelSample> samples_;
  std::vector<double> prefix_max_;
  std::vector<double> suffix_min_;
};

}  // namespace

double SigmaEnvelopes::lower(double r) const {
  if (r <= 0.0) return 0.0;
  return std::min(minus(r), r);
}

double SigmaEnvelopes::upper(double r) const {
  if (r <= 0.0) return 0.0;
  return plus(r);
}

double SigmaEnvelopes::lower_inverse(double y) const {
  if (y <= 0.0) return 0.0;
  return std::max(minus.inverse(y), y);
}

SigmaEnvelopes build_sigma_envelopes(const CandidateMRF& mrf, const TargetSet& target, double sigma,
                                     const GridSpec& grid, const EnvelopeOptions& options) {
  if (!(sigma > 0.0)) throw ConfigError("envelope level sigma must be positive");
  if (options.max_knots < 2) throw ConfigError("envelopes need at least two knots");
  const bool conservative = options.mode == EnvelopeMode::conservative;
  if (conservative && !(options.lipschitz > 0.0)) {
    throw ConfigError("conservative envelopes need a positive Lipschitz constant");
  }
  const double hd = conservative ? grid.half_diagonal() : 0.0;
  const double lift = options.lipschitz * hd;
  const double u_cap = sigma + lift;

  const std::size_t chunks = std::max<std::size_t>(1, grid.size() / 8192);
  std::vector<std::vector<LevelSample>> parts(chunks);
  parallel_for_chunks(grid.size(), chunks, options.threads, [&](std::size_t b, std::size_t e, std::size_t c) {
    for (std::size_t i = b; i < e; ++i) {
      const Vector z = grid.point(i);
      const double d = target.distance(z);
      if (d <= target.contains_tol) continue;
      const double u = mrf(z);
      if (!std::isfinite(u) || u <= 0.0 || u > u_cap) continue;
      parts[c].push_back({u, d});
    }
  });
  std::vector<LevelSample> all;
  for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());
  const LevelTable table(std::move(all));
  const auto& sorted = table.samples();

  std::vector<double> levels;
  for (const auto& s : sorted) {
    if (s.u <= sigma) levels.push_back(s.u);
  }
  if (levels.empty()) throw ConfigError("no grid point lies in the sublevel set U <= sigma");
  std::vector<double> knots;
  const std::size_t want = std::min(options.max_knots - 1, levels.size());
  for (std::size_t k = 1; k <= want; ++k) {
    const std::size_t idx = (k * levels.size()) / want - 1;
    if (knots.empty() || levels[idx] > knots.back()) knots.push_back(levels[idx]);
  }
  if (knots.back() < sigma) knots.push_back(sigma);

  // The floor r/L is only sound where U vanishes at the nearest boundary point
  // (U <= L d). Otherwise d can shrink to 0 at a positive level, and the lower
  // envelope is flattened to a small multiple of the smallest sampled d/U.
  double floor_slope = 0.0;
  if (conservative) {
    bool vanishing = true;
    double ratio = std::numeric_limits<double>::infinity();
    for (const auto& s : sorted) {
      if (s.u > options.lipschitz * s.d * (1.0 + 1e-12)) vanishing = false;
      ratio = std::min(ratio, s.d / s.u);
    }
    floor_slope = vanishing ? 1.0 / options.lipschitz : 1e-3 * ratio;
  }

  std::vector<double> xs{0.0}, dn_at, up_at;
  for (double r : knots) {
    const auto up = table.max_below(r + lift);
    const auto dn = table.min_above(r - lift);
    if (!up || !dn) continue;  // empty constraint set: skipped, filled by interpolation
    xs.push_back(r);
    dn_at.push_back(*dn);
    up_at.push_back(*up);
  }
  // Interpolation between knots must not cut under a concave d(U) or over a
  // convex one, so each knot takes the extreme over its neighbouring interval.
  std::vector<double> lo{0.0}, hi{0.0};
  for (std::size_t k = 0; k < up_at.size(); ++k) {
    const double r = xs[k + 1];
    double vp = up_at[std::min(k + 1, up_at.size() - 1)];
    double vm = dn_at[k > 0 ? k - 1 : 0];
    if (conservative) {
      vp += hd;
      vm = std::max(vm - hd, r * floor_slope);
    }
    lo.push_back(std::min(vm, r));
    hi.push_back(vp);
  }
  // Below the first sampled level d may grow faster than linearly in U (d ~ sqrt U
  // for quadratic U), so the upper envelope jumps to its first-interval bound
  // over a short lead-in instead of rising along a chord from the origin.
  if (xs.size() >= 2) {
    const double r_in = 1e-6 * xs[1];
    xs.insert(xs.begin() + 1, r_in);
    lo.insert(lo.begin() + 1, lo[1] * 1e-6);
    hi.insert(hi.begin() + 1, hi[1]);
  }
  if (xs.size() < 2) throw ConfigError("envelope construction found no usable knot");

  // Raising an upper envelope or lowering a lower one keeps it valid, so ties
  // are broken in that direction to make both strictly increasing.
  for (std::size_t i = 1; i < hi.size(); ++i) {
    if (!(hi[i] > hi[i - 1])) hi[i] = hi[i - 1] + 1e-12 * std::max(1.0, hi[i - 1]);
  }
  for (std::size_t i = lo.size() - 1; i-- > 1;) {
    if (!(lo[i] < lo[i + 1])) lo[i] = lo[i + 1] * (1.0 - 1e-9);
  }
  if (!(lo[1] > 0.0)) throw ConfigError("lower envelope vanishes away from the target");

  SigmaEnvelopes env;
  env.minus = MonotonePiecewiseLinear(std::move(xs), std::move(lo));
  env.plus = MonotonePiecewiseLinear(env.minus.xs(), std::move(hi));
  env.sigma = sigma;
  env.samples = sorted.size();
  env.mode = options.mode;
  return env;
}

SandwichAudit audit_sandwich(const SigmaEnvelopes& env, const CandidateMRF& mrf, const TargetSet& target,
                             const GridSpec& grid, std::size_t count, std::uint64_t seed, double tol) {
  SandwichAudit audit;
  std::mt19937_64 rng(seed);
  std::vector<std::uniform_real_distribution<double>> axes;
  for (int k = 0; k < grid.dim(); ++k) axes.emplace_back(grid.lo[k], grid.hi[k]);
  Vector z(grid.dim());
  for (std::size_t i = 0; i < count; ++i) {
    for (int k = 0; k < grid.dim(); ++k) z[k] = axes[static_cast<std::size_t>(k)](rng);
    const double d = target.distance(z);
    if (d <= target.contains_tol) continue;
    const double u = mrf(z);
    if (!(u > 0.0) || u > env.sigma) continue;
    ++audit.checked;
    const double a = env.lower(u) - d;
    const double b = d - env.upper(u);
    audit.worst_lower = std::max(audit.worst_lower, a);
    audit.worst_upper = std::max(audit.worst_upper, b);
    if (a > tol || b > tol) ++audit.failures;
  }
  return audit;
}

KLBound::KLBound(SigmaEnvelopes envelopes, DecreaseModulus modulus, double epsilon)
    : env_(std::move(envelopes)), modulus_(std::move(modulus)), epsilon_(epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!modulus_.function.strictly_increasing() || !(modulus_.slope_floor > 0.0)) {
    throw ModulusError("modulus has a flat segment and cannot be inverted");
  }
  if (!env_.minus.strictly_increasing() || !env_.plus.strictly_increasing()) {
    throw ModulusError("sigma envelopes must be strictly increasing");
  }
}

double KLBound::mtilde(double r) const { return r <= 0.0 ? 0.0 : std::min(r, modulus_(r)); }

double KLBound::mtilde_inverse(double y) const {
  if (y <= 0.0) return 0.0;
  return std::max(y, modulus_.inverse(y));
}

double KLBound::operator()(double r, double t) const {
  if (r <= 0.0) return 0.0;
  const double c = 2.0 * epsilon_ + 1.0;
  const double level = env_.lower_inverse(r) * c / (c + t);
  return env_.upper(mtilde_inverse(level));
}

KLBound build_kl_bound(const SigmaEnvelopes& envelopes, const DecreaseModulus& modulus, double epsilon) {
  return KLBound(envelopes, modulus, epsilon);
}

KLAxiomReport check_kl_axioms(const KLBound& beta, double r_max, double t_max, std::size_t n_r,
                              std::size_t n_t) {
  if (!(r_max > 0.0) || !(t_max > 0.0) || n_r < 2 || n_t < 2) {
    throw ConfigError("KL lattice needs positive extents and at least 2 x 2 points");
  }
  KLAxiomReport rep;
  constexpr double kFar = 1e30;
  for (std::size_t j = 0; j < n_t; ++j) {
    const double t = t_max * static_cast<double>(j) / static_cast<double>(n_t - 1);
    if (beta(0.0, t) != 0.0) ++rep.zero_failures;
    double prev_r = 0.0;
    for (std::size_t i = 1; i <= n_r; ++i) {
      const double r = r_max * static_cast<double>(i) / static_cast<double>(n_r);
      const double b = beta(r, t);
      ++rep.checked;
      if (!(b > prev_r)) ++rep.increasing_failures;
      prev_r = b;
      if (j > 0) {
        const double t_prev = t_max * static_cast<double>(j - 1) / static_cast<double>(n_t - 1);
        if (b > beta(r, t_prev)) ++rep.decreasing_failures;
      } else if (!(beta(r, kFar) <= 1e-6 * b)) {
        ++rep.vanishing_failures;
      }
    }
  }
  return rep;
}

KLAudit verify_kl(const Trajectory& trajectory, const KLBound& beta, const TargetSet& target,
                  const Vector& x, double tol) {
  KLAudit audit;
  const double d0 = target.distance(x);
  for (const auto& node : trajectory.nodes) {
    const double slack = target.distance(node.x) - beta(d0, node.t);
    ++audit.checked;
    if (slack > audit.worst_slack) {
      audit.worst_slack = slack;
      audit.worst_t = node.t;
    }
    if (slack > tol) ++audit.failures;
  }
  return audit;
}

}  // namespace mrf
