#include <doctest.h>

#include "helpers.hpp"
#include "mrf/kl_bound.hpp"
#include "mrf/registry.hpp"

using namespace mrf;
using testing::v1;
using testing::v2;

namespace {

SigmaEnvelopes identity_envelopes() {
  SigmaEnvelopes e;
  e.minus = MonotonePiecewiseLinear({0.0, 1.0}, {0.0, 1.0});
  e.plus = MonotonePiecewiseLinear({0.0, 1.0}, {0.0, 1.0});
  e.sigma = 1.0;
  return e;
}

EnvelopeOptions interpolating() {
  EnvelopeOptions o;
  o.mode = EnvelopeMode::interpolating;
  return o;
}

}  // namespace

TEST_CASE("envelopes of U = d take the neighbouring knot values") {
  const auto grid = GridSpec::from_spacing(v1(-2.0), v1(2.0), 0.01);
  const auto env = build_sigma_envelopes(testing::abs_mrf(1.0), point_target(1), 1.5, grid, interpolating());
  const auto& xs = env.plus.xs();
  REQUIRE(xs.size() > 4);
  CHECK(xs[1] == doctest::Approx(1e-6 * xs[2]));
  for (std::size_t i = 2; i < xs.size(); ++i) {
    CHECK(env.plus.ys()[i] == doctest::Approx(xs[std::min(i + 1, xs.size() - 1)]));
    CHECK(env.minus.ys()[i] == doctest::Approx(xs[i == 2 ? 2 : i - 1]));
  }
  for (double r = 1e-4; r <= 1.5; r += 0.0137) {
    CHECK(env.minus(r) <= r + 1e-12);
    CHECK(env.plus(r) >= r - 1e-12);
  }
}

TEST_CASE("envelopes of U = 2d halve the level") {
  const auto grid = GridSpec::from_spacing(v1(-2.0), v1(2.0), 0.01);
  const auto env = build_sigma_envelopes(testing::abs_mrf(1.0, 2.0), point_target(1), 3.0, grid, interpolating());
  // Knots sit on grid levels 0.02 apart, so each envelope is off by at most one knot.
  for (double r : {0.2, 1.0, 2.5}) {
    CHECK(env.lower(r) <= r / 2.0);
    CHECK(env.lower(r) >= r / 2.0 - 0.0101);
    CHECK(env.upper(r) >= r / 2.0);
    CHECK(env.upper(r) <= r / 2.0 + 0.0101);
  }
}

TEST_CASE("spiral envelopes sandwich the distance at random points") {
  const auto ex = make_example("spiral", {{"epsilon", 0.5}});
  const auto grid = GridSpec::from_spacing(ex.defaults.box_lo, ex.defaults.box_hi, 0.02);
  EnvelopeOptions o;
  o.lipschitz = 1.5 * 1.5;
  const auto env = build_sigma_envelopes(ex.mrf, ex.target, 4.0 / 3.0, grid, o);
  const auto audit = audit_sandwich(env, ex.mrf, ex.target, grid, 1000, 1234);
  CHECK(audit.checked > 100);
  CHECK(audit.failures == 0);
  CHECK(env.minus.strictly_increasing());
  CHECK(env.plus.strictly_increasing());
}

TEST_CASE("quadratic U keeps d under the upper envelope near the target") {
  const auto ex = make_example("power_law", {{"r", 0.0}, {"s", 1.0}}, 0.9);
  const auto grid = GridSpec::from_spacing(ex.defaults.box_lo, ex.defaults.box_hi, 1e-3);
  EnvelopeOptions o;
  o.lipschitz = 3.0;
  const auto env = build_sigma_envelopes(ex.mrf, ex.target, 2.0, grid, o);
  // d = sqrt(2U) here, steeper than any chord through the origin.
  for (double x : {1e-5, 1e-4, 7.4e-4, 3e-3, 0.05, 0.7, 1.9}) {
    const double u = ex.mrf(v1(x));
    CHECK(env.plus(u) >= x);
    CHECK(env.minus(u) <= x);
  }
}

TEST_CASE("conservative envelopes need a Lipschitz constant") {
  const auto grid = GridSpec::from_spacing(v1(-2.0), v1(2.0), 0.01);
  CHECK_THROWS_AS(build_sigma_envelopes(testing::abs_mrf(1.0), point_target(1), 1.0, grid, EnvelopeOptions{}),
                  ConfigError);
}

TEST_CASE("identity envelopes and identity mtilde collapse beta") {
  const double eps = 0.1;
  const KLBound beta(identity_envelopes(), testing::linear_modulus(2.0), eps);
  for (double r : {0.0, 0.1, 0.5, 0.9}) {
    for (double t : {0.0, 0.3, 2.0, 50.0}) {
      CHECK(beta(r, t) == doctest::Approx(r * (2 * eps + 1) / (2 * eps + 1 + t)));
    }
  }
  CHECK(beta(0.7, 0.0) == doctest::Approx(0.7));
  CHECK(beta.mtilde(0.3) == doctest::Approx(0.3));
  const auto axioms = check_kl_axioms(beta, 1.0, 10.0);
  CHECK(axioms.passed());
  CHECK(axioms.checked > 0);
}

TEST_CASE("small modulus dominates mtilde") {
  const KLBound beta(identity_envelopes(), testing::linear_modulus(0.5), 0.1);
  CHECK(beta.mtilde(0.4) == doctest::Approx(0.2));
  CHECK(beta.mtilde_inverse(0.2) == doctest::Approx(0.4));
  CHECK(check_kl_axioms(beta, 1.0, 10.0).passed());
}

TEST_CASE("beta audit along trajectories") {
  const KLBound beta(identity_envelopes(), testing::linear_modulus(2.0), 0.1);
  const auto target = point_target(1);
  Trajectory stuck;
  for (int k = 0; k <= 20; ++k) stuck.nodes.push_back({double(k), double(k), v1(0.5), 0, 0.0});
  const auto bad = verify_kl(stuck, beta, target, v1(0.5));
  CHECK(bad.failures > 0);
  CHECK(bad.worst_slack > 0.0);

  Trajectory resting;
  for (int k = 0; k <= 5; ++k) resting.nodes.push_back({double(k), double(k), v1(0.0), 0, 0.0});
  CHECK(verify_kl(resting, beta, target, v1(0.0)).passed());

  Trajectory descent;
  for (int k = 0; k <= 10; ++k) {
    const double t = 0.05 * k;
    descent.nodes.push_back({t, t, v1(0.5 - t), 0, t});
  }
  CHECK(verify_kl(descent, beta, target, v1(0.5)).passed());
}
