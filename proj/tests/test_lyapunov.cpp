#include <doctest.h>

#include "helpers.hpp"
#include "mrf/lyapunov.hpp"
#include "mrf/registry.hpp"

using namespace mrf;
using testing::v1;
using testing::v2;

namespace {

GridSpec line_grid(double spacing = 1e-3) { return GridSpec::from_spacing(v1(-3.0), v1(3.0), spacing); }

VerifyOptions band(double delta, double sigma) {
  VerifyOptions o;
  o.delta = delta;
  o.sigma = sigma;
  return o;
}

}  // namespace

TEST_CASE("limiting gradients of |x|") {
  const auto mrf = testing::abs_mrf(0.5);
  CHECK(mrf.limiting_gradients(v1(0.5)).size() == 1);
  CHECK(mrf.limiting_gradients(v1(0.5))[0][0] == 1.0);
  CHECK(mrf.limiting_gradients(v1(0.0)).size() == 2);
}

TEST_CASE("spiral candidate gradients carry norm at most L on the band") {
  const auto mrf = spiral_candidate(0.5, 1.0);
  for (double r : {1.5, 2.0, 2.5, 3.0, 3.5}) {
    for (const auto& p : mrf.limiting_gradients(v2(0.0, r))) CHECK(p.norm() <= 1.5 + 1e-12);
  }
  CHECK(mrf.limiting_gradients(v2(2.0, 0.0)).size() == 2);
}

TEST_CASE("band modulus of |x| with p0_bar 0.5 is constant 0.5") {
  const auto sys = testing::min_time_system();
  const auto mrf = testing::abs_mrf(0.5);
  const auto cert = verify_mrf_band(sys, point_target(1), mrf, line_grid(), band(0.1, 2.0));
  REQUIRE(cert.certified);
  for (const auto& m : cert.m_hat) {
    REQUIRE(m.has_value());
    CHECK(*m == doctest::Approx(0.5));
  }
  CHECK(cert.worst_h == doctest::Approx(-0.5));
}

TEST_CASE("p0_bar 2 violates the decrease condition at every band point") {
  const auto sys = testing::min_time_system();
  const auto mrf = testing::abs_mrf(2.0);
  const auto cert = verify_mrf_band(sys, point_target(1), mrf, line_grid(), band(0.1, 2.0));
  CHECK_FALSE(cert.certified);
  CHECK(cert.violation_count == cert.points_in_band);
  CHECK(cert.worst_h == doctest::Approx(1.0));
  CHECK_THROWS_AS(cert.raise_if_failed(), MrfViolation);
}

TEST_CASE("band modulus samples are non-decreasing in the level") {
  const auto ex = make_example("spiral", {{"epsilon", 0.5}});
  const auto grid = GridSpec::from_spacing(ex.defaults.box_lo, ex.defaults.box_hi, 0.05);
  const auto cert = verify_mrf_band(ex.system, ex.target, ex.mrf, grid, band(0.05, 4.0 / 3.0));
  double prev = -std::numeric_limits<double>::infinity();
  for (const auto& m : cert.m_hat) {
    if (!m) continue;
    CHECK(*m >= prev);
    prev = *m;
  }
}

TEST_CASE("spiral candidate is certified with p0_bar 1") {
  const auto ex = make_example("spiral", {{"epsilon", 0.5}});
  const auto grid = GridSpec::from_spacing(ex.defaults.box_lo, ex.defaults.box_hi, 0.02);
  const auto cert = verify_mrf_band(ex.system, ex.target, ex.mrf, grid, band(0.05, 4.0 / 3.0));
  CHECK(cert.certified);
  CHECK(cert.worst_h < 0.0);
  CHECK(cert.positive_definite);
  CHECK(cert.sublevel_bounded);
}

TEST_CASE("power law candidate with s - r = -1 is rejected as not positive definite") {
  const auto ex = make_example("power_law", {{"s", -1.0}, {"r", 0.0}});
  const auto cert = verify_mrf_band(ex.system, ex.target, ex.mrf, line_grid(), band(1e-3, 1.0));
  CHECK_FALSE(cert.certified);
  CHECK_FALSE(cert.positive_definite);
  CHECK_THROWS_AS(cert.raise_if_failed(), PositiveDefinitenessViolation);
}

TEST_CASE("decrease modulus from constant samples") {
  std::vector<ModulusSample> s;
  for (int i = 0; i <= 9; ++i) s.push_back({0.1 + 0.1 * i, 0.5});
  const auto m = build_decrease_modulus(s, 0.1);
  CHECK(m(0.0) == 0.0);
  CHECK(m(1.0) <= 0.45 + 1e-12);
  CHECK(m.function.strictly_increasing());
  for (double r = 0.1; r <= 1.0; r += 0.01) CHECK(m(r) <= 0.9 * 0.5 + 1e-12);
}

TEST_CASE("decrease modulus from a single sample is a ramp from the origin") {
  const std::vector<ModulusSample> s{{1.0, 0.4}};
  const auto m = build_decrease_modulus(s, 0.1);
  CHECK(m(0.0) == 0.0);
  CHECK(m(1.0) <= 0.36 + 1e-12);
  CHECK(m(0.5) == doctest::Approx(m(1.0) / 2.0));
}

TEST_CASE("decrease modulus from two samples") {
  const std::vector<ModulusSample> s{{0.1, 0.2}, {1.0, 0.3}};
  const auto m = build_decrease_modulus(s, 0.1);
  CHECK(m(0.1) <= 0.18 + 1e-12);
  CHECK(m(1.0) <= 0.27 + 1e-12);
  CHECK(m.function.strictly_increasing());
  CHECK(m.inverse(m(0.5)) == doctest::Approx(0.5));
}

TEST_CASE("decrease modulus rejects unusable samples") {
  CHECK_THROWS_AS(build_decrease_modulus(std::vector<ModulusSample>{}, 0.1), ModulusError);
  CHECK_THROWS_AS(build_decrease_modulus(std::vector<ModulusSample>{{0.5, -0.1}}, 0.1), ModulusError);
}

TEST_CASE("supersolution check on the 1-D minimum-time example") {
  const auto sys = testing::min_time_system();
  const auto mrf = testing::abs_mrf(0.5);
  std::vector<ModulusSample> s;
  for (int i = 0; i <= 9; ++i) s.push_back({0.1 + 0.1 * i, 0.5});
  const auto m = build_decrease_modulus(s, 0.1);
  const std::vector<Vector> pts{v1(1.0)};
  const auto ok = check_supersolution(sys, point_target(1), mrf, m, pts, 0.1, 2.0);
  CHECK(ok.passed);
  CHECK(ok.checked == 1);
  CHECK(ok.worst_margin == doctest::Approx(-0.5 + m(1.0)));

  const auto inflated = testing::linear_modulus(2.0);
  const auto bad = check_supersolution(sys, point_target(1), mrf, inflated, pts, 0.1, 2.0);
  CHECK_FALSE(bad.passed);
  CHECK(bad.failures == 1);

  // Every point on the kink circle |z| = 2 of the spiral candidate.
  const auto ex = make_example("spiral", {{"epsilon", 0.5}});
  std::vector<Vector> kink;
  for (int k = 0; k < 16; ++k) kink.push_back(2.0 * v2(std::cos(0.4 * k), std::sin(0.4 * k)));
  const auto vacuous = check_supersolution(ex.system, ex.target, ex.mrf, m, kink, 0.0, 2.0);
  CHECK(vacuous.checked == 0);
  CHECK(vacuous.skipped_nonsmooth == kink.size());
  CHECK(vacuous.passed);
}

TEST_CASE("weak Petrov condition") {
  const auto sys = testing::min_time_system();
  const auto target = point_target(1);
  const auto pts = grid_points(GridSpec::from_spacing(v1(-2.0), v1(2.0), 0.01));
  SUBCASE("min(rho, 1) satisfies the inequality but is not integrable") {
    const RateFunction mu = [](double r) { return std::min(r, 1.0); };
    const auto rep = petrov_inequality_sweep(sys, target, mu, 1.0, pts);
    CHECK(rep.inequality_holds);
    CHECK(rep.worst_slack <= 0.0);
    CHECK_THROWS_AS(check_weak_petrov(sys, target, mu, 1.0, pts), IntegrabilityError);
  }
  SUBCASE("rho^2 is not integrable") {
    const RateFunction mu = [](double r) { return r * r; };
    CHECK_THROWS_AS(check_weak_petrov(sys, target, mu, 1.0, pts), IntegrabilityError);
  }
  SUBCASE("constant rate gives a linear potential") {
    const RateFunction mu = [](double) { return 0.8; };
    const auto rep = check_weak_petrov(sys, target, mu, 1.0, pts, 0.5);
    CHECK(rep.inequality_holds);
    REQUIRE(rep.induced.has_value());
    CHECK(rep.potential_at_delta == doctest::Approx(1.25));
    CHECK((*rep.induced)(v1(0.4)) == doctest::Approx(0.5));
  }
  SUBCASE("square-root rate is integrable") {
    const RateFunction mu = [](double r) { return std::sqrt(std::min(r, 1.0)); };
    const auto rep = check_weak_petrov(sys, target, mu, 1.0, pts, 0.5);
    CHECK(rep.inequality_holds);
    CHECK(rep.potential_at_delta == doctest::Approx(2.0).epsilon(1e-6));
  }
}

TEST_CASE("dyadic integral of 1/mu") {
  const auto conv = integrate_reciprocal([](double r) { return std::sqrt(r); }, 1.0);
  CHECK(conv.converged);
  CHECK(conv.value == doctest::Approx(2.0).epsilon(1e-6));
  CHECK_FALSE(integrate_reciprocal([](double r) { return r; }, 1.0).converged);
}

TEST_CASE("verification is independent of the thread count") {
  const auto ex = make_example("spiral", {{"epsilon", 0.5}});
  const auto grid = GridSpec::from_spacing(ex.defaults.box_lo, ex.defaults.box_hi, 0.05);
  auto o = band(0.05, 4.0 / 3.0);
  const auto a = verify_mrf_band(ex.system, ex.target, ex.mrf, grid, o);
  o.threads = 4;
  const auto b = verify_mrf_band(ex.system, ex.target, ex.mrf, grid, o);
  CHECK(a.worst_h == b.worst_h);
  CHECK(a.points_in_band == b.points_in_band);
  for (std::size_t i = 0; i < a.m_hat.size(); ++i) CHECK(a.m_hat[i] == b.m_hat[i]);
}
