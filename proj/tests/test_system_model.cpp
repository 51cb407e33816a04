#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "mrf/registry.hpp"
#include "mrf/system_model.hpp"

using namespace mrf;
using testing::v1;
using testing::v2;

TEST_CASE("spiral dynamics at (2,0) with alpha 1") {
  const auto ex = make_example("spiral");
  const Vector f = eval_dynamics(ex.system, v2(2.0, 0.0), 1);
  CHECK(f[0] == doctest::Approx(-2.0));
  CHECK(f[1] == doctest::Approx(-2.0));
}

TEST_CASE("power law dynamics") {
  auto ex = make_example("power_law", {{"r", 1.0}});
  CHECK(eval_dynamics(ex.system, v1(0.0), 0)[0] == 0.0);
  CHECK(eval_dynamics(ex.system, v1(0.0), 1)[0] == 0.0);
  ex = make_example("power_law", {{"r", 2.0}});
  CHECK(eval_dynamics(ex.system, v1(0.5), 1)[0] == doctest::Approx(0.25));
}

TEST_CASE("singular dynamics and negative lagrangian are reported") {
  const auto ex = make_example("spiral");
  CHECK_THROWS_AS(eval_dynamics(ex.system, v2(1.0, 0.0), 0), SingularDynamics);
  ControlSystem sys = testing::min_time_system();
  sys.lagrangian = [](const Vector&, const Vector&) { return -1.0; };
  CHECK_THROWS_AS(eval_lagrangian(sys, v1(0.3), 0), NegativeLagrangian);
}

TEST_CASE("minimized hamiltonian on the 1-D minimum-time example") {
  const auto sys = testing::min_time_system();
  CHECK(hamiltonian(sys, v1(1.0), 0.5, v1(1.0)) == doctest::Approx(-0.5));
  CHECK(hamiltonian_argmin(sys, v1(1.0), 0.5, v1(1.0)) == 0);
  CHECK(hamiltonian_argmin(sys, v1(-1.0), 0.5, v1(-1.0)) == 1);
  CHECK(hamiltonian(sys, v1(0.7), 0.0, v1(0.0)) == 0.0);
}

TEST_CASE("ties resolve to the first control") {
  ControlSystem sys = testing::min_time_system();
  sys.dynamics = [](const Vector&, const Vector&) { return v1(0.0); };
  sys.lagrangian = [](const Vector&, const Vector&) { return 0.0; };
  CHECK(hamiltonian_argmin(sys, v1(0.2), 1.0, v1(3.0)) == 0);
}

TEST_CASE("empty control set is a configuration error") {
  ControlSystem sys = testing::min_time_system();
  sys.controls.clear();
  CHECK_THROWS_AS(hamiltonian(sys, v1(1.0), 1.0, v1(1.0)), ConfigError);
}

TEST_CASE("hamiltonian equals a brute-force scan and is positively homogeneous") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    ControlSystem sys;
    sys.state_dim = 2;
    const double a0 = u(rng), a1 = u(rng), a2 = u(rng);
    for (int c = 0; c < 5; ++c) sys.controls.push_back(v2(u(rng), u(rng)));
    sys.dynamics = [=](const Vector& x, const Vector& a) { return v2(a[0] * x[1] + a0, a[1] - a1 * x[0]); };
    sys.lagrangian = [=](const Vector& x, const Vector& a) { return a.squaredNorm() + std::fabs(a2 * x[0]); };
    const Vector x = v2(u(rng), u(rng));
    const Vector p = v2(u(rng), u(rng));
    const double p0 = std::fabs(u(rng));
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t c = 0; c < 5; ++c) {
      const double v = p0 * sys.lagrangian(x, sys.controls[c]) + p.dot(sys.dynamics(x, sys.controls[c]));
      if (v < best) {
        best = v;
        arg = c;
      }
    }
    const auto h = minimize_hamiltonian(sys, x, p0, p);
    CHECK(h.value == doctest::Approx(best).epsilon(1e-12));
    CHECK(h.argmin == arg);
    const double lambda = 0.1 + std::fabs(u(rng));
    CHECK(hamiltonian(sys, x, lambda * p0, lambda * p) == doctest::Approx(lambda * h.value).epsilon(1e-12));
  }
}

TEST_CASE("targets and distances") {
  const auto point = point_target(2);
  CHECK(point.distance(v2(3.0, 4.0)) == doctest::Approx(5.0));
  CHECK(point.contains(v2(0.0, 0.0)));
  const auto ring = annulus_complement_target(1.0, 4.0);
  CHECK(ring.distance(v2(2.0, 0.0)) == doctest::Approx(1.0));
  CHECK(ring.distance(v2(0.0, 3.5)) == doctest::Approx(0.5));
  CHECK(ring.contains(v2(0.5, 0.0)));
  CHECK(ring.contains(v2(5.0, 0.0)));
}

TEST_CASE("partition and trajectory invariants") {
  CHECK_THROWS_AS(Partition({0.0, 0.5, 0.5}), ConfigError);
  Partition p;
  p.push_back(0.25);
  p.push_back(1.0);
  CHECK(p.diameter() == doctest::Approx(0.75));
  Trajectory t;
  t.nodes.push_back({0.0, 0.0, v1(1.0), 0, 0.0});
  t.nodes.push_back({0.5, 0.5, v1(0.5), 0, 0.5});
  CHECK_FALSE(t.check_invariants().has_value());
  t.nodes.push_back({0.4, 0.6, v1(0.4), 0, 0.6});
  CHECK(t.check_invariants().has_value());
}
