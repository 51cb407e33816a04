#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "mrf/oracle.hpp"
#include "mrf/registry.hpp"

using namespace mrf;
using testing::v1;
using testing::v2;

namespace {

GridSpec line() { return GridSpec::from_spacing(v1(-2.0), v1(2.0), 0.01); }

}  // namespace

TEST_CASE("1-D minimum time value is |x|") {
  const auto ex = make_example("minimum_time_1d", {}, 0.9);
  const auto grid = line();
  CHECK(grid.size() == 401);
  const auto table = hjb_value_iteration(ex.system, ex.target, grid, HjbOptions{});
  CHECK(table.converged);
  CHECK(table.monotone);
  CHECK(sup_error(table, *ex.value_function) <= 2.0 * (0.01 + 0.01));
  const auto cmp = compare_bound(table, ex.mrf, 0.9, 0.04);
  CHECK(cmp.passed());
  // V = |x| against |x|/0.9: the margin is -|x|/9, largest at the smallest |x|.
  CHECK(cmp.worst_margin == doctest::Approx(-0.01 / 9.0).epsilon(1e-6));
}

TEST_CASE("power law with s = 1 has value x^2/2") {
  const auto ex = make_example("power_law", {{"s", 1.0}}, 0.9);
  const auto table = hjb_value_iteration(ex.system, ex.target, line(), HjbOptions{});
  CHECK(sup_error(table, [](const Vector& x) { return 0.5 * x[0] * x[0]; }) <= 0.04);
  CHECK(compare_bound(table, ex.mrf, 0.9, 0.04).passed());
}

TEST_CASE("zero running cost gives a zero value") {
  auto sys = testing::min_time_system();
  sys.lagrangian = [](const Vector&, const Vector&) { return 0.0; };
  const auto table = hjb_value_iteration(sys, point_target(1), line(), HjbOptions{});
  for (std::size_t i = 0; i < table.values.size(); ++i) CHECK(std::fabs(table.values[i]) <= 1e-12);
}

TEST_CASE("gauss-seidel and jacobi agree") {
  const auto ex = make_example("minimum_time_1d");
  HjbOptions o;
  const auto gs = hjb_value_iteration(ex.system, ex.target, line(), o);
  o.mode = SweepMode::jacobi;
  o.threads = 3;
  const auto jac = hjb_value_iteration(ex.system, ex.target, line(), o);
  for (std::size_t i = 0; i < gs.values.size(); ++i) CHECK(gs.values[i] == doctest::Approx(jac.values[i]).epsilon(1e-7));
}

TEST_CASE("jacobi sweeps do not depend on the thread count") {
  const auto ex = make_example("power_law", {{"s", 1.0}});
  HjbOptions o;
  o.mode = SweepMode::jacobi;
  const auto one = hjb_value_iteration(ex.system, ex.target, line(), o);
  o.threads = 4;
  const auto four = hjb_value_iteration(ex.system, ex.target, line(), o);
  CHECK(one.sweeps == four.sweeps);
  CHECK(one.values == four.values);
}

TEST_CASE("sweep limit raises NonConvergence") {
  const auto ex = make_example("minimum_time_1d");
  HjbOptions o;
  o.max_sweeps = 1;
  CHECK_THROWS_AS(hjb_value_iteration(ex.system, ex.target, line(), o), NonConvergence);
}

TEST_CASE("tiny p0_bar loosens the bound without violations") {
  const auto ex = make_example("minimum_time_1d");
  const auto table = hjb_value_iteration(ex.system, ex.target, line(), HjbOptions{});
  CHECK(compare_bound(table, ex.mrf, 1e-6, 0.0).passed());
}

TEST_CASE("spiral oracle vanishes on the outer ring") {
  const auto ex = make_example("spiral", {{"epsilon", 0.01}}, 1.0);
  HjbOptions o;
  o.fixed_value = ex.oracle_fixed;
  const auto grid = GridSpec::from_spacing(ex.defaults.box_lo, ex.defaults.box_hi, 0.05);
  const auto table = hjb_value_iteration(ex.system, ex.target, grid, o);
  const auto ring = [](const Vector& z) { return z.norm() >= 3.05 && z.norm() < 4.0; };
  const auto cmp = compare_bound(table, ex.mrf, 1.0, 2.0 * (0.01 + 0.05), ring);
  CHECK(cmp.passed());
  CHECK(cmp.checked > 100);
  CHECK(cmp.max_value <= 0.05);
  CHECK(compare_bound(table, ex.mrf, 1.0, 2.0 * (0.01 + 0.05), ex.compare_region).passed());
}

TEST_CASE("value table csv") {
  const auto ex = make_example("minimum_time_1d");
  const auto table = hjb_value_iteration(ex.system, ex.target, GridSpec::from_spacing(v1(-1.0), v1(1.0), 0.5),
                                         HjbOptions{});
  std::ostringstream out;
  write_value_table_csv(out, table);
  CHECK(out.str().rfind("x1,value\n", 0) == 0);
}

TEST_CASE("spiral approach time and winding") {
  const auto f = spiral_facts(2.0, 1e-3);
  CHECK(f.limit_time == doctest::Approx(std::log(2.0)));
  CHECK(std::fabs(f.approach_time - std::log(2.0)) <= 0.02 * std::log(2.0));
  CHECK(f.time_to_tol == doctest::Approx(0.6921476802268619));
  // Independent quadrature of (2 e^{-t} - 1)^{-1} up to the stop time.
  CHECK(f.winding_quadrature == doctest::Approx(6.215607598755456).epsilon(1e-10));
  CHECK(f.winding == doctest::Approx(6.215607598755456).epsilon(1e-4));
  CHECK(f.winding_turns < 1.0);
}

TEST_CASE("approach time vanishes as rho_bar tends to 1") {
  const auto f = spiral_facts(1.01, 1e-3);
  CHECK(f.approach_time < 0.01);
}
