#pragma once

#include <cmath>
#include <vector>

#include "mrf/lyapunov.hpp"
#include "mrf/system_model.hpp"

namespace testing {

inline mrf::Vector v1(double a) { return mrf::Vector::Constant(1, a); }

inline mrf::Vector v2(double a, double b) {
  mrf::Vector v(2);
  v << a, b;
  return v;
}

// z' = a, a in {-1, 1}, l = 1, target {0}.
inline mrf::ControlSystem min_time_system() {
  mrf::ControlSystem sys;
  sys.name = "min_time";
  sys.state_dim = 1;
  sys.controls = {v1(-1.0), v1(1.0)};
  sys.dynamics = [](const mrf::Vector&, const mrf::Vector& a) { return mrf::Vector(a); };
  sys.lagrangian = [](const mrf::Vector&, const mrf::Vector&) { return 1.0; };
  return sys;
}

// U = scale |x| with its two smooth pieces.
inline mrf::CandidateMRF abs_mrf(double p0_bar, double scale = 1.0) {
  mrf::CandidateMRF mrf;
  mrf.name = "abs";
  mrf.p0_bar = p0_bar;
  mrf.value = [scale](const mrf::Vector& x) { return scale * std::fabs(x[0]); };
  mrf.pieces.push_back({[](const mrf::Vector& x) { return std::max(0.0, x[0]); },
                        [scale](const mrf::Vector&) { return v1(-scale); }});
  mrf.pieces.push_back({[](const mrf::Vector& x) { return std::max(0.0, -x[0]); },
                        [scale](const mrf::Vector&) { return v1(scale); }});
  return mrf;
}

inline mrf::DecreaseModulus linear_modulus(double slope, double r_max = 10.0) {
  mrf::DecreaseModulus m;
  m.function = mrf::MonotonePiecewiseLinear({0.0, r_max}, {0.0, slope * r_max});
  m.slope_floor = slope;
  return m;
}

}  // namespace testing
