#pragma once

#include <vector>

namespace mrf {

/// Non-decreasing piecewise-linear function through a list of knots, extended
/// linearly past the last knot with `tail_slope`.
class MonotonePiecewiseLinear {
 public:
  MonotonePiecewiseLinear() = default;
  /// xs strictly increasing, ys non-decreasing, at least two knots. A negative
  /// tail_slope means "reuse the slope of the last segment".
  MonotonePiecewiseLinear(std::vector<double> xs, std::vector<double> ys, double tail_slope = -1.0);

  double operator()(double x) const;

  /// Smallest x with f(x) = y; requires a strictly increasing function.
  double inverse(double y) const;

  bool strictly_increasing() const;
  double min_slope() const;
  double tail_slope() const { return tail_slope_; }

  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }
  bool empty() const { return xs_.empty(); }

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
  double tail_slope_ = 0.0;
};

}  // namespace mrf
