#include "mrf/piecewise_linear.hpp"

#include <algorithm>
#include <limits>

#include "mrf/errors.hpp"

namespace mrf {

MonotonePiecewiseLinear::MonotonePiecewiseLinear(std::vector<double> xs, std::vector<double> ys,
                                                 double tail_slope)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
  if (xs_.size() != ys_.size() || xs_.size() < 2) {
    throw ModulusError("piecewise-linear function needs at least two matching knots");
  }
  for (std::size_t i = 1; i < xs_.size(); ++i) {
    if (!(xs_[i] > xs_[i - 1])) throw ModulusError("knot abscissae must be strictly increasing");
    if (ys_[i] < ys_[i - 1]) throw ModulusError("knot values must be non-decreasing");
  }
  const std::size_t n = xs_.size();
  tail_slope_ = tail_slope >= 0.0 ? tail_slope
                                  : (ys_[n - 1] - ys_[n - 2]) / (xs_[n - 1] - xs_[n - 2]);
}

double MonotonePiecewiseLinear::operator()(double x) const {
  if (x >= xs_.back()) return ys_.back() + tail_slope_ * (x - xs_.back());
  if (x <= xs_.front()) {
    const double slope = (ys_[1] - ys_[0]) / (xs_[1] - xs_[0]);
    return ys_.front() + slope * (x - xs_.front());
  }
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs_.begin());
  const double w = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
  return ys_[i - 1] + w * (ys_[i] - ys_[i - 1]);
}

double MonotonePiecewiseLinear::inverse(double y) const {
  if (y >= ys_.back()) {
    if (y == ys_.back()) return xs_.back();
    if (tail_slope_ <= 0.0) return std::numeric_limits<double>::infinity();
    return xs_.back() + (y - ys_.back()) / tail_slope_;
  }
  if (y <= ys_.front()) {
    const double slope = (ys_[1] - ys_[0]) / (xs_[1] - xs_[0]);
    if (y == ys_.front() || slope <= 0.0) return xs_.front();
    return xs_.front() + (y - ys_.front()) / slope;
  }
  // First knot with value >= y; the segment [i-1, i] brackets y.
  const auto it = std::lower_bound(ys_.begin(), ys_.end(), y);
  const std::size_t i = static_cast<std::size_t>(it - ys_.begin());
  const double dy = ys_[i] - ys_[i - 1];
  if (dy <= 0.0) return xs_[i - 1];
  return xs_[i - 1] + (y - ys_[i - 1]) / dy * (xs_[i] - xs_[i - 1]);
}

bool MonotonePiecewiseLinear::strictly_increasing() const {
  for (std::size_t i = 1; i < ys_.size(); ++i) {
    if (!(ys_[i] > ys_[i - 1])) return false;
  }
  return tail_slope_ > 0.0;
}

double MonotonePiecewiseLinear::min_slope() const {
  double s = tail_slope_;
  for (std::size_t i = 1; i < xs_.size(); ++i) {
    s = std::min(s, (ys_[i] - ys_[i - 1]) / (xs_[i] - xs_[i - 1]));
  }
  return s;
}

}  // namespace mrf
