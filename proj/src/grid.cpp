#include "mrf/grid.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "mrf/errors.hpp"

namespace mrf {

GridSpec GridSpec::from_spacing(Eigen::VectorXd lo, Eigen::VectorXd hi, double spacing) {
  if (lo.size() != hi.size() || lo.size() == 0) throw ConfigError("grid box dimension mismatch");
  if (!(spacing > 0.0)) throw ConfigError("grid spacing must be positive");
  std::vector<std::size_t> counts(static_cast<std::size_t>(lo.size()));
  for (Eigen::Index k = 0; k < lo.size(); ++k) {
    if (!(hi[k] > lo[k])) throw ConfigError("grid box must have hi > lo on every axis");
    counts[static_cast<std::size_t>(k)] =
        static_cast<std::size_t>(std::llround((hi[k] - lo[k]) / spacing)) + 1;
  }
  return from_counts(std::move(lo), std::move(hi), std::move(counts));
}

GridSpec GridSpec::from_counts(Eigen::VectorXd lo, Eigen::VectorXd hi, std::vector<std::size_t> counts) {
  if (lo.size() != hi.size() || static_cast<std::size_t>(lo.size()) != counts.size() || counts.empty()) {
    throw ConfigError("grid box dimension mismatch");
  }
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] < 2) throw ConfigError("grid needs at least two nodes per axis");
    if (!(hi[static_cast<Eigen::Index>(k)] > lo[static_cast<Eigen::Index>(k)])) {
      throw ConfigError("grid box must have hi > lo on every axis");
    }
  }
  return GridSpec{std::move(lo), std::move(hi), std::move(counts)};
}

std::size_t GridSpec::size() const {
  std::size_t n = 1;
  for (auto c : counts) n *= c;
  return n;
}

double GridSpec::spacing(int axis) const {
  const auto k = static_cast<Eigen::Index>(axis);
  return (hi[k] - lo[k]) / static_cast<double>(counts[static_cast<std::size_t>(axis)] - 1);
}

double GridSpec::max_spacing() const {
  double h = 0.0;
  for (int k = 0; k < dim(); ++k) h = std::max(h, spacing(k));
  return h;
}

double GridSpec::half_diagonal() const {
  double s = 0.0;
  for (int k = 0; k < dim(); ++k) s += spacing(k) * spacing(k);
  return 0.5 * std::sqrt(s);
}

std::vector<std::size_t> GridSpec::unflatten(std::size_t flat) const {
  std::vector<std::size_t> idx(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) {
    idx[k] = flat % counts[k];
    flat /= counts[k];
  }
  return idx;
}

std::size_t GridSpec::flatten(const std::vector<std::size_t>& index) const {
  std::size_t flat = 0;
  for (std::size_t k = counts.size(); k-- > 0;) flat = flat * counts[k] + index[k];
  return flat;
}

Eigen::VectorXd GridSpec::point(std::size_t flat) const {
  Eigen::VectorXd x(lo.size());
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const auto j = flat % counts[k];
    flat /= counts[k];
    const auto e = static_cast<Eigen::Index>(k);
    // Exact endpoints; interior nodes by linear interpolation.
    x[e] = j + 1 == counts[k] ? hi[e]
                              : lo[e] + (hi[e] - lo[e]) * static_cast<double>(j) /
                                            static_cast<double>(counts[k] - 1);
  }
  return x;
}

bool GridSpec::on_box_face(std::size_t flat) const {
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const auto j = flat % counts[k];
    flat /= counts[k];
    if (j == 0 || j + 1 == counts[k]) return true;
  }
  return false;
}

void parallel_for_chunks(std::size_t n, std::size_t chunk_count, unsigned threads,
                         const std::function<void(std::size_t, std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  chunk_count = std::max<std::size_t>(1, std::min(chunk_count, n));
  auto bounds = [&](std::size_t c) { return std::pair{n * c / chunk_count, n * (c + 1) / chunk_count}; };
  if (threads <= 1 || chunk_count == 1) {
    for (std::size_t c = 0; c < chunk_count; ++c) {
      const auto [b, e] = bounds(c);
      body(b, e, c);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, chunk_count));
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t c = next++; c < chunk_count; c = next++) {
        try {
          const auto [b, e] = bounds(c);
          body(b, e, c);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace mrf
