#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace mrf {

/// Uniform tensor grid on an axis-aligned box, endpoints included.
struct GridSpec {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  std::vector<std::size_t> counts;

  static GridSpec from_spacing(Eigen::VectorXd lo, Eigen::VectorXd hi, double spacing);
  static GridSpec from_counts(Eigen::VectorXd lo, Eigen::VectorXd hi, std::vector<std::size_t> counts);

  int dim() const { return static_cast<int>(counts.size()); }
  std::size_t size() const;
  double spacing(int axis) const;
  double max_spacing() const;
  /// Half the diagonal of one grid cell: every box point lies this close to a node.
  double half_diagonal() const;

  std::vector<std::size_t> unflatten(std::size_t flat) const;
  std::size_t flatten(const std::vector<std::size_t>& index) const;
  Eigen::VectorXd point(std::size_t flat) const;
  bool on_box_face(std::size_t flat) const;
};

/// Splits [0, n) into contiguous chunks and runs body(begin, end, chunk) on up to
/// `threads` workers. Chunk boundaries depend only on n and chunk_count, so
/// per-chunk results merged in chunk order are thread-count independent.
void parallel_for_chunks(std::size_t n, std::size_t chunk_count, unsigned threads,
                         const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

}  // namespace mrf
