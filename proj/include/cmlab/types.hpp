#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include <Eigen/Dense>

namespace cmlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
// Point sets are stored one point per row so each point is contiguous.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// An n x d point set together with the seed that produced it.
struct SampleBatch {
  RowMatrix points;
  std::uint64_t seed = 0;
  /// Diffusion time at which the points are distributed, when known.
  std::optional<double> time_tag;

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points.cols()); }

  Vec point(std::size_t i) const { return points.row(static_cast<Eigen::Index>(i)).transpose(); }

  std::span<const double> flat() const { return {points.data(), static_cast<std::size_t>(points.size())}; }
  std::span<double> flat() { return {points.data(), static_cast<std::size_t>(points.size())}; }
};

/// Throws std::invalid_argument when the batch is empty or holds NaN/Inf.
void check_batch(const SampleBatch& batch);

}  // namespace cmlab
