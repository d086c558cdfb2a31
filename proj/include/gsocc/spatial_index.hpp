#pragma once

#include "gsocc/core.hpp"

#include <array>
#include <cstddef>
#include <limits>
#include <vector>

namespace gsocc {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
};

/// Uniform-grid point index with expanding-ring k-nearest-neighbour search.
///
/// Points are bucketed into cubic cells over their bounding box (CSR layout).
/// A query visits rings of cells at increasing Chebyshev distance from the
/// query cell and stops once the k-th best distance is no larger than the
/// distance to the next unvisited ring, so results match an exhaustive scan.
class UniformGridIndex {
 public:
  UniformGridIndex() = default;
  UniformGridIndex(std::vector<Vec3> points, double cell_size);

  bool empty() const { return points_.empty(); }
  std::size_t size() const { return points_.size(); }
  const std::vector<Vec3>& points() const { return points_; }
  double cell_size() const { return cell_size_; }

  /// Up to k neighbours within max_radius, nearest first (ties by index).
  std::vector<Neighbor> knn(const Vec3& q, int k,
                            double max_radius = std::numeric_limits<double>::infinity()) const;

 private:
  std::array<long long, 3> cell_of(const Vec3& p) const;

  std::vector<Vec3> points_;
  double cell_size_ = 1.0;
  Vec3 origin_ = Vec3::Zero();
  std::array<long long, 3> dims_ = {0, 0, 0};
  std::vector<std::size_t> cell_start_;  // size = cells + 1
  std::vector<std::size_t> order_;       // point ids grouped by cell
};

/// Distance from p to the depth cloud: the minimum (or mean) over the k
/// nearest points. Returns +inf when nothing lies within max_radius.
/// Throws Error(Domain) on an empty cloud or k < 1.
double nearest_depth_distance(const Vec3& p, const UniformGridIndex& cloud, int k,
                              KnnAggregate aggregate = KnnAggregate::Min,
                              double max_radius = std::numeric_limits<double>::infinity());

}  // namespace gsocc
