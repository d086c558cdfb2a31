#pragma once

#include "gsocc/core.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace gsocc {

/// Regular voxel lattice. Voxel (i, j, k) has its center at
/// origin + (i + 0.5, j + 0.5, k + 0.5) * voxel_size; storage is x-fastest.
struct GridSpec {
  Vec3 origin = Vec3::Zero();
  std::array<int, 3> dims = {0, 0, 0};
  double voxel_size = 0.08;

  std::size_t count() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
           static_cast<std::size_t>(dims[2]);
  }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * static_cast<std::size_t>(dims[1]) +
            static_cast<std::size_t>(j)) *
               static_cast<std::size_t>(dims[0]) +
           static_cast<std::size_t>(i);
  }
  Vec3 center(int i, int j, int k) const {
    return origin + Vec3(i + 0.5, j + 0.5, k + 0.5) * voxel_size;
  }
  Vec3 extent() const {
    return Vec3(dims[0], dims[1], dims[2]) * voxel_size;
  }
  void validate() const;
  bool operator==(const GridSpec& o) const {
    return origin == o.origin && dims == o.dims && voxel_size == o.voxel_size;
  }

  /// Smallest grid anchored at box.min that covers the box.
  static GridSpec covering(const Box& box, double voxel_size);
};

/// Labeled occupancy grid: 0 = empty, 1..11 = semantic class.
struct VoxelGrid {
  GridSpec spec;
  std::vector<std::uint8_t> labels;
  std::vector<double> density;  // empty when not tracked

  VoxelGrid() = default;
  explicit VoxelGrid(const GridSpec& s)
      : spec(s), labels(s.count(), 0), density(s.count(), 0.0) {}

  std::uint8_t label(int i, int j, int k) const { return labels[spec.index(i, j, k)]; }
  std::size_t occupied_count() const;
};

}  // namespace gsocc
