#pragma once

#include "gsocc/core.hpp"
#include "gsocc/grid.hpp"
#include "gsocc/synthscene.hpp"

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace gsocc {

inline constexpr int kSemanticClasses = kNumClasses - 1;

/// Binary occupancy IoU (label != 0). 1.0 when both grids are empty.
/// Throws Error(Domain) on mismatched grid specs.
double scene_iou(const VoxelGrid& pred, const VoxelGrid& gt);

struct ClassIou {
  // Index c holds class c + 1; nullopt when absent from both grids.
  std::array<std::optional<double>, kSemanticClasses> per_class{};
  double mean = 0.0;  // over defined classes; 0 when none is defined
};

ClassIou miou(const VoxelGrid& pred, const VoxelGrid& gt);

/// RMS signed distance of near-surface Gaussians to their nearest face plane.
/// Gaussians farther than voxel_size from every face, or within
/// 2 * voxel_size of two faces, are not counted. Returns 0 for an empty set.
double out_of_plane_drift(std::span<const SemanticGaussian> gaussians,
                          const SyntheticScene& scene, double voxel_size);

struct EvalReport {
  double iou = 0.0;
  std::array<std::optional<double>, kSemanticClasses> per_class_iou{};
  double miou = 0.0;
  double oop_drift_rms = 0.0;
  std::vector<int> updates_per_frame;
  long long total_visible = 0;
  long long total_updated = 0;
  long long total_skipped = 0;
};

}  // namespace gsocc
