#pragma once

#include "gsocc/core.hpp"
#include "gsocc/grid.hpp"

#include <limits>
#include <span>
#include <vector>

namespace gsocc {

struct SplatParams {
  double occ_threshold = 0.1;
  // Mahalanobis radius beyond which a Gaussian's contribution is dropped.
  // Infinity disables truncation.
  double cutoff_sigma = 4.0;
  // Recompute voxels whose occupancy or class margin is within the
  // truncation error, so labels match brute_force_splat exactly.
  bool certify = true;
};

inline constexpr double kNoCutoff = std::numeric_limits<double>::infinity();

/// Gaussian-to-voxel splatting. Each voxel accumulates
/// a = o * exp(-0.5 * d^T Sigma^-1 d) into its density and a * logits into a
/// semantic score; occupied voxels take the argmax of channels 1..11.
/// Accumulation runs in ascending id order regardless of input order or
/// thread count, so results are bit-stable. With `certify`, voxels whose
/// occupancy or class margin is within the truncation error are recomputed
/// without the cutoff, so labels always match the untruncated reference.
VoxelGrid splat(std::span<const SemanticGaussian> gaussians, const GridSpec& spec,
                const SplatParams& params = {}, int threads = 1);

/// O(N * V) reference: every Gaussian contributes to every voxel.
VoxelGrid brute_force_splat(std::span<const SemanticGaussian> gaussians,
                            const GridSpec& spec, double occ_threshold);

/// Upper bound on |density(splat) - density(brute_force)| per voxel.
double truncation_bound(std::span<const SemanticGaussian> gaussians,
                        double cutoff_sigma);

/// Re-expresses Gaussians in another frame: mean' = T * mean and the
/// rotation is pre-multiplied by T's rotation.
std::vector<SemanticGaussian> transform_gaussians(std::span<const SemanticGaussian> gaussians,
                                                  const Eigen::Isometry3d& transform);

}  // namespace gsocc
