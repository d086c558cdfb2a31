#pragma once

#include "gsocc/camera.hpp"
#include "gsocc/config.hpp"
#include "gsocc/core.hpp"
#include "gsocc/grid.hpp"
#include "gsocc/metrics.hpp"
#include "gsocc/spatial_index.hpp"
#include "gsocc/synthscene.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gsocc {

struct FrameStats {
  int frame = 0;
  int visible = 0;
  int updated = 0;
  int skipped = 0;
  int fallback = 0;  // visible Gaussians updated without a usable cue
  double mean_entropy = 0.0;

  bool operator==(const FrameStats&) const = default;
};

/// World-frame Gaussian memory. Gaussian i has id i. `observations[i]`
/// counts how often Gaussian i has been visible; together with the run
/// seed it keys that Gaussian's random stream, so results do not depend on
/// thread scheduling or on the order of frames with disjoint views.
struct GaussianMemory {
  Box bounds;
  std::vector<SemanticGaussian> gaussians;
  std::vector<std::uint32_t> observations;
  std::vector<FrameStats> log;

  std::size_t size() const { return gaussians.size(); }
};

/// Regular lattice with spacing `interval` centered in `bounds`;
/// floor(extent / interval) points per axis (at least one).
/// Throws Error(Domain) on degenerate bounds or interval.
GaussianMemory init_memory(const Box& bounds, double interval, double fixed_weight = 0.5,
                           double init_opacity = 0.1);

/// Room box padded by interval / 2.
Box memory_bounds_for(const Box& room, double interval);

/// Seed of the random stream for one proposal sample.
std::uint64_t substream_seed(std::uint64_t root, std::uint64_t gaussian_id,
                             std::uint64_t observation, std::uint64_t sample);

/// M noisy residuals standing in for stochastic network passes. Gaussians
/// within capture_radius of a scene face are drawn toward the nearest face
/// point, its class and the target opacity; farther ones are drawn toward
/// the empty class and zero opacity with position noise only.
std::vector<GaussianDelta> synthetic_proposals(const SemanticGaussian& g,
                                               const std::vector<Surface>& faces,
                                               const PipelineConfig& cfg,
                                               std::uint32_t observation);

/// Refines every Gaussian visible in `frame` and commits the results in id
/// order. With `ungated` every visible Gaussian is replaced by its refined
/// state (ratio 1). Invisible Gaussians are not touched.
FrameStats update_frame(GaussianMemory& mem, const CameraFrame& frame,
                        const RenderedFrame& rendered, const std::vector<Surface>& faces,
                        const PipelineConfig& cfg, int frame_index, bool ungated = false);

FrameStats update_frame(GaussianMemory& mem, const CameraFrame& frame,
                        const SyntheticScene& scene, const PipelineConfig& cfg,
                        int frame_index, bool ungated = false);

/// Renders cues and applies update_frame for each frame in order.
std::vector<FrameStats> run_sequence(GaussianMemory& mem, const SyntheticScene& scene,
                                     std::span<const CameraFrame> frames,
                                     const PipelineConfig& cfg, bool first_ungated = false);

struct RunReport {
  std::string kind;  // "embodied" or "local"
  UpdateMode mode = UpdateMode::Sus;
  FusionStrategy fusion = FusionStrategy::Product;
  CurvatureOrientation orientation = CurvatureOrientation::Inverted;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::size_t gaussian_count = 0;
  std::array<int, 3> grid_dims = {0, 0, 0};
  std::vector<FrameStats> frames;
  EvalReport eval;
  double wall_seconds = 0.0;  // not part of the serialized report
};

struct RunResult {
  GaussianMemory memory;
  VoxelGrid prediction;
  VoxelGrid ground_truth;
  RunReport report;
};

/// Whole-scene pipeline: lattice over the padded room, sequential frame
/// updates, splatting over the room grid, evaluation. A non-null `initial`
/// memory (e.g. a loaded checkpoint) replaces the fresh lattice.
RunResult run_embodied(const SyntheticScene& scene, std::span<const CameraFrame> trajectory,
                       const PipelineConfig& cfg, const GaussianMemory* initial = nullptr);

/// Camera-local grid: x right, y forward, z up, spanning the frustum box.
GridSpec local_grid_spec(const CameraFrame& frame, double voxel_size);
Eigen::Isometry3d local_grid_to_world(const CameraFrame& frame);

/// Fresh lattice over the frustum box, expressed in world coordinates.
GaussianMemory init_frustum_memory(const CameraFrame& frame, const PipelineConfig& cfg);

/// Single-view prediction: K refinement rounds on one frame (the first
/// round ungated), splatted into the frustum grid. Throws Error(Domain)
/// when K < 1.
RunResult run_local(const SyntheticScene& scene, const CameraFrame& frame,
                    const PipelineConfig& cfg, int rounds);

/// Fills the eval part of a report from the final memory and grids.
EvalReport evaluate(const GaussianMemory& mem, const VoxelGrid& pred, const VoxelGrid& gt,
                    const SyntheticScene& scene, double voxel_size);

}  // namespace gsocc
