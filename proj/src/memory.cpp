#include "gsocc/memory.hpp"

#include "gsocc/grm.hpp"
#include "gsocc/parallel.hpp"
#include "gsocc/splat.hpp"
#include "gsocc/sus.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <random>

namespace gsocc {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

int lattice_count(double extent, double interval) {
  return std::max(1, static_cast<int>(std::floor(extent / interval + 1e-9)));
}

struct GaussianOutcome {
  SemanticGaussian state;
  bool updated = false;
  bool skipped = false;
  bool fallback = false;
  double entropy = 0.0;
};

GaussianOutcome refine_one(const SemanticGaussian& g, std::uint32_t observation,
                           const CameraFrame& frame, const GeometricCues& cues,
                           const UniformGridIndex& cloud, const std::vector<Surface>& faces,
                           const Box& bounds, const PipelineConfig& cfg, bool ungated) {
  GaussianOutcome out;
  out.state = g;
  const auto proposals = synthetic_proposals(g, faces, cfg, observation);
  const auto sampled = sample_and_decide(g, proposals, cfg.refinement);
  out.entropy = sampled.decision.entropy;

  double ratio = 1.0;
  if (!ungated) {
    if (cfg.mode == UpdateMode::FixedWeight) {
      ratio = 1.0 - g.fixed_weight;
    } else if (sampled.decision.skipped) {
      out.skipped = true;
      return out;
    } else {
      ratio = sampled.decision.ratio;
    }
  }

  GaussianDelta delta = sampled.applied;
  if (cfg.mode == UpdateMode::Sus) {
    const auto refined = refine_position(g, delta, frame, cues, cloud, cfg.refinement);
    delta = refined.delta;
    out.fallback = !refined.constrained;
  }

  if (cfg.blend == BlendReading::State) {
    out.state = blended_update(g, compose_refined(g, delta), ratio);
  } else {
    out.state = compose_refined(g, scale_delta(delta, ratio));
  }
  out.state.mean = bounds.clamp(out.state.mean);
  out.updated = true;
  return out;
}

}  // namespace

GaussianMemory init_memory(const Box& bounds, double interval, double fixed_weight,
                           double init_opacity) {
  if (!(interval > 0.0)) throw Error(ErrorKind::Domain, "lattice interval must be positive");
  if ((bounds.extent().array() <= 0.0).any() || !bounds.extent().allFinite())
    throw Error(ErrorKind::Domain, "memory bounds are degenerate");
  const Vec3 ext = bounds.extent();
  std::array<int, 3> n{};
  Vec3 start;
  for (int a = 0; a < 3; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    n[ua] = lattice_count(ext[a], interval);
    start[a] = bounds.min[a] + 0.5 * (ext[a] - (n[ua] - 1) * interval);
  }
  GaussianMemory mem;
  mem.bounds = bounds;
  mem.gaussians.reserve(static_cast<std::size_t>(n[0]) * n[1] * n[2]);
  std::int64_t id = 0;
  for (int k = 0; k < n[2]; ++k) {
    for (int j = 0; j < n[1]; ++j) {
      for (int i = 0; i < n[0]; ++i) {
        SemanticGaussian g;
        g.id = id++;
        g.mean = start + Vec3(i, j, k) * interval;
        g.scale = Vec3::Constant(0.5 * interval);
        g.rotation = Quat::Identity();
        g.opacity = init_opacity;
        g.logits.setZero();
        g.fixed_weight = fixed_weight;
        mem.gaussians.push_back(g);
      }
    }
  }
  mem.observations.assign(mem.gaussians.size(), 0);
  return mem;
}

Box memory_bounds_for(const Box& room, double interval) {
  const Vec3 pad = Vec3::Constant(0.5 * interval);
  return Box{room.min - pad, room.max + pad};
}

std::uint64_t substream_seed(std::uint64_t root, std::uint64_t gaussian_id,
                             std::uint64_t observation, std::uint64_t sample) {
  std::uint64_t h = splitmix64(root);
  h = splitmix64(h ^ gaussian_id);
  h = splitmix64(h ^ observation);
  return splitmix64(h ^ sample);
}

std::vector<GaussianDelta> synthetic_proposals(const SemanticGaussian& g,
                                               const std::vector<Surface>& faces,
                                               const PipelineConfig& cfg,
                                               std::uint32_t observation) {
  const auto& pc = cfg.proposal;
  const auto nearest = nearest_surface(faces, g.mean);
  const bool captured = nearest.distance <= pc.capture_radius;

  const Vec3 target_pos = captured ? nearest.point : g.mean;
  const int target_class = captured ? faces[nearest.index].label : 0;
  const double target_opacity = captured ? pc.target_opacity : 0.0;
  Logits target_logits = Logits::Zero();
  target_logits[target_class] = pc.sem_target;

  const Vec3 pull_m = pc.step * (target_pos - g.mean);
  const Logits pull_c = pc.sem_step * (target_logits - g.logits);
  const Vec3 pull_s = pc.scale_step * (Vec3::Constant(cfg.refinement.voxel_size) - g.scale);
  const double pull_o = pc.opacity_step * (target_opacity - g.opacity);

  std::vector<GaussianDelta> out(static_cast<std::size_t>(cfg.refinement.mc_samples));
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::mt19937_64 eng(substream_seed(cfg.seed, static_cast<std::uint64_t>(g.id), observation, i));
    std::normal_distribution<double> normal(0.0, 1.0);
    auto noise3 = [&](double sigma) {
      Vec3 v;
      for (int a = 0; a < 3; ++a) v[a] = sigma * normal(eng);
      return v;
    };
    auto& d = out[i];
    d.d_mean = pull_m + noise3(pc.sigma_pos);
    d.d_logits = pull_c;
    for (int c = 0; c < kNumClasses; ++c) d.d_logits[c] += pc.sigma_sem * normal(eng);
    d.d_scale = pull_s + noise3(pc.sigma_scale);
    d.d_opacity = pull_o + pc.sigma_opacity * normal(eng);
    const Vec3 omega = noise3(pc.sigma_rot);
    const double angle = omega.norm();
    d.d_rotation = angle > 0.0 ? canonical(Quat(Eigen::AngleAxisd(angle, omega / angle)))
                               : Quat::Identity();
  }
  return out;
}

FrameStats update_frame(GaussianMemory& mem, const CameraFrame& frame,
                        const RenderedFrame& rendered, const std::vector<Surface>& faces,
                        const PipelineConfig& cfg, int frame_index, bool ungated) {
  FrameStats stats;
  stats.frame = frame_index;

  std::vector<std::size_t> visible;
  for (std::size_t i = 0; i < mem.gaussians.size(); ++i) {
    if (is_visible(frame, mem.gaussians[i])) visible.push_back(i);
  }
  stats.visible = static_cast<int>(visible.size());
  if (visible.empty()) return stats;

  const UniformGridIndex cloud(rendered.cloud, cfg.refinement.d_far);
  std::vector<GaussianOutcome> outcomes(visible.size());
  parallel_for(visible.size(), cfg.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) {
      const auto i = visible[v];
      outcomes[v] = refine_one(mem.gaussians[i], mem.observations[i], frame, rendered.cues,
                               cloud, faces, mem.bounds, cfg, ungated);
    }
  });

  double entropy_sum = 0.0;
  for (std::size_t v = 0; v < visible.size(); ++v) {
    const auto i = visible[v];
    const auto& o = outcomes[v];
    ++mem.observations[i];
    entropy_sum += o.entropy;
    if (o.skipped) ++stats.skipped;
    if (o.fallback) ++stats.fallback;
    if (o.updated) {
      ++stats.updated;
      mem.gaussians[i] = o.state;
    }
  }
  stats.mean_entropy = entropy_sum / static_cast<double>(visible.size());
  return stats;
}

FrameStats update_frame(GaussianMemory& mem, const CameraFrame& frame,
                        const SyntheticScene& scene, const PipelineConfig& cfg,
                        int frame_index, bool ungated) {
  return update_frame(mem, frame, render_cues(scene, frame), surfaces(scene), cfg, frame_index,
                      ungated);
}

std::vector<FrameStats> run_sequence(GaussianMemory& mem, const SyntheticScene& scene,
                                     std::span<const CameraFrame> frames,
                                     const PipelineConfig& cfg, bool first_ungated) {
  const auto faces = surfaces(scene);
  std::vector<FrameStats> stats;
  stats.reserve(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto rendered = render_cues(scene, frames[f]);
    stats.push_back(update_frame(mem, frames[f], rendered, faces, cfg,
                                 static_cast<int>(mem.log.size()), first_ungated && f == 0));
    mem.log.push_back(stats.back());
  }
  return stats;
}

EvalReport evaluate(const GaussianMemory& mem, const VoxelGrid& pred, const VoxelGrid& gt,
                    const SyntheticScene& scene, double voxel_size) {
  EvalReport e;
  e.iou = scene_iou(pred, gt);
  const auto m = miou(pred, gt);
  e.per_class_iou = m.per_class;
  e.miou = m.mean;
  e.oop_drift_rms = out_of_plane_drift(mem.gaussians, scene, voxel_size);
  for (const auto& f : mem.log) {
    e.updates_per_frame.push_back(f.updated);
    e.total_visible += f.visible;
    e.total_updated += f.updated;
    e.total_skipped += f.skipped;
  }
  return e;
}

namespace {

RunReport make_report(const char* kind, const PipelineConfig& cfg, const GaussianMemory& mem,
                      const GridSpec& spec) {
  RunReport r;
  r.kind = kind;
  r.mode = cfg.mode;
  r.fusion = cfg.refinement.fusion;
  r.orientation = cfg.refinement.orientation;
  r.seed = cfg.seed;
  r.config_hash = config_hash(cfg);
  r.gaussian_count = mem.size();
  r.grid_dims = spec.dims;
  r.frames = mem.log;
  return r;
}

}  // namespace

RunResult run_embodied(const SyntheticScene& scene, std::span<const CameraFrame> trajectory,
                       const PipelineConfig& cfg, const GaussianMemory* initial) {
  cfg.validate();
  scene.validate();
  if (trajectory.empty()) throw Error(ErrorKind::Domain, "trajectory is empty");
  const auto t0 = std::chrono::steady_clock::now();

  const double interval = cfg.refinement.init_interval;
  RunResult res;
  if (initial) {
    res.memory = *initial;
    if (res.memory.observations.size() != res.memory.gaussians.size())
      throw Error(ErrorKind::Input, "checkpoint observation count does not match its Gaussians");
  } else {
    res.memory = init_memory(memory_bounds_for(scene.room, interval), interval,
                             cfg.fixed_weight, cfg.init_opacity);
  }
  run_sequence(res.memory, scene, trajectory, cfg);

  const auto spec = GridSpec::covering(scene.room, cfg.refinement.voxel_size);
  res.prediction = splat(res.memory.gaussians, spec, cfg.splat, cfg.threads);
  res.ground_truth = voxelize_gt(scene, spec);
  res.report = make_report("embodied", cfg, res.memory, spec);
  res.report.eval = evaluate(res.memory, res.prediction, res.ground_truth, scene,
                             cfg.refinement.voxel_size);
  res.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

GridSpec local_grid_spec(const CameraFrame& frame, double voxel_size) {
  GridSpec spec;
  spec.voxel_size = voxel_size;
  spec.origin = Vec3(-0.5 * frame.frustum_xy, 0.0, -0.5 * frame.frustum_z_extent);
  const Vec3 extent(frame.frustum_xy, frame.frustum_depth, frame.frustum_z_extent);
  for (int a = 0; a < 3; ++a) {
    spec.dims[static_cast<std::size_t>(a)] =
        std::max(1, static_cast<int>(std::lround(extent[a] / voxel_size)));
  }
  return spec;
}

Eigen::Isometry3d local_grid_to_world(const CameraFrame& frame) {
  // Grid axes in camera coordinates: x -> x, y (forward) -> z, z (up) -> -y.
  Eigen::Isometry3d grid_to_cam = Eigen::Isometry3d::Identity();
  grid_to_cam.linear() << 1, 0, 0,
                          0, 0, -1,
                          0, 1, 0;
  return frame.camera_to_world() * grid_to_cam;
}

GaussianMemory init_frustum_memory(const CameraFrame& frame, const PipelineConfig& cfg) {
  const auto spec = local_grid_spec(frame, cfg.refinement.voxel_size);
  const Box local{spec.origin, spec.origin + spec.extent()};
  auto mem = init_memory(local, cfg.refinement.init_interval, cfg.fixed_weight, cfg.init_opacity);
  const auto to_world = local_grid_to_world(frame);
  Box world{Vec3::Constant(std::numeric_limits<double>::infinity()),
            Vec3::Constant(-std::numeric_limits<double>::infinity())};
  for (int c = 0; c < 8; ++c) {
    const Vec3 corner((c & 1) ? local.max.x() : local.min.x(), (c & 2) ? local.max.y() : local.min.y(),
                      (c & 4) ? local.max.z() : local.min.z());
    const Vec3 w = to_world * corner;
    world.min = world.min.cwiseMin(w);
    world.max = world.max.cwiseMax(w);
  }
  for (auto& g : mem.gaussians) g.mean = to_world * g.mean;
  mem.bounds = world;
  return mem;
}

RunResult run_local(const SyntheticScene& scene, const CameraFrame& frame,
                    const PipelineConfig& cfg, int rounds) {
  if (rounds < 1) throw Error(ErrorKind::Domain, "local refinement needs at least one round");
  cfg.validate();
  scene.validate();
  frame.validate();
  const auto t0 = std::chrono::steady_clock::now();

  RunResult res;
  res.memory = init_frustum_memory(frame, cfg);
  const std::vector<CameraFrame> frames(static_cast<std::size_t>(rounds), frame);
  run_sequence(res.memory, scene, frames, cfg, /*first_ungated=*/true);

  const auto spec = local_grid_spec(frame, cfg.refinement.voxel_size);
  const auto grid_to_world = local_grid_to_world(frame);
  const auto local = transform_gaussians(res.memory.gaussians, grid_to_world.inverse());
  res.prediction = splat(local, spec, cfg.splat, cfg.threads);
  res.ground_truth = voxelize_gt(scene, spec, grid_to_world);
  res.report = make_report("local", cfg, res.memory, spec);
  res.report.eval = evaluate(res.memory, res.prediction, res.ground_truth, scene,
                             cfg.refinement.voxel_size);
  res.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace gsocc
