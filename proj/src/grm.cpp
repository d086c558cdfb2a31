#include "gsocc/grm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gsocc {

namespace {

// Nudges one component by a few ulps until parallel + perp == d.
bool split_exact(double d, double& parallel, double& perp) {
  perp = d - parallel;
  if (parallel + perp == d) return true;
  for (int pass = 0; pass < 2; ++pass) {
    double up = perp, down = perp;
    for (int k = 0; k < 4; ++k) {
      up = std::nextafter(up, std::numeric_limits<double>::infinity());
      down = std::nextafter(down, -std::numeric_limits<double>::infinity());
      if (parallel + up == d) {
        perp = up;
        return true;
      }
      if (parallel + down == d) {
        perp = down;
        return true;
      }
    }
    parallel = d - perp;
    perp = d - parallel;
    if (parallel + perp == d) return true;
  }
  return false;
}

}  // namespace

DeltaParts decompose_delta(const Vec3& d_m, const Vec3& n) {
  if (std::abs(n.norm() - 1.0) > 1e-6)
    throw Error(ErrorKind::Domain, "normal is not unit length");
  if (!d_m.allFinite()) throw Error(ErrorKind::Domain, "delta is not finite");
  Vec3 parallel = d_m.dot(n) * n;
  Vec3 perp;
  for (int i = 0; i < 3; ++i) {
    if (!split_exact(d_m[i], parallel[i], perp[i]))
      throw Error(ErrorKind::Invariant, "delta decomposition does not recompose");
  }
  return {parallel, perp};
}

Vec3 constrain_delta(const Vec3& d_m, const Vec3& n, double w) {
  const auto parts = decompose_delta(d_m, n);
  return w * parts.perp + (1.0 - w) * d_m;
}

double curvature_weight(double kappa, const RefinementConfig& cfg) {
  if (!(kappa >= 0.0)) throw Error(ErrorKind::Domain, "curvature must be non-negative");
  double w;
  if (kappa <= cfg.kappa_low) {
    w = cfg.w_min;
  } else if (kappa >= cfg.kappa_high) {
    w = cfg.w_max;
  } else {
    w = cfg.w_min + (kappa - cfg.kappa_low) / (cfg.kappa_high - cfg.kappa_low) *
                        (cfg.w_max - cfg.w_min);
  }
  if (cfg.orientation == CurvatureOrientation::Inverted) return cfg.w_min + cfg.w_max - w;
  return w;
}

double depth_weight(double d_min, const RefinementConfig& cfg) {
  return std::clamp((cfg.d_far - d_min) / (cfg.d_far - cfg.d_near), 0.0, 1.0);
}

double fuse_weights(const FusionInputs& in, FusionStrategy strategy, const RefinementConfig& cfg) {
  double w = 0.0;
  switch (strategy) {
    case FusionStrategy::Product: w = in.w_depth * in.w_kappa; break;
    case FusionStrategy::WeightedSum: w = 0.5 * in.w_depth + 0.5 * in.w_kappa; break;
    case FusionStrategy::Max: w = std::max(in.w_depth, in.w_kappa); break;
    case FusionStrategy::Min: w = std::min(in.w_depth, in.w_kappa); break;
    case FusionStrategy::KappaOnly: w = in.w_kappa; break;
    case FusionStrategy::DepthOnly: w = in.w_depth; break;
    case FusionStrategy::Adaptive:
      w = in.d_min <= cfg.d_far ? in.w_depth : in.w_kappa;
      break;
    case FusionStrategy::ConfidenceBased:
      // Depth acts as its own confidence, so its influence decays quadratically.
      w = in.w_kappa * in.w_depth * in.w_depth;
      break;
    case FusionStrategy::RegionAdaptive:
      w = in.kappa >= cfg.kappa_high ? std::max(in.w_depth, in.w_kappa)
                                     : in.w_depth * in.w_kappa;
      break;
  }
  return std::clamp(w, 0.0, 1.0);
}

RefineResult refine_position(const SemanticGaussian& g, const GaussianDelta& d,
                             const CameraFrame& frame, const GeometricCues& cues,
                             const UniformGridIndex& cloud, const RefinementConfig& cfg) {
  RefineResult out;
  out.delta = d;
  out.cue = sample_cues(frame, cues, g);
  if (!out.cue.valid || cloud.empty()) return out;

  // Beyond d_far the depth weight is zero, so a bounded search suffices for
  // the min reduction; the mean needs all k neighbours.
  const double radius = cfg.knn_aggregate == KnnAggregate::Min
                            ? cfg.d_far
                            : std::numeric_limits<double>::infinity();
  out.d_min = nearest_depth_distance(g.mean, cloud, cfg.knn_k, cfg.knn_aggregate, radius);

  out.weights.w_kappa = curvature_weight(out.cue.kappa, cfg);
  out.weights.w_depth = depth_weight(out.d_min, cfg);
  out.weights.w_fused = fuse_weights(
      {out.weights.w_depth, out.weights.w_kappa, out.d_min, out.cue.kappa}, cfg.fusion, cfg);
  out.delta.d_mean = constrain_delta(d.d_mean, out.cue.normal_world, out.weights.w_fused);
  out.constrained = true;
  return out;
}

}  // namespace gsocc
