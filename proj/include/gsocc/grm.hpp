#pragma once

#include "gsocc/camera.hpp"
#include "gsocc/core.hpp"
#include "gsocc/spatial_index.hpp"

namespace gsocc {

// Geometry-guided refinement: position residuals are pulled toward the
// local tangent plane with a weight fused from curvature and depth cues.

struct DeltaParts {
  Vec3 parallel;  // along the normal
  Vec3 perp;      // in the tangent plane
};

/// Splits d_m into its normal and tangential components.
/// Throws Error(Domain) when |n| differs from 1 by more than 1e-6.
DeltaParts decompose_delta(const Vec3& d_m, const Vec3& n);

/// w * perp + (1 - w) * d_m.
Vec3 constrain_delta(const Vec3& d_m, const Vec3& n, double w);

/// Piecewise-linear ramp between kappa_low and kappa_high. AsWritten maps
/// low curvature to w_min; Inverted mirrors the ramp so flat regions get w_max.
double curvature_weight(double kappa, const RefinementConfig& cfg);

/// clamp((d_far - d_min) / (d_far - d_near), 0, 1).
double depth_weight(double d_min, const RefinementConfig& cfg);

struct FusionInputs {
  double w_depth = 0.0;
  double w_kappa = 0.0;
  double d_min = 0.0;  // used by Adaptive
  double kappa = 0.0;  // used by RegionAdaptive
};

double fuse_weights(const FusionInputs& in, FusionStrategy strategy, const RefinementConfig& cfg);

struct ConstraintWeights {
  double w_kappa = 0.0;
  double w_depth = 0.0;
  double w_fused = 0.0;
};

struct RefineResult {
  GaussianDelta delta;
  // False when the cue sample was invalid or the cloud empty; the delta is
  // then returned unchanged.
  bool constrained = false;
  ConstraintWeights weights;
  double d_min = 0.0;
  CueSample cue;
};

/// Replaces d.d_mean by its constrained version for a visible Gaussian.
/// Other delta components pass through untouched.
RefineResult refine_position(const SemanticGaussian& g, const GaussianDelta& d,
                             const CameraFrame& frame, const GeometricCues& cues,
                             const UniformGridIndex& cloud, const RefinementConfig& cfg);

}  // namespace gsocc
