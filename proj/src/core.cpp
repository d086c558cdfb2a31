#include "gsocc/core.hpp"

#include <algorithm>
#include <cmath>

namespace gsocc {
namespace {

constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "empty", "ceiling", "floor", "wall",      "window",   "chair",
    "bed",   "sofa",    "table", "tvs",       "furniture", "objects",
};

[[noreturn]] void config_error(const std::string& msg) {
  throw Error(ErrorKind::Config, "invalid refinement config: " + msg);
}

}  // namespace

std::string_view class_name(int label) {
  if (label < 0 || label >= kNumClasses) return "unknown";
  return kClassNames[static_cast<std::size_t>(label)];
}

int class_from_name(std::string_view name) {
  for (int i = 0; i < kNumClasses; ++i) {
    if (kClassNames[static_cast<std::size_t>(i)] == name) return i;
  }
  throw Error(ErrorKind::Input, "unknown class '" + std::string(name) + "'");
}

bool SemanticGaussian::operator==(const SemanticGaussian& o) const {
  return id == o.id && mean == o.mean && scale == o.scale &&
         rotation.coeffs() == o.rotation.coeffs() && opacity == o.opacity &&
         logits == o.logits && fixed_weight == o.fixed_weight;
}

bool GaussianDelta::operator==(const GaussianDelta& o) const {
  return d_mean == o.d_mean && d_scale == o.d_scale &&
         d_rotation.coeffs() == o.d_rotation.coeffs() &&
         d_opacity == o.d_opacity && d_logits == o.d_logits;
}

std::string_view to_string(FusionStrategy s) {
  switch (s) {
    case FusionStrategy::Product: return "product";
    case FusionStrategy::WeightedSum: return "weighted_sum";
    case FusionStrategy::Max: return "max";
    case FusionStrategy::Min: return "min";
    case FusionStrategy::Adaptive: return "adaptive";
    case FusionStrategy::ConfidenceBased: return "confidence_based";
    case FusionStrategy::RegionAdaptive: return "region_adaptive";
    case FusionStrategy::KappaOnly: return "kappa_only";
    case FusionStrategy::DepthOnly: return "depth_only";
  }
  return "?";
}

std::string_view to_string(CurvatureOrientation o) {
  return o == CurvatureOrientation::Inverted ? "inverted" : "as_written";
}

std::string_view to_string(KnnAggregate a) {
  return a == KnnAggregate::Min ? "min" : "mean";
}

FusionStrategy parse_fusion(std::string_view s) {
  for (auto f : kAllFusionStrategies) {
    if (to_string(f) == s) return f;
  }
  throw Error(ErrorKind::Config, "unknown fusion strategy '" + std::string(s) + "'");
}

CurvatureOrientation parse_orientation(std::string_view s) {
  if (s == "inverted") return CurvatureOrientation::Inverted;
  if (s == "as_written") return CurvatureOrientation::AsWritten;
  throw Error(ErrorKind::Config,
              "unknown curvature orientation '" + std::string(s) + "'");
}

KnnAggregate parse_knn_aggregate(std::string_view s) {
  if (s == "min") return KnnAggregate::Min;
  if (s == "mean") return KnnAggregate::Mean;
  throw Error(ErrorKind::Config, "unknown knn aggregate '" + std::string(s) + "'");
}

void RefinementConfig::validate() const {
  if (!(kappa_low < kappa_high)) config_error("kappa_low must be < kappa_high");
  if (!(d_near < d_far)) config_error("d_near must be < d_far");
  if (!(0.0 <= w_min && w_min <= w_max && w_max <= 1.0))
    config_error("need 0 <= w_min <= w_max <= 1");
  if (mc_samples < 1) config_error("mc_samples must be >= 1");
  if (!(0.0 <= tau_unc && tau_unc <= 1.0)) config_error("tau_unc must be in [0,1]");
  // Logit vectors have a fixed width; other class counts cannot be stored.
  if (num_classes != kNumClasses)
    config_error("num_classes must be " + std::to_string(kNumClasses));
  if (knn_k < 1) config_error("knn_k must be >= 1");
  if (!(init_interval > 0.0)) config_error("init_interval must be > 0");
  if (!(voxel_size > 0.0)) config_error("voxel_size must be > 0");
}

Quat canonical(const Quat& q) {
  Quat n = q.normalized();
  if (n.w() < 0.0) n.coeffs() = -n.coeffs();
  return n;
}

SemanticGaussian compose_refined(const SemanticGaussian& g,
                                 const GaussianDelta& d) {
  SemanticGaussian out = g;
  out.mean = g.mean + d.d_mean;
  out.scale = (g.scale + d.d_scale).cwiseMax(kScaleFloor);
  out.rotation = canonical(d.d_rotation * g.rotation);
  out.opacity = std::clamp(g.opacity + d.d_opacity, 0.0, 1.0);
  out.logits = g.logits + d.d_logits;
  return out;
}

Mat3 covariance(const SemanticGaussian& g) {
  const Mat3 r = g.rotation.normalized().toRotationMatrix();
  const Vec3 s2 = g.scale.cwiseProduct(g.scale);
  Mat3 sigma = r * s2.asDiagonal() * r.transpose();
  // Symmetrize to remove round-off asymmetry.
  return 0.5 * (sigma + sigma.transpose());
}

void check_invariants(const SemanticGaussian& g) {
  auto fail = [&](const char* what) {
    throw Error(ErrorKind::Domain, "gaussian " + std::to_string(g.id) + ": " + what);
  };
  if (std::abs(g.rotation.norm() - 1.0) > 1e-9) fail("rotation not unit");
  if ((g.scale.array() <= 0.0).any()) fail("non-positive scale");
  if (!(g.opacity >= 0.0 && g.opacity <= 1.0)) fail("opacity outside [0,1]");
  if (!(g.fixed_weight >= 0.0 && g.fixed_weight <= 1.0))
    fail("fixed_weight outside [0,1]");
  if (!g.mean.allFinite() || !g.logits.allFinite()) fail("non-finite field");
}

}  // namespace gsocc
