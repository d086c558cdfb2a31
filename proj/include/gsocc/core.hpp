#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gsocc {

inline constexpr int kNumClasses = 12;

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;
using Logits = Eigen::Matrix<double, kNumClasses, 1>;

/// Error categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  Config,     // bad configuration value or key
  Input,      // unreadable or malformed input file
  Domain,     // precondition violated by a caller-supplied value
  Invariant,  // internal consistency check failed
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Semantic channel layout. Index 0 is free space.
enum class SemanticClass : std::uint8_t {
  Empty = 0,
  Ceiling,
  Floor,
  Wall,
  Window,
  Chair,
  Bed,
  Sofa,
  Table,
  Tvs,
  Furniture,
  Objects,
};

std::string_view class_name(int label);
/// Returns -1 for an unknown name.
int class_from_name(std::string_view name);

/// Axis-aligned box, meters.
struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  Vec3 clamp(const Vec3& p) const { return p.cwiseMax(min).cwiseMin(max); }
  bool operator==(const Box& o) const { return min == o.min && max == o.max; }
};

/// One element of the scene memory.
struct SemanticGaussian {
  std::int64_t id = 0;
  Vec3 mean = Vec3::Zero();
  Vec3 scale = Vec3::Constant(0.08);
  Quat rotation = Quat::Identity();
  double opacity = 0.1;
  Logits logits = Logits::Zero();
  // Baseline retention weight used by the fixed-weight update mode.
  double fixed_weight = 0.5;

  bool operator==(const SemanticGaussian& o) const;
};

/// Proposed residual for one Gaussian.
struct GaussianDelta {
  Vec3 d_mean = Vec3::Zero();
  Vec3 d_scale = Vec3::Zero();
  Quat d_rotation = Quat::Identity();
  double d_opacity = 0.0;
  Logits d_logits = Logits::Zero();

  bool operator==(const GaussianDelta& o) const;
};

enum class FusionStrategy {
  Product,
  WeightedSum,
  Max,
  Min,
  Adaptive,
  ConfidenceBased,
  RegionAdaptive,
  KappaOnly,
  DepthOnly,
};

inline constexpr std::array<FusionStrategy, 9> kAllFusionStrategies = {
    FusionStrategy::Product,         FusionStrategy::WeightedSum,
    FusionStrategy::Max,             FusionStrategy::Min,
    FusionStrategy::Adaptive,        FusionStrategy::ConfidenceBased,
    FusionStrategy::RegionAdaptive,  FusionStrategy::KappaOnly,
    FusionStrategy::DepthOnly,
};

/// Direction of the curvature ramp. Inverted gives the strongest planar
/// constraint on flat surfaces; AsWritten applies w_min at low curvature.
enum class CurvatureOrientation { Inverted, AsWritten };

/// How the k nearest depth distances are reduced to a single value.
enum class KnnAggregate { Min, Mean };

std::string_view to_string(FusionStrategy s);
std::string_view to_string(CurvatureOrientation o);
std::string_view to_string(KnnAggregate a);
FusionStrategy parse_fusion(std::string_view s);
CurvatureOrientation parse_orientation(std::string_view s);
KnnAggregate parse_knn_aggregate(std::string_view s);

struct RefinementConfig {
  double kappa_low = 5.0;
  double kappa_high = 20.0;
  double w_min = 0.0;
  double w_max = 1.0;
  double d_near = 0.1;
  double d_far = 0.25;
  int knn_k = 10;
  KnnAggregate knn_aggregate = KnnAggregate::Min;
  int mc_samples = 3;
  double tau_unc = 0.3;
  int num_classes = kNumClasses;
  FusionStrategy fusion = FusionStrategy::Product;
  CurvatureOrientation orientation = CurvatureOrientation::Inverted;
  double init_interval = 0.16;
  double voxel_size = 0.08;

  /// Throws Error(Config) naming the first violated constraint.
  void validate() const;
};

inline constexpr double kScaleFloor = 1e-4;

/// Canonical hemisphere representative (w >= 0), normalized.
Quat canonical(const Quat& q);

/// Applies a residual: additive on mean, scale, opacity and logits,
/// left-multiplied on rotation. Scale is floored and opacity clamped to [0,1].
SemanticGaussian compose_refined(const SemanticGaussian& g,
                                 const GaussianDelta& d);

/// Sigma = R diag(s^2) R^T.
Mat3 covariance(const SemanticGaussian& g);

/// Throws Error(Domain) if g violates the SemanticGaussian invariants.
void check_invariants(const SemanticGaussian& g);

}  // namespace gsocc
