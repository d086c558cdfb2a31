#pragma once

#include "gsocc/core.hpp"

#include <optional>
#include <vector>

namespace gsocc {

struct Intrinsics {
  double fx = 100.0;
  double fy = 100.0;
  double cx = 79.5;
  double cy = 59.5;
  int width = 160;
  int height = 120;
};

/// A posed pinhole camera. Camera axes: x right, y down, z forward.
/// The frustum box spans |x| <= frustum_xy/2, |y| <= frustum_z_extent/2 and
/// 0 < z <= frustum_depth in camera coordinates.
struct CameraFrame {
  Mat3 rotation = Mat3::Identity();  // world -> camera
  Vec3 translation = Vec3::Zero();   // world -> camera
  Intrinsics intr;
  double frustum_depth = 4.8;
  double frustum_xy = 4.8;
  double frustum_z_extent = 2.88;

  Vec3 to_camera(const Vec3& p_world) const { return rotation * p_world + translation; }
  Vec3 to_world(const Vec3& p_cam) const {
    return rotation.transpose() * (p_cam - translation);
  }
  Vec3 center() const { return -rotation.transpose() * translation; }

  /// Throws Error(Domain) when the rotation is not proper orthonormal or the
  /// intrinsics are degenerate.
  void validate() const;

  /// Builds a frame from a camera-to-world pose.
  static CameraFrame from_camera_to_world(const Eigen::Isometry3d& cam_to_world,
                                          const Intrinsics& intr);
  /// Camera at `eye` looking at `target`, world z up.
  static CameraFrame look_at(const Vec3& eye, const Vec3& target,
                             const Intrinsics& intr);

  Eigen::Isometry3d camera_to_world() const;
};

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double z = 0.0;
};

/// std::nullopt when the point is at or behind the image plane.
std::optional<Projection> project(const CameraFrame& frame, const Vec3& p_world);

/// World point for pixel coordinate (u, v) at camera depth z.
Vec3 unproject(const CameraFrame& frame, double u, double v, double z);

bool is_visible(const CameraFrame& frame, const Vec3& p_world);
inline bool is_visible(const CameraFrame& frame, const SemanticGaussian& g) {
  return is_visible(frame, g.mean);
}

/// Per-pixel geometric cues for one frame. A depth of 0 marks a pixel with
/// no surface; its normal is zero and its curvature 0.
struct GeometricCues {
  int width = 0;
  int height = 0;
  std::vector<Vec3> normal;       // camera frame, unit where defined
  std::vector<double> curvature;  // >= 0
  std::vector<double> depth;      // meters along camera z, 0 = no surface

  GeometricCues() = default;
  GeometricCues(int w, int h);

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(x);
  }
  bool has_surface(int x, int y) const { return depth[index(x, y)] > 0.0; }
};

struct CueSample {
  Vec3 normal_world = Vec3::Zero();
  double kappa = 0.0;
  bool valid = false;
  int px = -1;
  int py = -1;
};

/// Nearest-pixel lookup of normal and curvature at the projection of g.
/// Requires is_visible(frame, g).
CueSample sample_cues(const CameraFrame& frame, const GeometricCues& cues,
                      const SemanticGaussian& g);

}  // namespace gsocc
