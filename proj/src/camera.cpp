#include "gsocc/camera.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace gsocc {

void CameraFrame::validate() const {
  const Mat3 should_be_identity = rotation * rotation.transpose();
  if (!should_be_identity.isIdentity(1e-9) ||
      std::abs(rotation.determinant() - 1.0) > 1e-9) {
    throw Error(ErrorKind::Domain, "camera rotation is not a proper rotation");
  }
  if (!(intr.fx > 0.0 && intr.fy > 0.0))
    throw Error(ErrorKind::Domain, "focal lengths must be positive");
  if (intr.width <= 0 || intr.height <= 0)
    throw Error(ErrorKind::Domain, "image size must be positive");
  if (!(frustum_depth > 0.0 && frustum_xy > 0.0 && frustum_z_extent > 0.0))
    throw Error(ErrorKind::Domain, "frustum box must be non-degenerate");
}

CameraFrame CameraFrame::from_camera_to_world(const Eigen::Isometry3d& cam_to_world,
                                              const Intrinsics& intr) {
  CameraFrame f;
  f.rotation = cam_to_world.linear().transpose();
  f.translation = -f.rotation * cam_to_world.translation();
  f.intr = intr;
  return f;
}

CameraFrame CameraFrame::look_at(const Vec3& eye, const Vec3& target,
                                 const Intrinsics& intr) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(Vec3::UnitZ());
  if (right.norm() < 1e-9) right = Vec3::UnitX();  // looking straight up/down
  right.normalize();
  const Vec3 down = forward.cross(right);
  CameraFrame f;
  f.rotation.row(0) = right.transpose();
  f.rotation.row(1) = down.transpose();
  f.rotation.row(2) = forward.transpose();
  f.translation = -f.rotation * eye;
  f.intr = intr;
  return f;
}

Eigen::Isometry3d CameraFrame::camera_to_world() const {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.linear() = rotation.transpose();
  t.translation() = center();
  return t;
}

std::optional<Projection> project(const CameraFrame& frame, const Vec3& p_world) {
  const Vec3 p = frame.to_camera(p_world);
  if (p.z() <= 0.0) return std::nullopt;
  return Projection{frame.intr.fx * p.x() / p.z() + frame.intr.cx,
                    frame.intr.fy * p.y() / p.z() + frame.intr.cy, p.z()};
}

Vec3 unproject(const CameraFrame& frame, double u, double v, double z) {
  const Vec3 p_cam((u - frame.intr.cx) / frame.intr.fx * z,
                   (v - frame.intr.cy) / frame.intr.fy * z, z);
  return frame.to_world(p_cam);
}

bool is_visible(const CameraFrame& frame, const Vec3& p_world) {
  const Vec3 p = frame.to_camera(p_world);
  if (p.z() <= 0.0 || p.z() > frame.frustum_depth) return false;
  if (std::abs(p.x()) > 0.5 * frame.frustum_xy) return false;
  if (std::abs(p.y()) > 0.5 * frame.frustum_z_extent) return false;
  const double u = frame.intr.fx * p.x() / p.z() + frame.intr.cx;
  const double v = frame.intr.fy * p.y() / p.z() + frame.intr.cy;
  return u >= 0.0 && u < frame.intr.width && v >= 0.0 && v < frame.intr.height;
}

GeometricCues::GeometricCues(int w, int h)
    : width(w),
      height(h),
      normal(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), Vec3::Zero()),
      curvature(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0),
      depth(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0) {}

CueSample sample_cues(const CameraFrame& frame, const GeometricCues& cues,
                      const SemanticGaussian& g) {
  assert(is_visible(frame, g));
  assert(cues.width == frame.intr.width && cues.height == frame.intr.height);
  const auto proj = project(frame, g.mean);
  CueSample out;
  if (!proj) return out;
  // u in [width - 0.5, width) rounds to width; keep it on the last column.
  out.px = std::clamp(static_cast<int>(std::lround(proj->u)), 0, cues.width - 1);
  out.py = std::clamp(static_cast<int>(std::lround(proj->v)), 0, cues.height - 1);
  if (!cues.has_surface(out.px, out.py)) return out;
  const auto i = cues.index(out.px, out.py);
  out.normal_world = frame.rotation.transpose() * cues.normal[i];
  out.kappa = cues.curvature[i];
  out.valid = true;
  return out;
}

}  // namespace gsocc
