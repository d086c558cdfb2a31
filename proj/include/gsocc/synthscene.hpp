#pragma once

#include "gsocc/camera.hpp"
#include "gsocc/core.hpp"
#include "gsocc/grid.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace gsocc {

struct SceneObject {
  int label = static_cast<int>(SemanticClass::Objects);
  Box box;
  bool operator==(const SceneObject& o) const { return label == o.label && box == o.box; }
};

/// Axis-aligned room (floor, ceiling, four walls) plus solid boxes.
struct SyntheticScene {
  Box room;
  std::vector<SceneObject> objects;

  const Box& bounds() const { return room; }
  /// Throws Error(Domain) naming the offending box.
  void validate() const;
  bool operator==(const SyntheticScene& o) const {
    return room == o.room && objects == o.objects;
  }
};

struct SceneGenParams {
  Vec3 room_dims = Vec3(4.0, 3.6, 2.56);
  int min_objects = 3;
  int max_objects = 6;
};

/// Random furnished room; deterministic in the seed. At least three objects
/// with three distinct classes, all inside the room and mutually disjoint.
SyntheticScene generate_scene(std::uint64_t seed, const SceneGenParams& params = {});

/// Explicit scene; validated.
SyntheticScene make_scene(const Box& room, std::vector<SceneObject> objects);

inline SyntheticScene empty_room(const Vec3& dims) {
  return make_scene(Box{Vec3::Zero(), dims}, {});
}

/// One planar face of the scene. `normal` points away from the solid side
/// (into the room for room faces, out of the box for objects).
struct Surface {
  int face_id = 0;
  int label = 0;
  int axis = 0;
  double offset = 0.0;  // plane coordinate along `axis`
  Vec3 normal = Vec3::Zero();
  Box rect;  // degenerate along `axis`

  double signed_distance(const Vec3& p) const { return normal.dot(p) - normal[axis] * offset; }
  Vec3 closest_point(const Vec3& p) const { return rect.clamp(p); }
  double distance(const Vec3& p) const { return (closest_point(p) - p).norm(); }
};

/// Room faces first (ids 0..5: -x, +x, -y, +y, floor, ceiling), then six
/// faces per object (id 6 + 6k + 2 * axis + side).
std::vector<Surface> surfaces(const SyntheticScene& scene);

struct NearestSurface {
  std::size_t index = 0;
  Vec3 point = Vec3::Zero();
  double distance = 0.0;
};

/// Closest face rectangle to p. Ties go to the lower index. `faces` must be
/// non-empty.
NearestSurface nearest_surface(const std::vector<Surface>& faces, const Vec3& p);

struct RayHit {
  double t = 0.0;
  int face_id = -1;
  int label = 0;
  Vec3 normal = Vec3::Zero();  // world frame, facing the ray origin
};

/// First hit along origin + t * dir, t > 0.
std::optional<RayHit> cast_ray(const SyntheticScene& scene, const Vec3& origin, const Vec3& dir);

/// Maps the 3x3 maximum normal angle to curvature: a 90 degree edge gives 25.
inline constexpr double kCurvatureScale = 50.0 / 3.14159265358979323846;

struct RenderedFrame {
  GeometricCues cues;
  std::vector<Vec3> cloud;    // world-frame hit points, one per surface pixel
  std::vector<int> face_ids;  // per pixel, -1 for no surface
};

/// Ray casts every pixel center. Curvature is kCurvatureScale times the
/// largest angle between a pixel's normal and its 3x3 neighbours, where a
/// neighbour on a different face or with no surface counts as at least 90
/// degrees.
RenderedFrame render_cues(const SyntheticScene& scene, const CameraFrame& frame);

/// Class of the solid or surface containing p; 0 for free space or outside
/// the room. Room faces form a shell one voxel thick: a point belongs to a
/// face when its inward distance lies in (-voxel/2, voxel/2].
int label_at(const SyntheticScene& scene, const Vec3& p, double voxel_size);

/// Ground-truth labels at voxel centers; `grid_to_world` places the grid.
VoxelGrid voxelize_gt(const SyntheticScene& scene, const GridSpec& spec,
                      const Eigen::Isometry3d& grid_to_world = Eigen::Isometry3d::Identity());

struct OrbitParams {
  int frames = 30;
  double arc_degrees = 360.0;
  double start_degrees = 0.0;
  double radius = 0.6;   // m from the room center
  double height = 1.5;   // m above the floor
  double pitch_degrees = -20.0;
  bool inward = true;    // look across the room center, else away from it
  Intrinsics intr;
};

/// Cameras on a horizontal circle around the room center, yaw advancing by
/// arc / frames per frame.
std::vector<CameraFrame> orbit_trajectory(const Box& room, const OrbitParams& params = {});

}  // namespace gsocc
