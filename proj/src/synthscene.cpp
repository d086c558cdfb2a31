#include "gsocc/synthscene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace gsocc {
namespace {

std::string describe(const Box& b) {
  std::ostringstream os;
  os << "[" << b.min.x() << ", " << b.min.y() << ", " << b.min.z() << "] - ["
     << b.max.x() << ", " << b.max.y() << ", " << b.max.z() << "]";
  return os.str();
}

bool interiors_overlap(const Box& a, const Box& b) {
  return (a.min.array() < b.max.array()).all() && (b.min.array() < a.max.array()).all();
}

int room_face_label(int axis, int side) {
  if (axis == 2) return static_cast<int>(side == 0 ? SemanticClass::Floor : SemanticClass::Ceiling);
  return static_cast<int>(SemanticClass::Wall);
}

struct SizeRange {
  Vec3 lo;
  Vec3 hi;
};

SizeRange size_range(int label) {
  switch (static_cast<SemanticClass>(label)) {
    case SemanticClass::Chair: return {{0.4, 0.4, 0.8}, {0.6, 0.6, 1.0}};
    case SemanticClass::Bed: return {{1.4, 0.9, 0.4}, {2.0, 1.6, 0.6}};
    case SemanticClass::Sofa: return {{1.4, 0.7, 0.6}, {2.0, 0.9, 0.9}};
    case SemanticClass::Table: return {{0.8, 0.6, 0.7}, {1.4, 1.0, 0.8}};
    case SemanticClass::Tvs: return {{0.8, 0.12, 0.5}, {1.2, 0.2, 0.7}};
    case SemanticClass::Furniture: return {{0.6, 0.4, 0.8}, {1.2, 0.6, 1.4}};
    case SemanticClass::Objects: return {{0.2, 0.2, 0.2}, {0.4, 0.4, 0.4}};
    case SemanticClass::Window: return {{0.6, 0.04, 0.6}, {1.2, 0.04, 1.0}};
    default: return {{0.3, 0.3, 0.3}, {0.5, 0.5, 0.5}};
  }
}

}  // namespace

void SyntheticScene::validate() const {
  const Vec3 dims = room.extent();
  if ((dims.array() < 1.0).any())
    throw Error(ErrorKind::Domain, "room must be at least 1 m along each axis, got " + describe(room));
  constexpr double eps = 1e-9;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& o = objects[i];
    const std::string where = "object " + std::to_string(i) + " " + describe(o.box);
    if (o.label < static_cast<int>(SemanticClass::Window) || o.label >= kNumClasses)
      throw Error(ErrorKind::Domain, where + ": class must be an object category");
    if ((o.box.max.array() <= o.box.min.array()).any())
      throw Error(ErrorKind::Domain, where + ": empty or inverted box");
    if ((o.box.min.array() < room.min.array() - eps).any() ||
        (o.box.max.array() > room.max.array() + eps).any())
      throw Error(ErrorKind::Domain, where + ": not inside the room");
  }
}

SyntheticScene make_scene(const Box& room, std::vector<SceneObject> objects) {
  SyntheticScene s{room, std::move(objects)};
  s.validate();
  return s;
}

SyntheticScene generate_scene(std::uint64_t seed, const SceneGenParams& params) {
  SyntheticScene scene;
  scene.room = Box{Vec3::Zero(), params.room_dims};
  scene.validate();

  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  std::vector<int> classes;
  for (int c = static_cast<int>(SemanticClass::Window); c < kNumClasses; ++c) classes.push_back(c);
  std::shuffle(classes.begin(), classes.end(), rng);

  const int lo = std::max(3, params.min_objects);
  const int hi = std::max(lo, params.max_objects);
  const int wanted = std::uniform_int_distribution<int>(lo, hi)(rng);
  const Vec3 dims = params.room_dims;

  for (int n = 0; n < wanted; ++n) {
    const int label = classes[static_cast<std::size_t>(n) % classes.size()];
    const auto range = size_range(label);
    double shrink = 1.0;
    bool placed = false;
    while (!placed && shrink > 0.05) {
      for (int attempt = 0; attempt < 50 && !placed; ++attempt) {
        Vec3 size(uniform(range.lo.x(), range.hi.x()), uniform(range.lo.y(), range.hi.y()),
                  uniform(range.lo.z(), range.hi.z()));
        size.head<2>() *= shrink;
        size.z() *= shrink;
        Box box;
        if (label == static_cast<int>(SemanticClass::Window)) {
          // Thin slab flush against one wall.
          const int wall = std::uniform_int_distribution<int>(0, 3)(rng);
          const int along = wall < 2 ? 1 : 0;
          const int across = 1 - along;
          const double width = std::min(size.x(), 0.8 * dims[along]);
          const double height = std::min(size.z(), 0.5 * dims.z());
          const double bottom = uniform(0.3 * dims.z(), dims.z() - height - 0.05 * dims.z());
          const double start = uniform(0.0, dims[along] - width);
          box.min[along] = start;
          box.max[along] = start + width;
          box.min.z() = bottom;
          box.max.z() = bottom + height;
          if (wall % 2 == 0) {
            box.min[across] = 0.0;
            box.max[across] = size.y();
          } else {
            box.min[across] = dims[across] - size.y();
            box.max[across] = dims[across];
          }
        } else {
          if (std::uniform_int_distribution<int>(0, 1)(rng) == 1) std::swap(size.x(), size.y());
          for (int a = 0; a < 3; ++a) size[a] = std::min(size[a], 0.45 * dims[a]);
          box.min.x() = uniform(0.0, dims.x() - size.x());
          box.min.y() = uniform(0.0, dims.y() - size.y());
          box.min.z() = 0.0;
          if (label == static_cast<int>(SemanticClass::Tvs)) box.min.z() = uniform(0.0, 0.35 * dims.z());
          box.max = box.min + size;
        }
        box.min += scene.room.min;
        box.max += scene.room.min;
        const bool clash = std::any_of(scene.objects.begin(), scene.objects.end(),
                                       [&](const SceneObject& o) { return interiors_overlap(o.box, box); });
        if (!clash) {
          scene.objects.push_back({label, box});
          placed = true;
        }
      }
      shrink *= 0.8;
    }
  }
  if (scene.objects.size() < 3)
    throw Error(ErrorKind::Invariant, "could not place three objects in the room");
  scene.validate();
  return scene;
}

std::vector<Surface> surfaces(const SyntheticScene& scene) {
  std::vector<Surface> out;
  out.reserve(6 + 6 * scene.objects.size());
  auto add_box_faces = [&](const Box& b, int first_id, bool room, int object_label) {
    for (int axis = 0; axis < 3; ++axis) {
      for (int side = 0; side < 2; ++side) {
        Surface s;
        s.face_id = first_id + 2 * axis + side;
        s.axis = axis;
        s.offset = side == 0 ? b.min[axis] : b.max[axis];
        s.normal = Vec3::Zero();
        // Room faces point inward, object faces outward.
        s.normal[axis] = (side == 0) == room ? 1.0 : -1.0;
        s.rect = b;
        s.rect.min[axis] = s.offset;
        s.rect.max[axis] = s.offset;
        s.label = room ? room_face_label(axis, side) : object_label;
        out.push_back(s);
      }
    }
  };
  add_box_faces(scene.room, 0, true, 0);
  for (std::size_t k = 0; k < scene.objects.size(); ++k) {
    add_box_faces(scene.objects[k].box, 6 + 6 * static_cast<int>(k), false, scene.objects[k].label);
  }
  return out;
}

NearestSurface nearest_surface(const std::vector<Surface>& faces, const Vec3& p) {
  NearestSurface best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const Vec3 q = faces[i].closest_point(p);
    const double d = (q - p).norm();
    if (d < best.distance) best = {i, q, d};
  }
  return best;
}

std::optional<RayHit> cast_ray(const SyntheticScene& scene, const Vec3& origin, const Vec3& dir) {
  std::optional<RayHit> best;
  const auto& room = scene.room;
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) continue;
    const int side = dir[a] > 0.0 ? 1 : 0;
    const double t = ((side ? room.max[a] : room.min[a]) - origin[a]) / dir[a];
    if (t > 0.0 && (!best || t < best->t)) {
      RayHit h;
      h.t = t;
      h.face_id = 2 * a + side;
      h.label = room_face_label(a, side);
      h.normal[a] = side ? -1.0 : 1.0;
      best = h;
    }
  }
  for (std::size_t k = 0; k < scene.objects.size(); ++k) {
    const Box& b = scene.objects[k].box;
    double t_near = -std::numeric_limits<double>::infinity();
    double t_far = std::numeric_limits<double>::infinity();
    int near_axis = -1;
    int near_side = 0;
    bool miss = false;
    for (int a = 0; a < 3 && !miss; ++a) {
      if (dir[a] == 0.0) {
        miss = origin[a] < b.min[a] || origin[a] > b.max[a];
        continue;
      }
      double t1 = (b.min[a] - origin[a]) / dir[a];
      double t2 = (b.max[a] - origin[a]) / dir[a];
      const int entry_side = dir[a] > 0.0 ? 0 : 1;
      if (t1 > t2) std::swap(t1, t2);
      if (t1 > t_near) {
        t_near = t1;
        near_axis = a;
        near_side = entry_side;
      }
      t_far = std::min(t_far, t2);
    }
    if (miss || near_axis < 0 || t_near > t_far || t_near <= 0.0) continue;
    if (!best || t_near < best->t) {
      RayHit h;
      h.t = t_near;
      h.face_id = 6 + 6 * static_cast<int>(k) + 2 * near_axis + near_side;
      h.label = scene.objects[k].label;
      h.normal[near_axis] = near_side ? 1.0 : -1.0;
      best = h;
    }
  }
  return best;
}

RenderedFrame render_cues(const SyntheticScene& scene, const CameraFrame& frame) {
  frame.validate();
  const int w = frame.intr.width;
  const int h = frame.intr.height;
  RenderedFrame out;
  out.cues = GeometricCues(w, h);
  out.face_ids.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), -1);
  const Vec3 origin = frame.center();
  const Mat3 cam_to_world = frame.rotation.transpose();

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Vec3 dir_cam((x - frame.intr.cx) / frame.intr.fx, (y - frame.intr.cy) / frame.intr.fy, 1.0);
      const auto hit = cast_ray(scene, origin, cam_to_world * dir_cam);
      if (!hit) continue;
      const auto i = out.cues.index(x, y);
      // dir_cam has unit z, so the ray parameter is the camera depth.
      out.cues.depth[i] = hit->t;
      out.cues.normal[i] = frame.rotation * hit->normal;
      out.face_ids[i] = hit->face_id;
      out.cloud.push_back(unproject(frame, x, y, hit->t));
    }
  }

  constexpr double kRightAngle = std::numbers::pi / 2.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto i = out.cues.index(x, y);
      if (out.face_ids[i] < 0) continue;
      double max_angle = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx;
          const int ny = y + dy;
          if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const auto j = out.cues.index(nx, ny);
          if (out.face_ids[j] == out.face_ids[i]) continue;
          double angle = kRightAngle;
          if (out.face_ids[j] >= 0) {
            const double c = std::clamp(out.cues.normal[i].dot(out.cues.normal[j]), -1.0, 1.0);
            angle = std::max(angle, std::acos(c));
          }
          max_angle = std::max(max_angle, angle);
        }
      }
      out.cues.curvature[i] = kCurvatureScale * max_angle;
    }
  }
  return out;
}

int label_at(const SyntheticScene& scene, const Vec3& p, double voxel_size) {
  for (const auto& o : scene.objects) {
    if (o.box.contains(p)) return o.label;
  }
  const double half = 0.5 * voxel_size;
  const double tol = 1e-9 * voxel_size;
  std::array<double, 6> inward{};  // -x, +x, -y, +y, floor, ceiling
  for (int a = 0; a < 3; ++a) {
    inward[static_cast<std::size_t>(2 * a)] = p[a] - scene.room.min[a];
    inward[static_cast<std::size_t>(2 * a + 1)] = scene.room.max[a] - p[a];
  }
  for (double d : inward) {
    if (d <= -half + tol) return 0;  // outside the room
  }
  auto in_shell = [&](std::size_t face) { return inward[face] > -half + tol && inward[face] <= half + tol; };
  if (in_shell(4)) return static_cast<int>(SemanticClass::Floor);
  if (in_shell(5)) return static_cast<int>(SemanticClass::Ceiling);
  for (std::size_t f = 0; f < 4; ++f) {
    if (in_shell(f)) return static_cast<int>(SemanticClass::Wall);
  }
  return 0;
}

VoxelGrid voxelize_gt(const SyntheticScene& scene, const GridSpec& spec,
                      const Eigen::Isometry3d& grid_to_world) {
  spec.validate();
  VoxelGrid grid(spec);
  grid.density.clear();
  for (int k = 0; k < spec.dims[2]; ++k) {
    for (int j = 0; j < spec.dims[1]; ++j) {
      for (int i = 0; i < spec.dims[0]; ++i) {
        const Vec3 p = grid_to_world * spec.center(i, j, k);
        grid.labels[spec.index(i, j, k)] = static_cast<std::uint8_t>(label_at(scene, p, spec.voxel_size));
      }
    }
  }
  return grid;
}

std::vector<CameraFrame> orbit_trajectory(const Box& room, const OrbitParams& params) {
  if (params.frames < 1) throw Error(ErrorKind::Domain, "orbit needs at least one frame");
  std::vector<CameraFrame> out;
  out.reserve(static_cast<std::size_t>(params.frames));
  const Vec3 c = room.center();
  const double pitch = params.pitch_degrees * std::numbers::pi / 180.0;
  for (int f = 0; f < params.frames; ++f) {
    const double theta =
        (params.start_degrees + params.arc_degrees * f / params.frames) * std::numbers::pi / 180.0;
    const Vec3 radial(std::cos(theta), std::sin(theta), 0.0);
    const Vec3 eye(c.x() + params.radius * radial.x(), c.y() + params.radius * radial.y(),
                   room.min.z() + params.height);
    const Vec3 heading = params.inward ? -radial : radial;
    const Vec3 forward = std::cos(pitch) * heading + std::sin(pitch) * Vec3::UnitZ();
    out.push_back(CameraFrame::look_at(eye, eye + forward, params.intr));
  }
  return out;
}

}  // namespace gsocc
