#include "gsocc/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace gsocc {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written with native little-endian layout");

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr char kGridMagic[8] = {'G', 'S', 'O', 'C', 'C', 'G', 'R', 'D'};
constexpr char kMemMagic[8] = {'G', 'S', 'O', 'C', 'C', 'M', 'E', 'M'};
constexpr std::uint32_t kFormatVersion = 1;

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::Input, where + ": " + what);
}

const json& field(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) bad(where + "/" + key, "missing");
  return *it;
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) bad(where, "expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) bad(where, "expected an integer");
  return j.get<int>();
}

Vec3 vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) bad(where, "expected an array of 3 numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) v[i] = number(j[static_cast<std::size_t>(i)], where + "/" + std::to_string(i));
  return v;
}

ordered_json vec_json(const Vec3& v) { return ordered_json::array({v.x(), v.y(), v.z()}); }

class Writer {
 public:
  template <class T>
  void put(const T& v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void raw(const char* p, std::size_t n) { out_.append(p, n); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n)
      bad("byte " + std::to_string(pos_), "unexpected end of data");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

void expect_magic(Reader& r, const char (&magic)[8], const char* what) {
  if (r.raw(8) != std::string(magic, 8)) bad("byte 0", std::string("not a ") + what + " file");
  const auto version = r.get<std::uint32_t>();
  if (version != kFormatVersion) bad("byte 8", "unsupported version " + std::to_string(version));
}

ordered_json stats_json(const FrameStats& s) {
  ordered_json j;
  j["frame"] = s.frame;
  j["visible"] = s.visible;
  j["updated"] = s.updated;
  j["skipped"] = s.skipped;
  j["fallback"] = s.fallback;
  j["mean_entropy"] = s.mean_entropy;
  return j;
}

FrameStats stats_from_json(const json& j, const std::string& where) {
  FrameStats s;
  s.frame = integer(field(j, "frame", where), where + "/frame");
  s.visible = integer(field(j, "visible", where), where + "/visible");
  s.updated = integer(field(j, "updated", where), where + "/updated");
  s.skipped = integer(field(j, "skipped", where), where + "/skipped");
  s.fallback = integer(field(j, "fallback", where), where + "/fallback");
  s.mean_entropy = number(field(j, "mean_entropy", where), where + "/mean_entropy");
  return s;
}

ordered_json box_json(const Box& b) {
  ordered_json j;
  j["min"] = vec_json(b.min);
  j["max"] = vec_json(b.max);
  return j;
}

Box box_from_json(const json& j, const std::string& where) {
  return Box{vec3(field(j, "min", where), where + "/min"),
             vec3(field(j, "max", where), where + "/max")};
}

}  // namespace

ordered_json scene_to_json(const SyntheticScene& scene) {
  ordered_json j;
  j["room"]["origin"] = vec_json(scene.room.min);
  j["room"]["dims"] = vec_json(scene.room.extent());
  j["objects"] = ordered_json::array();
  for (const auto& o : scene.objects) {
    ordered_json oj;
    oj["class"] = std::string(class_name(o.label));
    oj["min"] = vec_json(o.box.min);
    oj["max"] = vec_json(o.box.max);
    j["objects"].push_back(oj);
  }
  return j;
}

SyntheticScene scene_from_json(const json& j) {
  const json& room = field(j, "room", "");
  const Vec3 dims = vec3(field(room, "dims", "/room"), "/room/dims");
  Vec3 origin = Vec3::Zero();
  if (room.contains("origin")) origin = vec3(room["origin"], "/room/origin");
  if ((dims.array() <= 0.0).any()) bad("/room/dims", "dimensions must be positive");

  std::vector<SceneObject> objects;
  if (j.contains("objects")) {
    const json& arr = j["objects"];
    if (!arr.is_array()) bad("/objects", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = "/objects/" + std::to_string(i);
      const json& cls = field(arr[i], "class", where);
      if (!cls.is_string()) bad(where + "/class", "expected a class name");
      SceneObject o;
      try {
        o.label = class_from_name(cls.get<std::string>());
      } catch (const Error& e) {
        bad(where + "/class", e.what());
      }
      if (o.label == 0) bad(where + "/class", "objects cannot be empty space");
      o.box = box_from_json(arr[i], where);
      objects.push_back(o);
    }
  }
  try {
    return make_scene(Box{origin, origin + dims}, std::move(objects));
  } catch (const Error& e) {
    throw Error(ErrorKind::Input, std::string("invalid scene: ") + e.what());
  }
}

ordered_json trajectory_to_json(const std::vector<CameraFrame>& frames) {
  ordered_json j;
  const Intrinsics intr = frames.empty() ? Intrinsics{} : frames.front().intr;
  j["intrinsics"] = {{"fx", intr.fx}, {"fy", intr.fy}, {"cx", intr.cx},
                     {"cy", intr.cy}, {"width", intr.width}, {"height", intr.height}};
  if (!frames.empty()) {
    const auto& f = frames.front();
    j["frustum"] = {{"depth", f.frustum_depth}, {"xy", f.frustum_xy},
                    {"z_extent", f.frustum_z_extent}};
  }
  j["poses"] = ordered_json::array();
  for (const auto& f : frames) {
    const Eigen::Matrix4d m = f.camera_to_world().matrix();
    ordered_json row = ordered_json::array();
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) row.push_back(m(r, c));
    j["poses"].push_back(row);
  }
  return j;
}

std::vector<CameraFrame> trajectory_from_json(const json& j) {
  Intrinsics intr;
  if (j.contains("intrinsics")) {
    const json& ij = j["intrinsics"];
    intr.fx = number(field(ij, "fx", "/intrinsics"), "/intrinsics/fx");
    intr.fy = number(field(ij, "fy", "/intrinsics"), "/intrinsics/fy");
    intr.cx = number(field(ij, "cx", "/intrinsics"), "/intrinsics/cx");
    intr.cy = number(field(ij, "cy", "/intrinsics"), "/intrinsics/cy");
    intr.width = integer(field(ij, "width", "/intrinsics"), "/intrinsics/width");
    intr.height = integer(field(ij, "height", "/intrinsics"), "/intrinsics/height");
  }
  CameraFrame proto;
  if (j.contains("frustum")) {
    const json& fj = j["frustum"];
    proto.frustum_depth = number(field(fj, "depth", "/frustum"), "/frustum/depth");
    proto.frustum_xy = number(field(fj, "xy", "/frustum"), "/frustum/xy");
    proto.frustum_z_extent = number(field(fj, "z_extent", "/frustum"), "/frustum/z_extent");
  }
  const json& poses = field(j, "poses", "");
  if (!poses.is_array() || poses.empty()) bad("/poses", "expected a non-empty array");
  std::vector<CameraFrame> out;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const std::string where = "/poses/" + std::to_string(i);
    const json& p = poses[i];
    if (!p.is_array() || p.size() != 16) bad(where, "expected 16 numbers");
    Eigen::Matrix4d m;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c)
        m(r, c) = number(p[static_cast<std::size_t>(4 * r + c)], where);
    if (std::abs(m(3, 0)) + std::abs(m(3, 1)) + std::abs(m(3, 2)) + std::abs(m(3, 3) - 1.0) > 1e-9)
      bad(where, "last row must be 0 0 0 1");
    Eigen::Isometry3d iso;
    iso.matrix() = m;
    CameraFrame f;
    try {
      f = CameraFrame::from_camera_to_world(iso, intr);
      f.frustum_depth = proto.frustum_depth;
      f.frustum_xy = proto.frustum_xy;
      f.frustum_z_extent = proto.frustum_z_extent;
      f.validate();
    } catch (const Error& e) {
      bad(where, e.what());
    }
    out.push_back(f);
  }
  return out;
}

std::string encode_grid(const VoxelGrid& grid, bool with_density) {
  grid.spec.validate();
  if (grid.labels.size() != grid.spec.count())
    throw Error(ErrorKind::Invariant, "grid label count does not match its dims");
  if (with_density && grid.density.size() != grid.spec.count())
    throw Error(ErrorKind::Invariant, "grid has no density to write");
  Writer w;
  w.raw(kGridMagic, 8);
  w.put(kFormatVersion);
  w.put<std::uint32_t>(with_density ? 1u : 0u);
  for (int a = 0; a < 3; ++a) w.put(grid.spec.origin[a]);
  for (int a = 0; a < 3; ++a) w.put<std::int32_t>(grid.spec.dims[static_cast<std::size_t>(a)]);
  w.put(grid.spec.voxel_size);
  w.raw(reinterpret_cast<const char*>(grid.labels.data()), grid.labels.size());
  if (with_density)
    for (double d : grid.density) w.put(static_cast<float>(d));
  return w.take();
}

VoxelGrid decode_grid(const std::string& bytes) {
  Reader r(bytes);
  expect_magic(r, kGridMagic, "voxel grid");
  const auto flags = r.get<std::uint32_t>();
  GridSpec spec;
  for (int a = 0; a < 3; ++a) spec.origin[a] = r.get<double>();
  for (int a = 0; a < 3; ++a) spec.dims[static_cast<std::size_t>(a)] = r.get<std::int32_t>();
  spec.voxel_size = r.get<double>();
  try {
    spec.validate();
  } catch (const Error& e) {
    bad("grid header", e.what());
  }
  VoxelGrid g;
  g.spec = spec;
  const std::string labels = r.raw(spec.count());
  g.labels.assign(labels.begin(), labels.end());
  for (std::size_t i = 0; i < g.labels.size(); ++i)
    if (g.labels[i] >= kNumClasses) bad("label " + std::to_string(i), "class out of range");
  if (flags & 1u) {
    g.density.resize(spec.count());
    for (auto& d : g.density) d = r.get<float>();
  }
  if (!r.done()) bad("byte " + std::to_string(r.pos()), "trailing data");
  return g;
}

void write_cues(const std::string& stem, const GeometricCues& cues) {
  ordered_json h;
  h["width"] = cues.width;
  h["height"] = cues.height;
  h["dtype"] = "float32_le";
  h["layout"] = "planar";
  h["channels"] = {"depth", "normal_x", "normal_y", "normal_z", "curvature"};
  h["no_surface_depth"] = 0;
  write_file(stem + ".json", h.dump(2) + "\n");

  Writer w;
  for (double d : cues.depth) w.put(static_cast<float>(d));
  for (int a = 0; a < 3; ++a)
    for (const auto& n : cues.normal) w.put(static_cast<float>(n[a]));
  for (double c : cues.curvature) w.put(static_cast<float>(c));
  write_file(stem + ".bin", w.take());
}

GeometricCues read_cues(const std::string& stem) {
  const json h = read_json(stem + ".json");
  const int width = integer(field(h, "width", ""), "/width");
  const int height = integer(field(h, "height", ""), "/height");
  if (width <= 0 || height <= 0) bad("/width", "image size must be positive");
  GeometricCues cues(width, height);
  const std::string bytes = read_file(stem + ".bin");
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() != n * 5 * sizeof(float))
    bad(stem + ".bin", "expected " + std::to_string(n * 5 * sizeof(float)) + " bytes");
  Reader r(bytes);
  for (auto& d : cues.depth) d = r.get<float>();
  for (int a = 0; a < 3; ++a)
    for (auto& nv : cues.normal) nv[a] = r.get<float>();
  for (auto& c : cues.curvature) c = r.get<float>();
  return cues;
}

std::string encode_memory(const GaussianMemory& mem, std::uint64_t cfg_hash) {
  ordered_json h;
  h["bounds"] = box_json(mem.bounds);
  h["count"] = mem.gaussians.size();
  h["config_hash"] = hex64(cfg_hash);
  h["log"] = ordered_json::array();
  for (const auto& s : mem.log) h["log"].push_back(stats_json(s));
  const std::string header = h.dump();

  Writer w;
  w.raw(kMemMagic, 8);
  w.put(kFormatVersion);
  w.put(static_cast<std::uint32_t>(header.size()));
  w.raw(header.data(), header.size());
  for (std::size_t i = 0; i < mem.gaussians.size(); ++i) {
    const auto& g = mem.gaussians[i];
    w.put<std::int64_t>(g.id);
    for (int a = 0; a < 3; ++a) w.put(g.mean[a]);
    for (int a = 0; a < 3; ++a) w.put(g.scale[a]);
    w.put(g.rotation.w());
    w.put(g.rotation.x());
    w.put(g.rotation.y());
    w.put(g.rotation.z());
    w.put(g.opacity);
    for (int c = 0; c < kNumClasses; ++c) w.put(g.logits[c]);
    w.put(g.fixed_weight);
    w.put<std::uint32_t>(i < mem.observations.size() ? mem.observations[i] : 0u);
  }
  return w.take();
}

GaussianMemory decode_memory(const std::string& bytes, std::uint64_t* cfg_hash) {
  Reader r(bytes);
  expect_magic(r, kMemMagic, "memory checkpoint");
  const auto header_len = r.get<std::uint32_t>();
  json h;
  try {
    h = json::parse(r.raw(header_len));
  } catch (const json::exception& e) {
    bad("checkpoint header", e.what());
  }
  GaussianMemory mem;
  mem.bounds = box_from_json(field(h, "bounds", "/header"), "/header/bounds");
  const json& count_j = field(h, "count", "/header");
  if (!count_j.is_number_unsigned()) bad("/header/count", "expected a count");
  const auto count = count_j.get<std::size_t>();
  const json& hash_j = field(h, "config_hash", "/header");
  if (!hash_j.is_string()) bad("/header/config_hash", "expected a hex string");
  if (cfg_hash) {
    try {
      *cfg_hash = std::stoull(hash_j.get<std::string>(), nullptr, 16);
    } catch (const std::exception&) {
      bad("/header/config_hash", "expected a hex string");
    }
  }
  if (h.contains("log")) {
    const json& log = h["log"];
    if (!log.is_array()) bad("/header/log", "expected an array");
    for (std::size_t i = 0; i < log.size(); ++i)
      mem.log.push_back(stats_from_json(log[i], "/header/log/" + std::to_string(i)));
  }
  mem.gaussians.resize(count);
  mem.observations.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto& g = mem.gaussians[i];
    g.id = r.get<std::int64_t>();
    for (int a = 0; a < 3; ++a) g.mean[a] = r.get<double>();
    for (int a = 0; a < 3; ++a) g.scale[a] = r.get<double>();
    const double qw = r.get<double>(), qx = r.get<double>(), qy = r.get<double>(),
                 qz = r.get<double>();
    g.rotation = Quat(qw, qx, qy, qz);
    g.opacity = r.get<double>();
    for (int c = 0; c < kNumClasses; ++c) g.logits[c] = r.get<double>();
    g.fixed_weight = r.get<double>();
    mem.observations[i] = r.get<std::uint32_t>();
    if (g.id != static_cast<std::int64_t>(i)) bad("record " + std::to_string(i), "ids must be sequential");
    try {
      check_invariants(g);
    } catch (const Error& e) {
      bad("record " + std::to_string(i), e.what());
    }
  }
  if (!r.done()) bad("byte " + std::to_string(r.pos()), "trailing data");
  return mem;
}

std::string encode_ply(const VoxelGrid& grid, const Eigen::Isometry3d& grid_to_world) {
  static constexpr std::array<std::array<int, 3>, kNumClasses> palette = {{
      {0, 0, 0},       {214, 38, 40},  {43, 160, 43},  {158, 216, 229},
      {114, 158, 206}, {204, 204, 91}, {255, 186, 119}, {147, 102, 188},
      {30, 119, 181},  {188, 188, 33}, {255, 127, 12}, {196, 175, 214},
  }};
  std::ostringstream body;
  body << std::setprecision(9);
  std::size_t n = 0;
  const auto& s = grid.spec;
  for (int k = 0; k < s.dims[2]; ++k)
    for (int j = 0; j < s.dims[1]; ++j)
      for (int i = 0; i < s.dims[0]; ++i) {
        const int l = grid.label(i, j, k);
        if (l == 0) continue;
        const Vec3 p = grid_to_world * s.center(i, j, k);
        const auto& c = palette[static_cast<std::size_t>(l)];
        body << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << c[0] << ' ' << c[1] << ' '
             << c[2] << ' ' << l << '\n';
        ++n;
      }
  std::ostringstream out;
  out << "ply\nformat ascii 1.0\nelement vertex " << n
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\n"
         "property uchar label\nend_header\n"
      << body.str();
  return out.str();
}

ordered_json eval_to_json(const EvalReport& eval) {
  ordered_json j;
  j["iou"] = eval.iou;
  j["miou"] = eval.miou;
  ordered_json per = ordered_json::object();
  for (int c = 1; c < kNumClasses; ++c) {
    const auto& v = eval.per_class_iou[static_cast<std::size_t>(c - 1)];
    per[std::string(class_name(c))] = v ? ordered_json(*v) : ordered_json(nullptr);
  }
  j["per_class_iou"] = per;
  j["oop_drift_rms"] = eval.oop_drift_rms;
  j["total_visible"] = eval.total_visible;
  j["total_updated"] = eval.total_updated;
  j["total_skipped"] = eval.total_skipped;
  j["updates_per_frame"] = eval.updates_per_frame;
  return j;
}

ordered_json report_to_json(const RunReport& report, bool include_timing) {
  ordered_json j;
  j["kind"] = report.kind;
  j["mode"] = std::string(to_string(report.mode));
  j["fusion"] = std::string(to_string(report.fusion));
  j["curvature_orientation"] = std::string(to_string(report.orientation));
  j["seed"] = report.seed;
  j["config_hash"] = hex64(report.config_hash);
  j["gaussians"] = report.gaussian_count;
  j["grid_dims"] = report.grid_dims;
  j["frames"] = ordered_json::array();
  for (const auto& s : report.frames) j["frames"].push_back(stats_json(s));
  j["eval"] = eval_to_json(report.eval);
  if (include_timing) j["wall_seconds"] = report.wall_seconds;
  return j;
}

std::string format_table(const std::vector<TableRow>& rows) {
  std::vector<std::string> header = {"method", "IoU"};
  for (int c = 1; c < kNumClasses; ++c) header.emplace_back(class_name(c));
  header.insert(header.end(), {"mIoU", "drift", "updates"});

  auto pct = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << 100.0 * v;
    return s.str();
  };
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    std::vector<std::string> line = {r.name + (r.is_default ? " *" : ""), pct(r.eval.iou)};
    for (const auto& v : r.eval.per_class_iou) line.push_back(v ? pct(*v) : "-");
    line.push_back(pct(r.eval.miou));
    std::ostringstream d;
    d << std::fixed << std::setprecision(4) << r.eval.oop_drift_rms;
    line.push_back(d.str());
    line.push_back(std::to_string(r.eval.total_updated));
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& line : cells) width[c] = std::max(width[c], line[c].size());
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& line) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c == 0)
        out << std::left << std::setw(static_cast<int>(width[c])) << line[c];
      else
        out << "  " << std::right << std::setw(static_cast<int>(width[c])) << line[c];
    }
    out << '\n';
  };
  emit(header);
  std::size_t total = 0;
  for (auto w : width) total += w + 2;
  out << std::string(total - 2, '-') << '\n';
  for (const auto& line : cells) emit(line);
  return out.str();
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Input, "cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Input, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Input, "write failed: " + path);
}

json read_json(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Input, path + ": " + e.what());
  }
}

}  // namespace gsocc
