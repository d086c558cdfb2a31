#pragma once

#include "gsocc/camera.hpp"
#include "gsocc/config.hpp"
#include "gsocc/grid.hpp"
#include "gsocc/memory.hpp"
#include "gsocc/synthscene.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace gsocc {

// File formats. All binary data is little-endian. Parse failures throw
// Error(Input) with the offending JSON path or byte offset in the message.

// Scene: {"room": {"origin": [x,y,z], "dims": [lx,ly,lz]},
//         "objects": [{"class": "bed", "min": [..], "max": [..]}, ...]}
nlohmann::ordered_json scene_to_json(const SyntheticScene& scene);
SyntheticScene scene_from_json(const nlohmann::json& j);

// Trajectory: {"intrinsics": {"fx","fy","cx","cy","width","height"},
//              "frustum": {"depth","xy","z_extent"}  (optional),
//              "poses": [[16 numbers, camera-to-world 4x4 row-major], ...]}
nlohmann::ordered_json trajectory_to_json(const std::vector<CameraFrame>& frames);
std::vector<CameraFrame> trajectory_from_json(const nlohmann::json& j);

// Voxel grid: "GSOCCGRD", u32 version, u32 flags (bit 0: density present),
// f64 origin[3], i32 dims[3], f64 voxel_size, u8 labels[count] (x fastest),
// then f32 density[count] when flagged.
std::string encode_grid(const VoxelGrid& grid, bool with_density);
VoxelGrid decode_grid(const std::string& bytes);

// Cue maps: <stem>.json header {"width","height","dtype":"float32_le",
// "layout":"planar","channels":["depth","normal_x","normal_y","normal_z",
// "curvature"],"no_surface_depth":0} and <stem>.bin with one width*height
// plane per channel, row-major.
void write_cues(const std::string& stem, const GeometricCues& cues);
GeometricCues read_cues(const std::string& stem);

// Memory checkpoint: "GSOCCMEM", u32 version, u32 header length, JSON header
// {"bounds", "count", "config_hash", "log"}, then per Gaussian: i64 id,
// f64 mean[3], scale[3], rotation[4] (w,x,y,z), opacity, logits[12],
// fixed_weight, u32 observation count.
std::string encode_memory(const GaussianMemory& mem, std::uint64_t cfg_hash);
GaussianMemory decode_memory(const std::string& bytes, std::uint64_t* cfg_hash = nullptr);

/// ASCII PLY of occupied voxel centers colored by class.
std::string encode_ply(const VoxelGrid& grid,
                       const Eigen::Isometry3d& grid_to_world = Eigen::Isometry3d::Identity());

/// Run report. Wall time only with include_timing.
nlohmann::ordered_json report_to_json(const RunReport& report, bool include_timing = false);
nlohmann::ordered_json eval_to_json(const EvalReport& eval);

struct TableRow {
  std::string name;
  EvalReport eval;
  bool is_default = false;
};

/// Aligned text table: method, IoU, one column per class, mIoU, drift, updates.
std::string format_table(const std::vector<TableRow>& rows);

std::string hex64(std::uint64_t v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);
nlohmann::json read_json(const std::string& path);

}  // namespace gsocc
