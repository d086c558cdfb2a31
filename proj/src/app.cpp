#include "gsocc/app.hpp"

#include "gsocc/io.hpp"
#include "gsocc/memory.hpp"
#include "gsocc/metrics.hpp"
#include "gsocc/splat.hpp"

#include <CLI11.hpp>

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace gsocc {
namespace {

using nlohmann::ordered_json;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::string fusion;
  std::string orientation;
  std::optional<double> tau_unc;
  std::optional<int> threads;
  bool ci = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Config file ([section] key = value)");
  cmd->add_option("--seed", o.seed, "Run seed (overrides [run] seed)");
  cmd->add_option("--mode", o.mode, "Update mode: sus | fixed | unconstrained");
  cmd->add_option("--fusion", o.fusion, "Fusion strategy, e.g. product");
  cmd->add_option("--orientation", o.orientation, "Curvature ramp: inverted | as_written");
  cmd->add_option("--tau-unc", o.tau_unc, "Entropy threshold in [0, 1]");
  cmd->add_option("--threads", o.threads, "Worker threads, 0 = all cores");
  cmd->add_flag("--ci", o.ci, "CI mode: --seed is mandatory");
}

PipelineConfig resolve_config(const CommonOptions& o) {
  if (o.ci && !o.seed) throw Error(ErrorKind::Config, "--seed is mandatory with --ci");
  PipelineConfig cfg = o.config.empty() ? PipelineConfig{} : load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.mode.empty()) cfg.mode = parse_mode(o.mode);
  if (!o.fusion.empty()) cfg.refinement.fusion = parse_fusion(o.fusion);
  if (!o.orientation.empty()) cfg.refinement.orientation = parse_orientation(o.orientation);
  if (o.tau_unc) cfg.refinement.tau_unc = *o.tau_unc;
  if (o.threads) cfg.threads = *o.threads;
  cfg.validate();
  return cfg;
}

SyntheticScene load_scene(const std::string& path) {
  try {
    return scene_from_json(read_json(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Input) throw Error(ErrorKind::Input, path + ": " + e.what());
    throw;
  }
}

std::vector<CameraFrame> load_trajectory(const std::string& path) {
  try {
    return trajectory_from_json(read_json(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Input) throw Error(ErrorKind::Input, path + ": " + e.what());
    throw;
  }
}

void write_text(const std::string& path, const std::string& text) { write_file(path, text); }

struct RunOutputs {
  std::string report;
  std::string save_memory;
  std::string load_memory;
  std::string export_ply;
  std::string save_grid;
  std::string save_gt;
  bool timing = false;
};

void add_outputs(CLI::App* cmd, RunOutputs& o, bool memory_io) {
  cmd->add_option("--report", o.report, "Write the run report as JSON");
  cmd->add_option("--export-ply", o.export_ply, "Write predicted voxels as PLY");
  cmd->add_option("--save-grid", o.save_grid, "Write the predicted grid (binary)");
  cmd->add_option("--save-gt", o.save_gt, "Write the ground-truth grid (binary)");
  cmd->add_flag("--timing", o.timing, "Include wall time in the report");
  if (memory_io) {
    cmd->add_option("--save-memory", o.save_memory, "Write a memory checkpoint");
    cmd->add_option("--load-memory", o.load_memory, "Start from a memory checkpoint");
  }
}

void emit_outputs(const RunResult& res, const RunOutputs& o, const PipelineConfig& cfg,
                  const Eigen::Isometry3d& grid_to_world) {
  if (!o.report.empty())
    write_text(o.report, report_to_json(res.report, o.timing).dump(2) + "\n");
  if (!o.save_memory.empty())
    write_file(o.save_memory, encode_memory(res.memory, config_hash(cfg)));
  if (!o.export_ply.empty()) write_file(o.export_ply, encode_ply(res.prediction, grid_to_world));
  if (!o.save_grid.empty()) write_file(o.save_grid, encode_grid(res.prediction, true));
  if (!o.save_gt.empty()) write_file(o.save_gt, encode_grid(res.ground_truth, false));
}

std::string run_label(const RunReport& r) {
  return std::string(to_string(r.mode)) + "/" + std::string(to_string(r.fusion));
}

}  // namespace

int run_app(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semantic-Gaussian occupancy simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "gsocc 1.0");

  // gen-scene
  auto* gen = app.add_subcommand("gen-scene", "Write a scene JSON");
  std::optional<std::uint64_t> gen_seed;
  std::string gen_spec, gen_out;
  std::vector<double> gen_empty;
  auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "Procedural room from a seed");
  auto* gen_spec_opt = gen->add_option("--spec", gen_spec, "Validate and normalize a scene JSON");
  auto* gen_empty_opt =
      gen->add_option("--empty-room", gen_empty, "Empty room with dims lx ly lz")->expected(3);
  gen_seed_opt->excludes(gen_spec_opt)->excludes(gen_empty_opt);
  gen_spec_opt->excludes(gen_empty_opt);
  gen->add_option("--out", gen_out, "Output path")->required();

  // gen-trajectory
  auto* traj = app.add_subcommand("gen-trajectory", "Write an orbit trajectory JSON");
  std::string traj_scene, traj_out;
  OrbitParams orbit;
  traj->add_option("--scene", traj_scene, "Scene JSON (room extent)")->required();
  traj->add_option("--frames", orbit.frames, "Frame count")
      ->capture_default_str()
      ->check(CLI::Range(1, 1000000));
  traj->add_option("--arc", orbit.arc_degrees, "Arc in degrees")->capture_default_str();
  traj->add_option("--start", orbit.start_degrees, "Start yaw in degrees")->capture_default_str();
  traj->add_option("--radius", orbit.radius, "Orbit radius (m)")->capture_default_str();
  traj->add_option("--height", orbit.height, "Camera height (m)")->capture_default_str();
  traj->add_option("--pitch", orbit.pitch_degrees, "Pitch in degrees")->capture_default_str();
  bool outward = false;
  traj->add_flag("--outward", outward, "Look away from the room center");
  traj->add_option("--out", traj_out, "Output path")->required();

  // render-cues
  auto* cues = app.add_subcommand("render-cues", "Render cue maps for one frame");
  std::string cues_scene, cues_traj, cues_out;
  int cues_frame = 0;
  cues->add_option("--scene", cues_scene, "Scene JSON")->required();
  cues->add_option("--trajectory", cues_traj, "Trajectory JSON")->required();
  cues->add_option("--frame", cues_frame, "Frame index")->capture_default_str();
  cues->add_option("--out", cues_out, "Output stem (.json + .bin)")->required();

  // run-embodied
  auto* emb = app.add_subcommand("run-embodied", "Full pipeline over a trajectory");
  std::string emb_scene, emb_traj;
  CommonOptions emb_common;
  RunOutputs emb_out;
  emb->add_option("--scene", emb_scene, "Scene JSON")->required();
  emb->add_option("--trajectory", emb_traj, "Trajectory JSON")->required();
  add_common(emb, emb_common);
  add_outputs(emb, emb_out, true);

  // run-local
  auto* loc = app.add_subcommand("run-local", "Single-frame prediction in the frustum grid");
  std::string loc_scene, loc_traj;
  int loc_frame = 0, loc_rounds = 1;
  CommonOptions loc_common;
  RunOutputs loc_out;
  loc->add_option("--scene", loc_scene, "Scene JSON")->required();
  loc->add_option("--trajectory", loc_traj, "Trajectory JSON")->required();
  loc->add_option("--frame", loc_frame, "Frame index")->capture_default_str();
  loc->add_option("--rounds", loc_rounds, "Refinement rounds K")
      ->capture_default_str()
      ->check(CLI::Range(1, 1000000));
  add_common(loc, loc_common);
  add_outputs(loc, loc_out, true);

  // ablate-fusion
  auto* abl = app.add_subcommand("ablate-fusion", "Run every fusion strategy");
  std::string abl_scene, abl_traj, abl_report;
  CommonOptions abl_common;
  abl->add_option("--scene", abl_scene, "Scene JSON")->required();
  abl->add_option("--trajectory", abl_traj, "Trajectory JSON")->required();
  abl->add_option("--report", abl_report, "Write all rows as JSON");
  add_common(abl, abl_common);

  // eval
  auto* ev = app.add_subcommand("eval", "IoU and mIoU of two grids");
  std::string ev_pred, ev_gt, ev_report;
  ev->add_option("--pred", ev_pred, "Predicted grid")->required();
  ev->add_option("--gt", ev_gt, "Ground-truth grid")->required();
  ev->add_option("--report", ev_report, "Write the result as JSON");

  // print-config
  auto* pc = app.add_subcommand("print-config", "Print the effective configuration");
  CommonOptions pc_common;
  add_common(pc, pc_common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen) {
      SyntheticScene scene;
      if (gen_seed)
        scene = generate_scene(*gen_seed);
      else if (!gen_spec.empty())
        scene = load_scene(gen_spec);
      else if (!gen_empty.empty())
        try {
          scene = empty_room(Vec3(gen_empty[0], gen_empty[1], gen_empty[2]));
        } catch (const Error& e) {
          throw Error(ErrorKind::Input, std::string("invalid scene: ") + e.what());
        }
      else
        throw Error(ErrorKind::Config, "gen-scene needs --seed, --spec or --empty-room");
      write_text(gen_out, scene_to_json(scene).dump(2) + "\n");
      out << "wrote " << gen_out << ": " << scene.objects.size() << " objects, "
          << surfaces(scene).size() << " surfaces\n";
    } else if (*traj) {
      const auto scene = load_scene(traj_scene);
      orbit.inward = !outward;
      if (orbit.frames < 1) throw Error(ErrorKind::Config, "--frames must be >= 1");
      const auto frames = orbit_trajectory(scene.room, orbit);
      write_text(traj_out, trajectory_to_json(frames).dump(2) + "\n");
      out << "wrote " << traj_out << ": " << frames.size() << " poses\n";
    } else if (*cues) {
      const auto scene = load_scene(cues_scene);
      const auto frames = load_trajectory(cues_traj);
      if (cues_frame < 0 || static_cast<std::size_t>(cues_frame) >= frames.size())
        throw Error(ErrorKind::Input, "--frame out of range");
      const auto rendered = render_cues(scene, frames[static_cast<std::size_t>(cues_frame)]);
      write_cues(cues_out, rendered.cues);
      out << "wrote " << cues_out << ".json/.bin: " << rendered.cloud.size()
          << " surface pixels\n";
    } else if (*emb) {
      const auto cfg = resolve_config(emb_common);
      const auto scene = load_scene(emb_scene);
      const auto frames = load_trajectory(emb_traj);
      std::optional<GaussianMemory> initial;
      if (!emb_out.load_memory.empty()) {
        std::uint64_t stored = 0;
        initial = decode_memory(read_file(emb_out.load_memory), &stored);
        if (stored != config_hash(cfg))
          err << "warning: checkpoint was written with config " << hex64(stored)
              << ", running with " << hex64(config_hash(cfg)) << "\n";
      }
      const auto res = run_embodied(scene, frames, cfg, initial ? &*initial : nullptr);
      emit_outputs(res, emb_out, cfg, Eigen::Isometry3d::Identity());
      out << format_table({{run_label(res.report), res.report.eval, false}});
    } else if (*loc) {
      const auto cfg = resolve_config(loc_common);
      const auto scene = load_scene(loc_scene);
      const auto frames = load_trajectory(loc_traj);
      if (loc_frame < 0 || static_cast<std::size_t>(loc_frame) >= frames.size())
        throw Error(ErrorKind::Input, "--frame out of range");
      if (!loc_out.load_memory.empty())
        throw Error(ErrorKind::Config, "run-local starts from a fresh frustum lattice");
      const auto& frame = frames[static_cast<std::size_t>(loc_frame)];
      const auto res = run_local(scene, frame, cfg, loc_rounds);
      emit_outputs(res, loc_out, cfg, local_grid_to_world(frame));
      out << format_table({{run_label(res.report), res.report.eval, false}});
    } else if (*abl) {
      const auto base = resolve_config(abl_common);
      const auto scene = load_scene(abl_scene);
      const auto frames = load_trajectory(abl_traj);
      std::vector<TableRow> rows;
      ordered_json all = ordered_json::array();
      for (FusionStrategy s : kAllFusionStrategies) {
        PipelineConfig cfg = base;
        cfg.refinement.fusion = s;
        const auto res = run_embodied(scene, frames, cfg);
        const bool is_default = s == FusionStrategy::Product;
        rows.push_back({std::string(to_string(s)), res.report.eval, is_default});
        ordered_json row;
        row["strategy"] = std::string(to_string(s));
        row["default"] = is_default;
        row["report"] = report_to_json(res.report);
        all.push_back(row);
      }
      if (!abl_report.empty()) write_text(abl_report, all.dump(2) + "\n");
      out << format_table(rows) << "* default strategy\n";
    } else if (*ev) {
      const auto pred = decode_grid(read_file(ev_pred));
      const auto gt = decode_grid(read_file(ev_gt));
      if (!(pred.spec == gt.spec))
        throw Error(ErrorKind::Input, "grids differ in origin, dims or voxel size");
      EvalReport e;
      e.iou = scene_iou(pred, gt);
      const auto m = miou(pred, gt);
      e.per_class_iou = m.per_class;
      e.miou = m.mean;
      ordered_json j;
      j["iou"] = e.iou;
      j["miou"] = e.miou;
      j["per_class_iou"] = eval_to_json(e)["per_class_iou"];
      if (!ev_report.empty()) write_text(ev_report, j.dump(2) + "\n");
      out << j.dump(2) << "\n";
    } else if (*pc) {
      const auto cfg = resolve_config(pc_common);
      out << "; config_hash = " << hex64(config_hash(cfg)) << "\n" << to_ini(cfg);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::Config: return kExitConfig;
      case ErrorKind::Input:
      case ErrorKind::Domain: return kExitInput;
      default: return kExitInternal;
    }
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace gsocc
