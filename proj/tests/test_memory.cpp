#include "gsocc/io.hpp"
#include "gsocc/memory.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace gsocc;
using gsocc::testing::Gen;

namespace {

PipelineConfig quiet() {
  PipelineConfig cfg;
  cfg.proposal.sigma_pos = 0.0;
  cfg.proposal.sigma_sem = 0.0;
  cfg.proposal.sigma_scale = 0.0;
  cfg.proposal.sigma_opacity = 0.0;
  cfg.proposal.sigma_rot = 0.0;
  return cfg;
}

std::vector<CameraFrame> arc(const Box& room, int frames, double degrees) {
  OrbitParams p;
  p.frames = frames;
  p.arc_degrees = degrees;
  return orbit_trajectory(room, p);
}

}  // namespace

TEST_CASE("lattice over a 1.6 m cube") {
  const auto mem = init_memory(Box{Vec3::Zero(), Vec3::Constant(1.6)}, 0.16);
  CHECK(mem.size() == 1000);
  CHECK(mem.observations.size() == 1000);
  const auto& g = mem.gaussians.front();
  CHECK(g.scale == Vec3::Constant(0.08));
  CHECK(g.opacity == 0.1);
  CHECK(g.logits == Logits::Zero());
  CHECK(g.fixed_weight == 0.5);
  CHECK(g.rotation.coeffs() == Quat::Identity().coeffs());
  CHECK((g.mean - Vec3::Constant(0.08)).norm() < 1e-12);
  for (std::size_t i = 0; i < mem.size(); ++i) {
    CHECK(mem.gaussians[i].id == static_cast<std::int64_t>(i));
    CHECK_NOTHROW(check_invariants(mem.gaussians[i]));
  }
}

TEST_CASE("bounds smaller than the interval hold one centered Gaussian") {
  const auto mem = init_memory(Box{Vec3(1, 1, 1), Vec3(1.1, 1.05, 1.02)}, 0.16);
  REQUIRE(mem.size() == 1);
  CHECK((mem.gaussians[0].mean - Vec3(1.05, 1.025, 1.01)).norm() < 1e-12);
}

TEST_CASE("degenerate bounds are rejected") {
  CHECK_THROWS_AS(init_memory(Box{Vec3::Zero(), Vec3(1, 0, 1)}, 0.16), Error);
  CHECK_THROWS_AS(init_memory(Box{Vec3::Zero(), Vec3::Ones()}, 0.0), Error);
}

TEST_CASE("padded memory bounds put lattice nodes on the room faces") {
  const Box room{Vec3::Zero(), Vec3(3.2, 3.2, 2.56)};
  const auto mem = init_memory(memory_bounds_for(room, 0.16), 0.16);
  CHECK(mem.size() == 21u * 21u * 17u);
  CHECK(mem.gaussians.front().mean.norm() < 1e-12);
  CHECK((mem.gaussians.back().mean - room.max).norm() < 1e-12);
}

TEST_CASE("proposals without noise are identical") {
  const auto scene = empty_room(Vec3(3, 3, 2.5));
  const auto faces = surfaces(scene);
  SemanticGaussian g;
  g.mean = Vec3(1.5, 1.5, 0.05);
  const auto p = synthetic_proposals(g, faces, quiet(), 0);
  REQUIRE(p.size() == 3);
  CHECK(p[0] == p[1]);
  CHECK(p[1] == p[2]);
  CHECK(p[0].d_mean.isApprox(Vec3(0, 0, -0.025)));
  CHECK(p[0].d_logits.maxCoeff() == p[0].d_logits[static_cast<int>(SemanticClass::Floor)]);
}

TEST_CASE("proposals are reproducible and keyed by observation") {
  const auto scene = generate_scene(4);
  const auto faces = surfaces(scene);
  PipelineConfig cfg;
  cfg.seed = 99;
  SemanticGaussian g;
  g.id = 17;
  g.mean = Vec3(0.1, 1.0, 1.0);
  CHECK(synthetic_proposals(g, faces, cfg, 3) == synthetic_proposals(g, faces, cfg, 3));
  CHECK_FALSE(synthetic_proposals(g, faces, cfg, 3) == synthetic_proposals(g, faces, cfg, 4));
  cfg.seed = 100;
  const auto other = synthetic_proposals(g, faces, cfg, 3);
  cfg.seed = 99;
  CHECK_FALSE(other == synthetic_proposals(g, faces, cfg, 3));
}

TEST_CASE("far-from-surface Gaussians are pushed toward free space") {
  const auto scene = empty_room(Vec3(3, 3, 2.5));
  SemanticGaussian g;
  g.mean = Vec3(1.5, 1.5, 1.2);
  const auto p = synthetic_proposals(g, surfaces(scene), quiet(), 0);
  CHECK(p[0].d_mean == Vec3::Zero());
  CHECK(p[0].d_opacity < 0.0);
  Eigen::Index best;
  p[0].d_logits.maxCoeff(&best);
  CHECK(best == 0);
}

TEST_CASE("a camera that sees no Gaussian leaves memory unchanged") {
  const auto scene = empty_room(Vec3(3, 3, 2.5));
  auto mem = init_memory(memory_bounds_for(scene.room, 0.16), 0.16);
  const auto before = mem.gaussians;
  const auto f = CameraFrame::look_at(Vec3(-1, 1.5, 1.2), Vec3(-5, 1.5, 1.2), Intrinsics{});
  const auto s = update_frame(mem, f, scene, PipelineConfig{}, 0);
  CHECK(s.visible == 0);
  CHECK(s.updated == 0);
  CHECK(mem.gaussians == before);
}

TEST_CASE("fixed-weight mode never skips") {
  const auto scene = generate_scene(5);
  PipelineConfig cfg;
  cfg.mode = UpdateMode::FixedWeight;
  auto mem = init_memory(memory_bounds_for(scene.room, 0.16), 0.16);
  const auto stats = run_sequence(mem, scene, arc(scene.room, 8, 40), cfg);
  for (const auto& s : stats) {
    CHECK(s.skipped == 0);
    CHECK(s.updated == s.visible);
  }
}

TEST_CASE("skipped and invisible Gaussians are bit-identical after a frame") {
  const auto scene = generate_scene(6);
  PipelineConfig cfg;
  cfg.seed = 3;
  auto mem = init_memory(memory_bounds_for(scene.room, 0.16), 0.16);
  const auto frames = arc(scene.room, 6, 20);
  run_sequence(mem, scene, std::span(frames).first(5), cfg);
  const auto before = mem.gaussians;
  const auto& f = frames[5];
  const auto s = update_frame(mem, f, scene, cfg, 5);
  REQUIRE(s.skipped > 0);
  int unchanged_visible = 0;
  for (std::size_t i = 0; i < mem.size(); ++i) {
    if (!is_visible(f, before[i])) {
      CHECK(mem.gaussians[i] == before[i]);
    } else if (mem.gaussians[i] == before[i]) {
      ++unchanged_visible;
    }
  }
  CHECK(unchanged_visible >= s.skipped);
  CHECK(s.visible == s.updated + s.skipped);
}

TEST_CASE("a settled Gaussian is skipped in later frames") {
  const auto scene = empty_room(Vec3(3, 3, 2.5));
  const auto cfg = quiet();
  GaussianMemory mem;
  mem.bounds = memory_bounds_for(scene.room, 0.16);
  SemanticGaussian g;
  g.mean = Vec3(1.5, 2.0, 0.0);
  mem.gaussians = {g};
  mem.observations = {0};
  const auto f = CameraFrame::look_at(Vec3(1.5, 0.5, 1.5), Vec3(1.5, 2.0, 0.0), Intrinsics{});
  std::vector<FrameStats> log;
  for (int t = 0; t < 12; ++t) log.push_back(update_frame(mem, f, scene, cfg, t));
  CHECK(log.front().updated == 1);
  CHECK(log.back().skipped == 1);
  CHECK(std::abs(mem.gaussians[0].mean.z()) < 1e-12);
}

TEST_CASE("SUS needs fewer updates than the fixed-weight baseline") {
  const auto scene = generate_scene(8);
  const auto frames = arc(scene.room, 10, 20);
  PipelineConfig sus;
  sus.seed = 1;
  PipelineConfig fixed = sus;
  fixed.mode = UpdateMode::FixedWeight;
  auto a = init_memory(memory_bounds_for(scene.room, 0.16), 0.16);
  auto b = a;
  run_sequence(a, scene, frames, sus);
  run_sequence(b, scene, frames, fixed);
  long long ua = 0, ub = 0, skips = 0;
  for (const auto& s : a.log) {
    ua += s.updated;
    skips += s.skipped;
  }
  for (const auto& s : b.log) ub += s.updated;
  CHECK(skips > 0);
  CHECK(ua < ub);
}

TEST_CASE("memory size is constant and unobserved Gaussians keep their initial state") {
  const auto scene = generate_scene(9);
  const auto frames = arc(scene.room, 5, 30);
  auto mem = init_memory(memory_bounds_for(scene.room, 0.16), 0.16);
  const auto init = mem.gaussians;
  run_sequence(mem, scene, frames, PipelineConfig{});
  REQUIRE(mem.size() == init.size());
  int untouched = 0;
  for (std::size_t i = 0; i < mem.size(); ++i) {
    const bool seen = std::any_of(frames.begin(), frames.end(),
                                  [&](const CameraFrame& f) { return is_visible(f, init[i]); });
    if (!seen) {
      CHECK(mem.gaussians[i] == init[i]);
      CHECK(mem.observations[i] == 0);
      ++untouched;
    }
  }
  CHECK(untouched > 0);
}

TEST_CASE("reordering frames with disjoint views gives the same memory") {
  const auto scene = generate_scene(10);
  const Vec3 c = scene.room.center();
  const auto a = CameraFrame::look_at(Vec3(c.x(), c.y(), 1.4), Vec3(c.x() + 3, c.y(), 1.0),
                                      Intrinsics{});
  const auto b = CameraFrame::look_at(Vec3(c.x(), c.y(), 1.4), Vec3(c.x() - 3, c.y(), 1.0),
                                      Intrinsics{});
  auto m1 = init_memory(memory_bounds_for(scene.room, 0.16), 0.16);
  auto m2 = m1;
  for (const auto& g : m1.gaussians) REQUIRE_FALSE((is_visible(a, g) && is_visible(b, g)));
  PipelineConfig cfg;
  cfg.seed = 12;
  const std::vector<CameraFrame> ab = {a, b}, ba = {b, a};
  run_sequence(m1, scene, ab, cfg);
  run_sequence(m2, scene, ba, cfg);
  CHECK(m1.log[0].visible > 0);
  CHECK(m1.log[1].visible > 0);
  CHECK(m1.gaussians == m2.gaussians);
  CHECK(m1.observations == m2.observations);
}

TEST_CASE("updates do not depend on the thread count") {
  const auto scene = generate_scene(11);
  const auto frames = arc(scene.room, 4, 40);
  PipelineConfig cfg;
  cfg.seed = 5;
  auto m1 = init_memory(memory_bounds_for(scene.room, 0.16), 0.16);
  auto m4 = m1;
  run_sequence(m1, scene, frames, cfg);
  cfg.threads = 4;
  run_sequence(m4, scene, frames, cfg);
  CHECK(m1.gaussians == m4.gaussians);
  CHECK(m1.log == m4.log);
}

TEST_CASE("updated means stay inside the memory bounds") {
  const auto scene = generate_scene(12);
  PipelineConfig cfg;
  cfg.mode = UpdateMode::Unconstrained;
  cfg.proposal.sigma_pos = 0.3;
  auto mem = init_memory(memory_bounds_for(scene.room, 0.16), 0.16);
  run_sequence(mem, scene, arc(scene.room, 5, 60), cfg);
  for (const auto& g : mem.gaussians) {
    CHECK(mem.bounds.contains(g.mean));
    CHECK_NOTHROW(check_invariants(g));
  }
}

TEST_CASE("frustum grid is 60 x 60 x 36") {
  const CameraFrame f;
  CHECK(local_grid_spec(f, 0.08).dims == std::array<int, 3>{60, 60, 36});
}

TEST_CASE("local mode needs at least one round") {
  const auto scene = generate_scene(13);
  const auto frames = orbit_trajectory(scene.room, {});
  CHECK_THROWS_AS(run_local(scene, frames[0], PipelineConfig{}, 0), Error);
}

TEST_CASE("local mode with one round is a single ungated frame") {
  const auto scene = generate_scene(14);
  const auto frames = orbit_trajectory(scene.room, {});
  PipelineConfig cfg;
  cfg.seed = 8;
  const auto res = run_local(scene, frames[3], cfg, 1);
  auto mem = init_frustum_memory(frames[3], cfg);
  run_sequence(mem, scene, std::span(frames).subspan(3, 1), cfg, true);
  CHECK(res.memory.gaussians == mem.gaussians);
  CHECK(res.report.frames.size() == 1);
  CHECK(res.report.frames[0].updated == res.report.frames[0].visible);
  CHECK(res.prediction.spec.dims == std::array<int, 3>{60, 60, 36});
}

TEST_CASE("more local rounds do not lower IoU without noise") {
  const auto scene = generate_scene(15);
  const auto frames = orbit_trajectory(scene.room, {});
  const auto cfg = quiet();
  const double iou1 = run_local(scene, frames[0], cfg, 1).report.eval.iou;
  const double iou6 = run_local(scene, frames[0], cfg, 6).report.eval.iou;
  MESSAGE("local IoU K=1: " << iou1 << ", K=6: " << iou6);
  CHECK(iou6 >= iou1);
}

TEST_CASE("embodied runs are reproducible") {
  const auto scene = generate_scene(16);
  const auto frames = arc(scene.room, 4, 40);
  PipelineConfig cfg;
  cfg.seed = 21;
  const auto a = run_embodied(scene, frames, cfg);
  const auto b = run_embodied(scene, frames, cfg);
  CHECK(report_to_json(a.report).dump() == report_to_json(b.report).dump());
  CHECK(encode_memory(a.memory, 1) == encode_memory(b.memory, 1));
  CHECK(a.prediction.labels == b.prediction.labels);
}

TEST_CASE("a single-frame trajectory runs") {
  const auto scene = generate_scene(17);
  const auto frames = arc(scene.room, 1, 10);
  const auto res = run_embodied(scene, frames, PipelineConfig{});
  CHECK(res.report.frames.size() == 1);
  CHECK(res.report.eval.updates_per_frame.size() == 1);
  CHECK(res.report.eval.iou >= 0.0);
}
