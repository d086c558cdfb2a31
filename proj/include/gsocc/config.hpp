#pragma once

#include "gsocc/core.hpp"
#include "gsocc/splat.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace gsocc {

/// How visible Gaussians are written back to memory.
enum class UpdateMode {
  Sus,            // entropy gate + entropy-weighted blend, GRM-constrained
  FixedWeight,    // every visible Gaussian blended with its fixed weight, no GRM
  Unconstrained,  // entropy gate + blend, constraint weight forced to 0
};

/// Reading of the blended update. State blends the old Gaussian with the
/// fully refined one; Residual applies the residual scaled by the ratio.
enum class BlendReading { State, Residual };

std::string_view to_string(UpdateMode m);
std::string_view to_string(BlendReading b);
UpdateMode parse_mode(std::string_view s);
BlendReading parse_blend(std::string_view s);

/// Parameters of the synthetic proposal source that stands in for the
/// prediction network.
struct ProposalConfig {
  double step = 0.5;             // fraction of the way to the target surface point
  double sigma_pos = 0.02;       // m, per-axis position noise
  double sigma_sem = 0.5;        // per-logit noise
  double sem_target = 6.0;       // target logit of the true class
  double sem_step = 0.5;         // fraction of the way to the target logits
  double scale_step = 0.5;
  double sigma_scale = 0.002;    // m
  double opacity_step = 0.5;
  double sigma_opacity = 0.02;
  double target_opacity = 0.8;
  double sigma_rot = 0.02;       // rad, axis-angle jitter
  double capture_radius = 0.12;  // m; farther Gaussians are treated as free space
};

struct PipelineConfig {
  RefinementConfig refinement;
  ProposalConfig proposal;
  SplatParams splat{.certify = false};
  UpdateMode mode = UpdateMode::Sus;
  BlendReading blend = BlendReading::State;
  double fixed_weight = 0.5;
  double init_opacity = 0.1;
  std::uint64_t seed = 0;
  int threads = 1;  // 0 = hardware concurrency; never affects results

  /// Throws Error(Config).
  void validate() const;
};

/// Key-value text with [section] headers. Every key is optional; unknown
/// sections or keys are rejected with Error(Config).
PipelineConfig parse_config(std::string_view text);
PipelineConfig load_config(const std::string& path);

/// Canonical text form listing every key. parse_config(to_ini(c)) == c.
std::string to_ini(const PipelineConfig& cfg);

/// FNV-1a 64 over the canonical text, excluding the thread count.
std::uint64_t config_hash(const PipelineConfig& cfg);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace gsocc
