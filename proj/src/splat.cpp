#include "gsocc/splat.hpp"

#include "gsocc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gsocc {
namespace {

constexpr int kSemanticChannels = kNumClasses - 1;  // channel 0 excluded

struct Prepared {
  Vec3 mean;
  Mat3 precision;  // Sigma^-1
  double opacity;
  Logits logits;
  Vec3 half_extent;  // axis-aligned bound of the cutoff ellipsoid
};

Prepared prepare(const SemanticGaussian& g, double cutoff_sigma) {
  const Mat3 r = g.rotation.normalized().toRotationMatrix();
  const Vec3 s = g.scale.cwiseMax(kScaleFloor);
  const Vec3 inv_s2 = s.cwiseProduct(s).cwiseInverse();
  Mat3 precision = r * inv_s2.asDiagonal() * r.transpose();
  precision = 0.5 * (precision + precision.transpose());
  const Mat3 sigma = covariance(g);
  Vec3 half;
  for (int a = 0; a < 3; ++a) half[a] = cutoff_sigma * std::sqrt(sigma(a, a));
  return {g.mean, precision, g.opacity, g.logits, half};
}

// Shared by both splatting paths.
inline double mahalanobis_sq(const Prepared& p, const Vec3& v) {
  const Vec3 d = v - p.mean;
  return d.dot(p.precision * d);
}

std::vector<Prepared> prepare_sorted(std::span<const SemanticGaussian> gaussians,
                                     double cutoff_sigma) {
  std::vector<std::size_t> order(gaussians.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return gaussians[a].id < gaussians[b].id;
  });
  std::vector<Prepared> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back(prepare(gaussians[i], cutoff_sigma));
  return out;
}

using Scores = std::vector<double>;  // kSemanticChannels per voxel

inline void accumulate(VoxelGrid& grid, Scores& scores, std::size_t voxel,
                       const Prepared& p, double m2) {
  const double a = p.opacity * std::exp(-0.5 * m2);
  grid.density[voxel] += a;
  double* s = &scores[voxel * kSemanticChannels];
  for (int c = 0; c < kSemanticChannels; ++c) s[c] += a * p.logits[c + 1];
}

// Largest factor a term is multiplied by in any channel, density included.
inline double weight_scale(const Prepared& p) {
  return std::max(1.0, p.logits.tail(kSemanticChannels).cwiseAbs().maxCoeff());
}

void assign_labels(VoxelGrid& grid, const Scores& scores, double occ_threshold) {
  for (std::size_t v = 0; v < grid.labels.size(); ++v) {
    if (grid.density[v] < occ_threshold) {
      grid.labels[v] = 0;
      continue;
    }
    const double* s = &scores[v * kSemanticChannels];
    int best = 0;
    for (int c = 1; c < kSemanticChannels; ++c) {
      if (s[c] > s[best]) best = c;
    }
    grid.labels[v] = static_cast<std::uint8_t>(best + 1);
  }
}

// Mahalanobis radius out to which truncated terms are tracked for certification.
inline double certify_sigma(double cutoff_sigma) { return std::max(6.0, cutoff_sigma + 2.0); }

// Voxels whose label could differ from the untruncated sums are recomputed
// over every Gaussian in id order, which reproduces the reference bits.
// tail[v] bounds what truncation dropped out to certify_sigma; beyond it a
// global residual applies.
void certify_labels(VoxelGrid& grid, Scores& scores, const std::vector<double>& tail,
                    const std::vector<Prepared>& prepared, double occ_threshold,
                    double cutoff_sigma, int threads) {
  const double r = certify_sigma(cutoff_sigma);
  double w_max = 0.0;
  for (const auto& p : prepared) w_max = std::max(w_max, p.opacity * weight_scale(p));
  const double residual =
      static_cast<double>(prepared.size()) * w_max * std::exp(-0.5 * r * r) + 1e-9;
  const auto& spec = grid.spec;

  auto ambiguous = [&](std::size_t v) {
    const double margin = tail[v] + residual;
    if (std::abs(grid.density[v] - occ_threshold) <= margin) return true;
    if (grid.density[v] < occ_threshold) return false;
    const double* s = &scores[v * kSemanticChannels];
    double first = -std::numeric_limits<double>::infinity(), second = first;
    for (int c = 0; c < kSemanticChannels; ++c) {
      if (s[c] > first) {
        second = first;
        first = s[c];
      } else if (s[c] > second) {
        second = s[c];
      }
    }
    return first - second <= 2.0 * margin;
  };

  parallel_for(static_cast<std::size_t>(spec.dims[2]), threads,
               [&](std::size_t z_begin, std::size_t z_end) {
    for (int k = static_cast<int>(z_begin); k < static_cast<int>(z_end); ++k) {
      for (int j = 0; j < spec.dims[1]; ++j) {
        for (int i = 0; i < spec.dims[0]; ++i) {
          const auto idx = spec.index(i, j, k);
          if (!ambiguous(idx)) continue;
          grid.density[idx] = 0.0;
          std::fill_n(&scores[idx * kSemanticChannels], kSemanticChannels, 0.0);
          const Vec3 v = spec.center(i, j, k);
          for (const auto& p : prepared) accumulate(grid, scores, idx, p, mahalanobis_sq(p, v));
        }
      }
    }
  });
}

void check_params(const GridSpec& spec, double occ_threshold) {
  spec.validate();
  if (!(occ_threshold > 0.0))
    throw Error(ErrorKind::Domain, "occupancy threshold must be positive");
}

}  // namespace

void GridSpec::validate() const {
  if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0)
    throw Error(ErrorKind::Domain, "grid dims must be positive");
  if (!(voxel_size > 0.0)) throw Error(ErrorKind::Domain, "voxel size must be positive");
}

GridSpec GridSpec::covering(const Box& box, double voxel_size) {
  GridSpec spec;
  spec.origin = box.min;
  spec.voxel_size = voxel_size;
  for (int a = 0; a < 3; ++a) {
    const double cells = box.extent()[a] / voxel_size;
    spec.dims[static_cast<std::size_t>(a)] =
        std::max(1, static_cast<int>(std::ceil(cells - 1e-9)));
  }
  return spec;
}

std::size_t VoxelGrid::occupied_count() const {
  return static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](auto l) { return l != 0; }));
}

VoxelGrid splat(std::span<const SemanticGaussian> gaussians, const GridSpec& spec,
                const SplatParams& params, int threads) {
  check_params(spec, params.occ_threshold);
  if (!(params.cutoff_sigma >= 3.0))
    throw Error(ErrorKind::Domain, "cutoff_sigma must be >= 3");

  VoxelGrid grid(spec);
  Scores scores(spec.count() * kSemanticChannels, 0.0);
  const auto prepared = prepare_sorted(gaussians, params.cutoff_sigma);
  const double cutoff_sq = params.cutoff_sigma * params.cutoff_sigma;

  auto voxel_range = [&](double lo, double hi, int axis) {
    const double o = spec.origin[axis];
    const double v = spec.voxel_size;
    const int n = spec.dims[static_cast<std::size_t>(axis)];
    // Voxel i is a candidate when its center lies in [lo, hi].
    double first = std::ceil((lo - o) / v - 0.5);
    double last = std::floor((hi - o) / v - 0.5);
    first = std::max(first, 0.0);
    last = std::min(last, static_cast<double>(n - 1));
    return std::pair<int, int>{static_cast<int>(first), static_cast<int>(last)};
  };

  const bool truncated = std::isfinite(params.cutoff_sigma);
  const double reach = truncated && params.certify ? certify_sigma(params.cutoff_sigma) / params.cutoff_sigma : 1.0;
  const double reach_sq = truncated && params.certify ? std::pow(certify_sigma(params.cutoff_sigma), 2) : cutoff_sq;
  const bool track_tail = truncated && params.certify;
  std::vector<double> tail(track_tail ? spec.count() : 0, 0.0);

  // One slab of z-layers per worker, Gaussians in id order.
  parallel_for(static_cast<std::size_t>(spec.dims[2]), threads,
               [&](std::size_t z_begin, std::size_t z_end) {
    for (const auto& p : prepared) {
      const Vec3 h = reach * p.half_extent;
      auto [i0, i1] = voxel_range(p.mean.x() - h.x(), p.mean.x() + h.x(), 0);
      auto [j0, j1] = voxel_range(p.mean.y() - h.y(), p.mean.y() + h.y(), 1);
      auto [k0, k1] = voxel_range(p.mean.z() - h.z(), p.mean.z() + h.z(), 2);
      k0 = std::max(k0, static_cast<int>(z_begin));
      k1 = std::min(k1, static_cast<int>(z_end) - 1);
      for (int k = k0; k <= k1; ++k) {
        for (int j = j0; j <= j1; ++j) {
          for (int i = i0; i <= i1; ++i) {
            const double m2 = mahalanobis_sq(p, spec.center(i, j, k));
            const auto idx = spec.index(i, j, k);
            if (m2 <= cutoff_sq) {
              accumulate(grid, scores, idx, p, m2);
            } else if (m2 <= reach_sq) {
              tail[idx] += p.opacity * std::exp(-0.5 * m2) * weight_scale(p);
            }
          }
        }
      }
    }
  });

  if (truncated && params.certify && !prepared.empty())
    certify_labels(grid, scores, tail, prepared, params.occ_threshold, params.cutoff_sigma,
                   threads);
  assign_labels(grid, scores, params.occ_threshold);
  return grid;
}

VoxelGrid brute_force_splat(std::span<const SemanticGaussian> gaussians,
                            const GridSpec& spec, double occ_threshold) {
  check_params(spec, occ_threshold);
  VoxelGrid grid(spec);
  Scores scores(spec.count() * kSemanticChannels, 0.0);
  const auto prepared = prepare_sorted(gaussians, kNoCutoff);
  for (int k = 0; k < spec.dims[2]; ++k) {
    for (int j = 0; j < spec.dims[1]; ++j) {
      for (int i = 0; i < spec.dims[0]; ++i) {
        const Vec3 v = spec.center(i, j, k);
        const auto idx = spec.index(i, j, k);
        for (const auto& p : prepared) accumulate(grid, scores, idx, p, mahalanobis_sq(p, v));
      }
    }
  }
  assign_labels(grid, scores, occ_threshold);
  return grid;
}

double truncation_bound(std::span<const SemanticGaussian> gaussians, double cutoff_sigma) {
  double o_max = 0.0;
  for (const auto& g : gaussians) o_max = std::max(o_max, g.opacity);
  return static_cast<double>(gaussians.size()) * o_max *
         std::exp(-0.5 * cutoff_sigma * cutoff_sigma);
}

std::vector<SemanticGaussian> transform_gaussians(std::span<const SemanticGaussian> gaussians,
                                                  const Eigen::Isometry3d& transform) {
  const Quat q(transform.linear());
  std::vector<SemanticGaussian> out(gaussians.begin(), gaussians.end());
  for (auto& g : out) {
    g.mean = transform * g.mean;
    g.rotation = canonical(q * g.rotation);
  }
  return out;
}

}  // namespace gsocc
