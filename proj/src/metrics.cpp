#include "gsocc/metrics.hpp"

#include <cmath>
#include <limits>

namespace gsocc {
namespace {

void require_same_spec(const VoxelGrid& pred, const VoxelGrid& gt) {
  if (!(pred.spec == gt.spec) || pred.labels.size() != gt.labels.size())
    throw Error(ErrorKind::Domain, "prediction and ground truth grids differ in layout");
}

}  // namespace

double scene_iou(const VoxelGrid& pred, const VoxelGrid& gt) {
  require_same_spec(pred, gt);
  long long tp = 0, fp = 0, fn = 0;
  for (std::size_t v = 0; v < pred.labels.size(); ++v) {
    const bool p = pred.labels[v] != 0;
    const bool g = gt.labels[v] != 0;
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  const long long uni = tp + fp + fn;
  return uni == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(uni);
}

ClassIou miou(const VoxelGrid& pred, const VoxelGrid& gt) {
  require_same_spec(pred, gt);
  std::array<long long, kNumClasses> tp{}, fp{}, fn{};
  for (std::size_t v = 0; v < pred.labels.size(); ++v) {
    const int p = pred.labels[v];
    const int g = gt.labels[v];
    if (p == g) {
      ++tp[static_cast<std::size_t>(p)];
    } else {
      ++fp[static_cast<std::size_t>(p)];
      ++fn[static_cast<std::size_t>(g)];
    }
  }
  ClassIou out;
  double sum = 0.0;
  int defined = 0;
  for (int c = 1; c < kNumClasses; ++c) {
    const auto uc = static_cast<std::size_t>(c);
    const long long uni = tp[uc] + fp[uc] + fn[uc];
    if (uni == 0) continue;
    const double iou = static_cast<double>(tp[uc]) / static_cast<double>(uni);
    out.per_class[uc - 1] = iou;
    sum += iou;
    ++defined;
  }
  out.mean = defined == 0 ? 0.0 : sum / defined;
  return out;
}

double out_of_plane_drift(std::span<const SemanticGaussian> gaussians,
                          const SyntheticScene& scene, double voxel_size) {
  const auto faces = surfaces(scene);
  double sum_sq = 0.0;
  long long n = 0;
  for (const auto& g : gaussians) {
    int near_faces = 0;
    std::size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < faces.size(); ++f) {
      const double d = faces[f].distance(g.mean);
      if (d <= 2.0 * voxel_size) ++near_faces;
      if (d < best) {
        best = d;
        nearest = f;
      }
    }
    if (best > voxel_size || near_faces >= 2) continue;
    const double s = faces[nearest].signed_distance(g.mean);
    sum_sq += s * s;
    ++n;
  }
  return n == 0 ? 0.0 : std::sqrt(sum_sq / static_cast<double>(n));
}

}  // namespace gsocc
