#include "gsocc/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace gsocc {
namespace {

constexpr long long kMaxCells = 1LL << 24;

struct Candidate {
  double dist_sq;
  std::size_t index;
  bool operator<(const Candidate& o) const {
    return dist_sq < o.dist_sq || (dist_sq == o.dist_sq && index < o.index);
  }
};

}  // namespace

UniformGridIndex::UniformGridIndex(std::vector<Vec3> points, double cell_size)
    : points_(std::move(points)), cell_size_(cell_size) {
  if (!(cell_size_ > 0.0)) throw Error(ErrorKind::Domain, "cell size must be positive");
  if (points_.empty()) return;

  Vec3 lo = points_.front();
  Vec3 hi = points_.front();
  for (const auto& p : points_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  origin_ = lo;
  auto compute_dims = [&] {
    long long total = 1;
    for (int a = 0; a < 3; ++a) {
      dims_[static_cast<std::size_t>(a)] =
          static_cast<long long>(std::floor((hi[a] - lo[a]) / cell_size_)) + 1;
      total *= dims_[static_cast<std::size_t>(a)];
    }
    return total;
  };
  while (compute_dims() > kMaxCells) cell_size_ *= 2.0;

  const auto cells = static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]);
  std::vector<std::size_t> cell_of_point(points_.size());
  cell_start_.assign(cells + 1, 0);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    auto c = cell_of(points_[i]);
    for (int a = 0; a < 3; ++a) {
      auto& v = c[static_cast<std::size_t>(a)];
      v = std::clamp(v, 0LL, dims_[static_cast<std::size_t>(a)] - 1);
    }
    const auto flat = static_cast<std::size_t>((c[2] * dims_[1] + c[1]) * dims_[0] + c[0]);
    cell_of_point[i] = flat;
    ++cell_start_[flat + 1];
  }
  for (std::size_t c = 0; c < cells; ++c) cell_start_[c + 1] += cell_start_[c];
  order_.resize(points_.size());
  std::vector<std::size_t> fill(cell_start_.begin(), cell_start_.end() - 1);
  for (std::size_t i = 0; i < points_.size(); ++i) order_[fill[cell_of_point[i]]++] = i;
}

std::array<long long, 3> UniformGridIndex::cell_of(const Vec3& p) const {
  std::array<long long, 3> c{};
  for (int a = 0; a < 3; ++a) {
    c[static_cast<std::size_t>(a)] =
        static_cast<long long>(std::floor((p[a] - origin_[a]) / cell_size_));
  }
  return c;
}

std::vector<Neighbor> UniformGridIndex::knn(const Vec3& q, int k, double max_radius) const {
  std::vector<Neighbor> result;
  if (points_.empty() || k < 1) return result;
  const auto kk = static_cast<std::size_t>(k);
  const auto c = cell_of(q);

  std::priority_queue<Candidate> best;  // max-heap: worst candidate on top
  auto visit_cell = [&](long long x, long long y, long long z) {
    const auto flat = static_cast<std::size_t>((z * dims_[1] + y) * dims_[0] + x);
    for (std::size_t s = cell_start_[flat]; s < cell_start_[flat + 1]; ++s) {
      const std::size_t idx = order_[s];
      const double d2 = (points_[idx] - q).squaredNorm();
      if (std::sqrt(d2) > max_radius) continue;
      const Candidate cand{d2, idx};
      if (best.size() < kk) {
        best.push(cand);
      } else if (cand < best.top()) {
        best.pop();
        best.push(cand);
      }
    }
  };

  // Rings closer than this cannot intersect the grid.
  long long start = 0;
  for (std::size_t a = 0; a < 3; ++a) {
    start = std::max({start, -c[a], c[a] - (dims_[a] - 1)});
  }

  for (long long ring = start;; ++ring) {
    if (ring > 0) {
      // Distance from q to the outside of the block of rings < ring.
      double bound = std::numeric_limits<double>::infinity();
      for (int a = 0; a < 3; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        const double lo = origin_[a] + static_cast<double>(c[ua] - ring + 1) * cell_size_;
        const double hi = origin_[a] + static_cast<double>(c[ua] + ring) * cell_size_;
        bound = std::min({bound, q[a] - lo, hi - q[a]});
      }
      bound -= 1e-12 * cell_size_;
      if (bound > max_radius) break;
      if (best.size() == kk && std::sqrt(best.top().dist_sq) <= bound) break;
    }

    const long long x0 = std::max(c[0] - ring, 0LL), x1 = std::min(c[0] + ring, dims_[0] - 1);
    const long long y0 = std::max(c[1] - ring, 0LL), y1 = std::min(c[1] + ring, dims_[1] - 1);
    const long long z0 = std::max(c[2] - ring, 0LL), z1 = std::min(c[2] + ring, dims_[2] - 1);
    for (long long x = x0; x <= x1; ++x) {
      for (long long y = y0; y <= y1; ++y) {
        if (std::abs(x - c[0]) == ring || std::abs(y - c[1]) == ring) {
          for (long long z = z0; z <= z1; ++z) visit_cell(x, y, z);
        } else {
          const long long lo_z = c[2] - ring;
          const long long hi_z = c[2] + ring;
          if (lo_z >= 0 && lo_z < dims_[2]) visit_cell(x, y, lo_z);
          if (hi_z != lo_z && hi_z >= 0 && hi_z < dims_[2]) visit_cell(x, y, hi_z);
        }
      }
    }

    bool covers_grid = true;
    for (std::size_t a = 0; a < 3; ++a) {
      covers_grid = covers_grid && c[a] - ring <= 0 && c[a] + ring >= dims_[a] - 1;
    }
    if (covers_grid) break;
  }

  result.resize(best.size());
  for (auto i = best.size(); i-- > 0;) {
    result[i] = {best.top().index, std::sqrt(best.top().dist_sq)};
    best.pop();
  }
  return result;
}

double nearest_depth_distance(const Vec3& p, const UniformGridIndex& cloud, int k,
                              KnnAggregate aggregate, double max_radius) {
  if (cloud.empty()) throw Error(ErrorKind::Domain, "empty depth cloud");
  if (k < 1) throw Error(ErrorKind::Domain, "k must be >= 1");
  const auto nn = cloud.knn(p, k, max_radius);
  if (nn.empty()) return std::numeric_limits<double>::infinity();
  if (aggregate == KnnAggregate::Min) return nn.front().distance;
  double sum = 0.0;
  for (const auto& n : nn) sum += n.distance;
  return sum / static_cast<double>(nn.size());
}

}  // namespace gsocc
