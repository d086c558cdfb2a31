#pragma once

#include "gsocc/core.hpp"
#include "gsocc/grid.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace gsocc::testing {

/// Seeded generators for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(eng_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  double normal(double sigma = 1.0) { return std::normal_distribution<double>(0.0, sigma)(eng_); }
  bool coin() { return integer(0, 1) == 1; }

  Vec3 vec(double lo, double hi) { return Vec3(uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)); }
  Vec3 vec_in(const Box& b) {
    return Vec3(uniform(b.min.x(), b.max.x()), uniform(b.min.y(), b.max.y()),
                uniform(b.min.z(), b.max.z()));
  }

  Vec3 unit() {
    Vec3 v;
    do {
      v = Vec3(normal(), normal(), normal());
    } while (v.norm() < 1e-6);
    return v.normalized();
  }

  Quat rotation() {
    Eigen::Vector4d v;
    do {
      v = Eigen::Vector4d(normal(), normal(), normal(), normal());
    } while (v.norm() < 1e-6);
    v.normalize();
    return canonical(Quat(v[0], v[1], v[2], v[3]));
  }

  Logits logits(double sigma = 2.0) {
    Logits c;
    for (int i = 0; i < kNumClasses; ++i) c[i] = normal(sigma);
    return c;
  }

  SemanticGaussian gaussian(std::int64_t id, const Box& region, double s_lo = 0.02,
                            double s_hi = 0.3) {
    SemanticGaussian g;
    g.id = id;
    g.mean = vec_in(region);
    g.scale = vec(s_lo, s_hi);
    g.rotation = rotation();
    g.opacity = uniform(0.0, 1.0);
    g.logits = logits();
    g.fixed_weight = uniform(0.0, 1.0);
    return g;
  }

  GaussianDelta delta(double mag = 0.2) {
    GaussianDelta d;
    d.d_mean = vec(-mag, mag);
    d.d_scale = vec(-0.05, 0.05);
    const Vec3 axis = unit();
    d.d_rotation = canonical(Quat(Eigen::AngleAxisd(uniform(0.0, 0.5), axis)));
    d.d_opacity = uniform(-0.5, 0.5);
    d.d_logits = logits(1.0);
    return d;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

inline VoxelGrid grid_with(const GridSpec& spec) {
  VoxelGrid g(spec);
  g.density.clear();
  return g;
}

}  // namespace gsocc::testing
