#include "gsocc/splat.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

using namespace gsocc;
using gsocc::testing::Gen;

namespace {

GridSpec cube30() {
  GridSpec s;
  s.origin = Vec3::Zero();
  s.dims = {30, 30, 30};
  s.voxel_size = 0.08;
  return s;
}

std::vector<SemanticGaussian> random_set(Gen& gen, int n, const Box& region) {
  std::vector<SemanticGaussian> out;
  for (int i = 0; i < n; ++i) out.push_back(gen.gaussian(i, region, 0.03, 0.25));
  return out;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("no Gaussians gives an empty grid") {
  const auto g = splat({}, cube30());
  CHECK(g.occupied_count() == 0);
  CHECK(brute_force_splat({}, cube30(), 0.1).occupied_count() == 0);
}

TEST_CASE("one Gaussian on a voxel center labels that voxel") {
  const auto spec = cube30();
  SemanticGaussian g;
  g.mean = spec.center(7, 8, 9);
  g.scale = Vec3::Constant(0.01);
  g.opacity = 1.0;
  g.logits = Logits::Zero();
  g.logits[3] = 1.0;
  const std::vector<SemanticGaussian> v = {g};
  const auto grid = splat(v, spec);
  CHECK(grid.label(7, 8, 9) == 3);
  CHECK(grid.occupied_count() == 1);
  CHECK(grid.density[spec.index(7, 8, 9)] == 1.0);
}

TEST_CASE("a single Gaussian matches the brute-force oracle exactly") {
  Gen gen(51);
  const auto spec = cube30();
  for (int i = 0; i < 20; ++i) {
    const auto v = random_set(gen, 1, Box{Vec3::Zero(), spec.extent()});
    SplatParams p;
    p.cutoff_sigma = kNoCutoff;
    const auto a = splat(v, spec, p);
    const auto b = brute_force_splat(v, spec, p.occ_threshold);
    CHECK(bit_equal(a.density, b.density));
    CHECK(a.labels == b.labels);
  }
}

TEST_CASE("truncated splat stays within the truncation bound") {
  Gen gen(52);
  const auto spec = cube30();
  for (int s = 0; s < 10; ++s) {
    const auto v = random_set(gen, gen.integer(1, 50), Box{Vec3::Zero(), spec.extent()});
    const auto a = splat(v, spec);
    const auto b = brute_force_splat(v, spec, 0.1);
    const double bound = truncation_bound(v, 4.0);
    for (std::size_t i = 0; i < a.density.size(); ++i) {
      REQUIRE(std::abs(a.density[i] - b.density[i]) <= bound);
      if (std::abs(b.density[i] - 0.1) > bound) REQUIRE(a.labels[i] == b.labels[i]);
    }
    CHECK(a.labels == b.labels);
  }
}

TEST_CASE("density does not depend on input order or thread count") {
  Gen gen(53);
  const auto spec = cube30();
  auto v = random_set(gen, 40, Box{Vec3::Zero(), spec.extent()});
  const auto ref = splat(v, spec, {}, 1);
  std::shuffle(v.begin(), v.end(), gen.engine());
  for (int threads : {1, 3, 8}) {
    const auto g = splat(v, spec, {}, threads);
    CHECK(bit_equal(g.density, ref.density));
    CHECK(g.labels == ref.labels);
  }
}

TEST_CASE("the truncation bound is small at 4 sigma") {
  std::vector<SemanticGaussian> v(10000);
  for (auto& g : v) g.opacity = 1.0;
  CHECK(truncation_bound(v, 4.0) < 4.0);
  CHECK(truncation_bound(v, 4.0) == doctest::Approx(10000 * std::exp(-8.0)));
  v.resize(1);
  CHECK(truncation_bound(v, 4.0) < 1e-3);
}

TEST_CASE("empty class never wins the argmax") {
  const auto spec = cube30();
  SemanticGaussian g;
  g.mean = spec.center(3, 3, 3);
  g.scale = Vec3::Constant(0.05);
  g.opacity = 1.0;
  g.logits = Logits::Constant(-1.0);
  g.logits[0] = 50.0;
  g.logits[9] = -0.5;
  const std::vector<SemanticGaussian> v = {g};
  CHECK(splat(v, spec).label(3, 3, 3) == 9);
}

TEST_CASE("ties go to the lowest class id") {
  const auto spec = cube30();
  SemanticGaussian g;
  g.mean = spec.center(3, 3, 3);
  g.scale = Vec3::Constant(0.05);
  g.opacity = 1.0;
  g.logits = Logits::Zero();
  g.logits[4] = g.logits[7] = 2.0;
  const std::vector<SemanticGaussian> v = {g};
  CHECK(splat(v, spec).label(3, 3, 3) == 4);
}

TEST_CASE("splat rejects bad parameters") {
  SplatParams p;
  p.cutoff_sigma = 2.0;
  CHECK_THROWS_AS(splat({}, cube30(), p), Error);
  GridSpec bad = cube30();
  bad.dims[1] = 0;
  CHECK_THROWS_AS(splat({}, bad), Error);
}

TEST_CASE("transform_gaussians moves means and rotations together") {
  Gen gen(54);
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.linear() = gen.rotation().toRotationMatrix();
  t.translation() = gen.vec(-1, 1);
  const auto v = random_set(gen, 10, Box{Vec3::Zero(), Vec3::Ones()});
  const auto moved = transform_gaussians(v, t);
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK((moved[i].mean - t * v[i].mean).norm() < 1e-12);
    const Mat3 expected = t.linear() * covariance(v[i]) * t.linear().transpose();
    CHECK((covariance(moved[i]) - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
}
