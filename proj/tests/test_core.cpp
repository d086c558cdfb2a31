#include "gsocc/core.hpp"
#include "support.hpp"

#include <doctest.h>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

using namespace gsocc;
using gsocc::testing::Gen;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Rotation matrix written out from the unit quaternion components.
Mat3 quat_matrix(double w, double x, double y, double z) {
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Quat about_z(double deg) {
  return Quat(Eigen::AngleAxisd(deg * kPi / 180.0, Vec3::UnitZ()));
}

}  // namespace

TEST_CASE("compose_refined with a zero residual is the identity") {
  SemanticGaussian g;
  g.mean = Vec3(1, 0, 0);
  g.logits[3] = 2.0;
  CHECK(compose_refined(g, GaussianDelta{}) == g);
}

TEST_CASE("compose_refined composes rotations") {
  SemanticGaussian g;
  GaussianDelta d;
  d.d_rotation = about_z(90);
  const auto out = compose_refined(g, d);
  CHECK(out.rotation.angularDistance(about_z(90)) < 1e-12);
  CHECK(out.rotation.w() >= 0.0);
}

TEST_CASE("compose_refined clamps opacity and floors scale") {
  SemanticGaussian g;
  g.opacity = 0.9;
  GaussianDelta d;
  d.d_opacity = 0.3;
  d.d_scale = Vec3(-1.0, 0.0, 0.0);
  const auto out = compose_refined(g, d);
  CHECK(out.opacity == 1.0);
  CHECK(out.scale.x() == kScaleFloor);
  CHECK(out.scale.y() == g.scale.y());

  d.d_opacity = -2.0;
  CHECK(compose_refined(g, d).opacity == 0.0);
}

TEST_CASE("compose_refined keeps id and fixed weight") {
  Gen gen(11);
  const Box region{Vec3::Zero(), Vec3::Ones()};
  for (int i = 0; i < 200; ++i) {
    const auto g = gen.gaussian(i, region);
    const auto out = compose_refined(g, gen.delta());
    CHECK(out.id == g.id);
    CHECK(out.fixed_weight == g.fixed_weight);
    CHECK(std::abs(out.rotation.norm() - 1.0) <= 1e-9);
    CHECK(out.rotation.w() >= 0.0);
    CHECK_NOTHROW(check_invariants(out));
  }
}

TEST_CASE("covariance of an axis-aligned Gaussian") {
  SemanticGaussian g;
  g.scale = Vec3(1, 2, 3);
  const Mat3 s = covariance(g);
  CHECK(s.isApprox(Vec3(1, 4, 9).asDiagonal().toDenseMatrix(), 0.0));
}

TEST_CASE("covariance after a quarter turn about z swaps x and y") {
  SemanticGaussian g;
  g.scale = Vec3(1, 2, 1);
  g.rotation = about_z(90);
  const Mat3 s = covariance(g);
  const Mat3 expected = Vec3(4, 1, 1).asDiagonal();
  CHECK((s - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("covariance matches the hand-expanded product") {
  Gen gen(5);
  for (int i = 0; i < 500; ++i) {
    SemanticGaussian g;
    g.rotation = gen.rotation();
    g.scale = gen.vec(1e-4, 2.0);
    const auto& q = g.rotation;
    const Mat3 r = quat_matrix(q.w(), q.x(), q.y(), q.z());
    Mat3 oracle = Mat3::Zero();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int k = 0; k < 3; ++k) oracle(a, b) += r(a, k) * g.scale[k] * g.scale[k] * r(b, k);
    const Mat3 s = covariance(g);
    CHECK((s - oracle).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, oracle.norm()));
  }
}

TEST_CASE("covariance is symmetric positive definite with eigenvalues s^2") {
  Gen gen(6);
  for (int i = 0; i < 500; ++i) {
    SemanticGaussian g;
    g.rotation = gen.rotation();
    g.scale = gen.vec(kScaleFloor, 1.0);
    const Mat3 s = covariance(g);
    CHECK((s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(Eigen::LLT<Mat3>(s).info() == Eigen::Success);

    Eigen::SelfAdjointEigenSolver<Mat3> eig(s);
    std::array<double, 3> ev = {eig.eigenvalues()[0], eig.eigenvalues()[1], eig.eigenvalues()[2]};
    std::array<double, 3> s2 = {g.scale[0] * g.scale[0], g.scale[1] * g.scale[1],
                                g.scale[2] * g.scale[2]};
    std::sort(ev.begin(), ev.end());
    std::sort(s2.begin(), s2.end());
    for (int k = 0; k < 3; ++k) CHECK(ev[k] == doctest::Approx(s2[k]).epsilon(1e-9));
  }
}

TEST_CASE("canonical picks the w >= 0 hemisphere") {
  const Quat q(-0.5, 0.5, 0.5, 0.5);
  const Quat c = canonical(q);
  CHECK(c.w() == 0.5);
  CHECK(c.x() == -0.5);
}

TEST_CASE("check_invariants rejects invalid Gaussians") {
  SemanticGaussian g;
  CHECK_NOTHROW(check_invariants(g));
  auto bad = g;
  bad.opacity = 1.5;
  CHECK_THROWS_AS(check_invariants(bad), Error);
  bad = g;
  bad.scale.y() = 0.0;
  CHECK_THROWS_AS(check_invariants(bad), Error);
  bad = g;
  bad.rotation = Quat(2, 0, 0, 0);
  CHECK_THROWS_AS(check_invariants(bad), Error);
}

TEST_CASE("refinement defaults") {
  const RefinementConfig cfg;
  CHECK(cfg.kappa_low == 5.0);
  CHECK(cfg.kappa_high == 20.0);
  CHECK(cfg.w_min == 0.0);
  CHECK(cfg.w_max == 1.0);
  CHECK(cfg.d_near == 0.1);
  CHECK(cfg.d_far == 0.25);
  CHECK(cfg.knn_k == 10);
  CHECK(cfg.mc_samples == 3);
  CHECK(cfg.tau_unc == 0.3);
  CHECK(cfg.num_classes == 12);
  CHECK(cfg.init_interval == 0.16);
  CHECK(cfg.voxel_size == 0.08);
  CHECK(cfg.fusion == FusionStrategy::Product);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("refinement config validation") {
  RefinementConfig cfg;
  cfg.kappa_low = 30.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.d_near = 0.3;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.w_min = 0.8;
  cfg.w_max = 0.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.mc_samples = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.tau_unc = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("class names round trip") {
  for (int c = 0; c < kNumClasses; ++c) CHECK(class_from_name(class_name(c)) == c);
  CHECK(class_name(6) == "bed");
  CHECK(class_name(11) == "objects");
  CHECK_THROWS_AS(class_from_name("lamp"), Error);
}

TEST_CASE("fusion strategy names round trip") {
  for (auto s : kAllFusionStrategies) CHECK(parse_fusion(to_string(s)) == s);
  CHECK_THROWS_AS(parse_fusion("sum"), Error);
}
