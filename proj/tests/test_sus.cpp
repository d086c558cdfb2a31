#include "gsocc/sus.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace gsocc;
using gsocc::testing::Gen;

namespace {

double entropy_of(const Logits& p) {
  return normalized_entropy(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
}

Logits one_hot(int c, double hot = 1.0) {
  Logits p = Logits::Zero();
  p[c] = hot;
  return p;
}

}  // namespace

TEST_CASE("mean distribution of zero logits is uniform") {
  const std::vector<Logits> s = {Logits::Zero()};
  const auto d = mean_distribution(s, Logits::Zero());
  for (int i = 0; i < kNumClasses; ++i) CHECK(d.p[i] == doctest::Approx(1.0 / 12.0).epsilon(1e-15));
}

TEST_CASE("mean distribution of a peaked logit vector") {
  const std::vector<Logits> s = {Logits::Zero()};
  const auto d = mean_distribution(s, one_hot(0, 10.0));
  const double e10 = std::exp(10.0);
  CHECK(std::abs(d.p[0] - e10 / (e10 + 11.0)) < 1e-15);
  CHECK(std::abs(d.p[1] - 1.0 / (e10 + 11.0)) < 1e-15);
}

TEST_CASE("mean distribution averages the sample softmaxes") {
  Gen gen(41);
  const Logits a = gen.logits(), b = gen.logits(), c = gen.logits();
  const std::vector<Logits> s = {a, b};
  const auto d = mean_distribution(s, c);
  const Logits expected = 0.5 * (softmax(a + c) + softmax(b + c));
  CHECK((d.p - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("mean distribution needs samples") {
  CHECK_THROWS_AS(mean_distribution({}, Logits::Zero()), Error);
}

TEST_CASE("softmax survives large logits") {
  const auto p = softmax(one_hot(4, 1000.0));
  CHECK(p[4] == 1.0);
  CHECK(std::isfinite(p.sum()));
}

TEST_CASE("normalized entropy reference values") {
  CHECK(entropy_of(Logits::Constant(1.0 / 12.0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(entropy_of(Logits::Constant(1.0 / 12.0)) - 1.0) <= 1e-9);
  CHECK(entropy_of(one_hot(3)) == 0.0);
  Logits half = Logits::Zero();
  half[0] = half[1] = 0.5;
  CHECK(std::abs(entropy_of(half) - std::log(2.0) / std::log(12.0)) <= 1e-9);
  CHECK(std::abs(entropy_of(half) - 0.27894) < 1e-5);
}

TEST_CASE("normalized entropy stays in [0, 1]") {
  Gen gen(42);
  for (int i = 0; i < 5000; ++i) {
    const auto p = softmax(gen.logits(gen.uniform(0.01, 20.0)));
    const double h = entropy_of(p);
    CHECK(h >= 0.0);
    CHECK(h <= 1.0);
    CHECK(h < 1.0 - 1e-9);  // not uniform
  }
}

TEST_CASE("normalized entropy needs two classes") {
  const double one[] = {1.0};
  CHECK_THROWS_AS(normalized_entropy(std::span<const double>(one, 1)), Error);
}

TEST_CASE("update ratio gate") {
  auto d = update_ratio(0.2, 0.3);
  CHECK(d.ratio == 0.0);
  CHECK(d.skipped);
  d = update_ratio(0.5, 0.3);
  CHECK(d.ratio == 0.5);
  CHECK_FALSE(d.skipped);
  d = update_ratio(0.3, 0.3);
  CHECK(d.ratio == 0.0);
  CHECK(d.skipped);
}

TEST_CASE("blended update endpoints are exact") {
  Gen gen(43);
  const Box region{Vec3::Zero(), Vec3::Ones()};
  for (int i = 0; i < 500; ++i) {
    const auto g = gen.gaussian(i, region);
    auto g_new = compose_refined(g, gen.delta());
    CHECK(blended_update(g, g_new, 0.0) == g);
    CHECK(blended_update(g, g_new, 1.0) == g_new);
    const auto twice = blended_update(blended_update(g, g_new, 0.0), g_new, 0.0);
    CHECK(twice == g);
  }
}

TEST_CASE("blended update midpoint") {
  SemanticGaussian a, b;
  b.mean = Vec3(2, 0, 0);
  const auto m = blended_update(a, b, 0.5);
  CHECK(m.mean == Vec3(1, 0, 0));
}

TEST_CASE("blended update keeps unit rotation and opacity range") {
  Gen gen(44);
  const Box region{Vec3::Zero(), Vec3::Ones()};
  for (int i = 0; i < 2000; ++i) {
    const auto g = gen.gaussian(i, region);
    const auto g_new = compose_refined(g, gen.delta());
    const auto m = blended_update(g, g_new, gen.uniform(0, 1));
    CHECK(std::abs(m.rotation.norm() - 1.0) <= 1e-9);
    CHECK(m.opacity >= 0.0);
    CHECK(m.opacity <= 1.0);
    CHECK_NOTHROW(check_invariants(m));
  }
}

TEST_CASE("blended update rejects mismatched ids") {
  SemanticGaussian a, b;
  b.id = 1;
  CHECK_THROWS_AS(blended_update(a, b, 0.5), Error);
}

TEST_CASE("identical confident samples are skipped") {
  GaussianDelta d;
  d.d_logits = one_hot(5, 40.0);
  const std::vector<GaussianDelta> s(3, d);
  const auto out = sample_and_decide(SemanticGaussian{}, s, RefinementConfig{});
  CHECK(out.decision.skipped);
  CHECK(out.decision.entropy < 1e-9);
  CHECK(out.applied == d);
}

TEST_CASE("disagreeing samples raise the entropy") {
  GaussianDelta a, b, c;
  a.d_logits = one_hot(1, 4.0);
  b.d_logits = one_hot(2, 4.0);
  c.d_logits = one_hot(3, 4.0);
  const std::vector<GaussianDelta> mixed = {a, b, c};
  const std::vector<GaussianDelta> single = {a, a, a};
  const SemanticGaussian g;
  const auto hm = sample_and_decide(g, mixed, RefinementConfig{}).decision.entropy;
  const auto hs = sample_and_decide(g, single, RefinementConfig{}).decision.entropy;
  const auto p = softmax(a.d_logits);
  CHECK(hs == doctest::Approx(entropy_of(p)).epsilon(1e-12));
  CHECK(hm > hs);
}

TEST_CASE("sample count must match the configuration") {
  const std::vector<GaussianDelta> two(2);
  CHECK_THROWS_AS(sample_and_decide(SemanticGaussian{}, two, RefinementConfig{}), Error);
}

TEST_CASE("sample order does not change the decision") {
  Gen gen(45);
  for (int i = 0; i < 300; ++i) {
    std::vector<GaussianDelta> s = {gen.delta(), gen.delta(), gen.delta()};
    const SemanticGaussian g;
    const auto a = sample_and_decide(g, s, RefinementConfig{});
    std::reverse(s.begin(), s.end());
    const auto b = sample_and_decide(g, s, RefinementConfig{});
    CHECK(std::abs(a.decision.entropy - b.decision.entropy) <= 1e-12);
    CHECK((a.applied.d_mean - b.applied.d_mean).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((a.applied.d_logits - b.applied.d_logits).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(a.applied.d_rotation.angularDistance(b.applied.d_rotation) <= 1e-9);
  }
}

TEST_CASE("mean delta of equal samples is that sample") {
  Gen gen(46);
  const auto d = gen.delta();
  const std::vector<GaussianDelta> s(3, d);
  const auto m = mean_delta(s);
  CHECK((m.d_mean - d.d_mean).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(m.d_rotation.angularDistance(d.d_rotation) <= 1e-12);
}

TEST_CASE("scale_delta endpoints") {
  Gen gen(47);
  const auto d = gen.delta();
  const auto zero = scale_delta(d, 0.0);
  CHECK(zero.d_mean == Vec3::Zero());
  CHECK(zero.d_rotation.angularDistance(Quat::Identity()) <= 1e-12);
  const auto full = scale_delta(d, 1.0);
  CHECK(full.d_mean == d.d_mean);
  CHECK(full.d_rotation.angularDistance(d.d_rotation) <= 1e-12);
}
