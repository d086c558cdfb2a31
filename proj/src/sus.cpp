#include "gsocc/sus.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace gsocc {
namespace {

Quat nlerp(const Quat& a, const Quat& b, double t) {
  Quat b_aligned = b;
  if (a.coeffs().dot(b.coeffs()) < 0.0) b_aligned.coeffs() = -b.coeffs();
  Quat q;
  q.coeffs() = (1.0 - t) * a.coeffs() + t * b_aligned.coeffs();
  return canonical(q);
}

}  // namespace

Logits softmax(const Logits& x) {
  const Logits e = (x.array() - x.maxCoeff()).exp().matrix();
  return e / e.sum();
}

SemanticDistribution mean_distribution(std::span<const Logits> sample_deltas, const Logits& c) {
  if (sample_deltas.empty()) throw Error(ErrorKind::Domain, "no semantic samples");
  Logits sum = Logits::Zero();
  for (const auto& d : sample_deltas) sum += softmax(d + c);
  return {sum / static_cast<double>(sample_deltas.size())};
}

double normalized_entropy(std::span<const double> p) {
  if (p.size() < 2) throw Error(ErrorKind::Domain, "entropy needs at least two classes");
  double h = 0.0;
  for (double pj : p) {
    if (pj > 0.0) h -= pj * std::log(pj);
  }
  return std::clamp(h / std::log(static_cast<double>(p.size())), 0.0, 1.0);
}

double normalized_entropy(const SemanticDistribution& p, int num_classes) {
  if (num_classes != kNumClasses)
    throw Error(ErrorKind::Domain, "class count does not match the distribution size");
  return normalized_entropy(std::span<const double>(p.p.data(), kNumClasses));
}

UpdateDecision update_ratio(double entropy, double tau) {
  UpdateDecision d;
  d.entropy = entropy;
  d.ratio = entropy > tau ? entropy : 0.0;
  d.skipped = d.ratio == 0.0;
  return d;
}

SemanticGaussian blended_update(const SemanticGaussian& g, const SemanticGaussian& g_new,
                                double ratio) {
  if (g.id != g_new.id) throw Error(ErrorKind::Domain, "blending gaussians with different ids");
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw Error(ErrorKind::Domain, "ratio outside [0,1]");
  if (ratio == 0.0) return g;
  if (ratio == 1.0) return g_new;
  const double keep = 1.0 - ratio;
  SemanticGaussian out = g;
  out.mean = ratio * g_new.mean + keep * g.mean;
  out.scale = (ratio * g_new.scale + keep * g.scale).cwiseMax(kScaleFloor);
  out.rotation = nlerp(g.rotation, g_new.rotation, ratio);
  out.opacity = std::clamp(ratio * g_new.opacity + keep * g.opacity, 0.0, 1.0);
  out.logits = ratio * g_new.logits + keep * g.logits;
  return out;
}

GaussianDelta mean_delta(std::span<const GaussianDelta> samples) {
  if (samples.empty()) throw Error(ErrorKind::Domain, "no proposal samples");
  GaussianDelta out;
  out.d_mean.setZero();
  out.d_scale.setZero();
  out.d_logits.setZero();
  Eigen::Vector4d q_sum = Eigen::Vector4d::Zero();
  for (const auto& s : samples) {
    out.d_mean += s.d_mean;
    out.d_scale += s.d_scale;
    out.d_opacity += s.d_opacity;
    out.d_logits += s.d_logits;
    q_sum += canonical(s.d_rotation).coeffs();
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  out.d_mean *= inv;
  out.d_scale *= inv;
  out.d_opacity *= inv;
  out.d_logits *= inv;
  if (samples.size() == 1) {
    out.d_rotation = canonical(samples.front().d_rotation);
  } else {
    Quat q;
    q.coeffs() = q_sum;
    out.d_rotation = canonical(q);
  }
  return out;
}

GaussianDelta scale_delta(const GaussianDelta& d, double t) {
  GaussianDelta out;
  out.d_mean = t * d.d_mean;
  out.d_scale = t * d.d_scale;
  out.d_opacity = t * d.d_opacity;
  out.d_logits = t * d.d_logits;
  out.d_rotation = t == 1.0 ? d.d_rotation : nlerp(Quat::Identity(), d.d_rotation, t);
  return out;
}

SampledUpdate sample_and_decide(const SemanticGaussian& g, std::span<const GaussianDelta> samples,
                                const RefinementConfig& cfg) {
  if (static_cast<int>(samples.size()) != cfg.mc_samples)
    throw Error(ErrorKind::Domain, "expected " + std::to_string(cfg.mc_samples) +
                                       " proposal samples, got " + std::to_string(samples.size()));
  std::vector<Logits> semantic;
  semantic.reserve(samples.size());
  for (const auto& s : samples) semantic.push_back(s.d_logits);
  const auto p = mean_distribution(semantic, g.logits);
  const double entropy = normalized_entropy(p, cfg.num_classes);
  return {update_ratio(entropy, cfg.tau_unc), mean_delta(samples)};
}

}  // namespace gsocc
