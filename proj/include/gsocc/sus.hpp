#pragma once

#include "gsocc/core.hpp"

#include <span>

namespace gsocc {

// Semantic-aware uncertainty sampling: the entropy of the mean softmax over
// several stochastic proposals gates and scales each memory update.

struct SemanticDistribution {
  Logits p = Logits::Constant(1.0 / kNumClasses);
};

struct UpdateDecision {
  double ratio = 0.0;
  bool skipped = true;
  double entropy = 0.0;
};

/// Max-subtracted softmax.
Logits softmax(const Logits& x);

/// Mean of softmax(delta_i + c) over the samples. Throws Error(Domain) on an
/// empty sample list.
SemanticDistribution mean_distribution(std::span<const Logits> sample_deltas, const Logits& c);

/// -sum p ln p / ln C with 0 ln 0 = 0, clamped to [0, 1]. C = p.size() >= 2.
double normalized_entropy(std::span<const double> p);
double normalized_entropy(const SemanticDistribution& p, int num_classes);

/// ratio = entropy when entropy > tau, else 0 (skipped).
UpdateDecision update_ratio(double entropy, double tau);

/// ratio * g_new + (1 - ratio) * g on every property; rotations use
/// sign-aligned nlerp. Exact at ratio 0 and 1. Throws Error(Domain) when the
/// ids differ.
SemanticGaussian blended_update(const SemanticGaussian& g, const SemanticGaussian& g_new,
                                double ratio);

/// Componentwise mean; rotations are moved to the w >= 0 hemisphere, averaged
/// and normalized.
GaussianDelta mean_delta(std::span<const GaussianDelta> samples);

/// Residual scaled by t: linear parts multiplied, rotation nlerped from identity.
GaussianDelta scale_delta(const GaussianDelta& d, double t);

struct SampledUpdate {
  UpdateDecision decision;
  GaussianDelta applied;  // mean of the proposals
};

SampledUpdate sample_and_decide(const SemanticGaussian& g, std::span<const GaussianDelta> samples,
                                const RefinementConfig& cfg);

}  // namespace gsocc
