#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "mixlab/data.hpp"
#include "mixlab/rng.hpp"

namespace mixlab::mixup {

/// A mixing ratio in [0, 1].
class MixRatio {
 public:
  explicit MixRatio(double lambda);
  double value() const { return lambda_; }

 private:
  double lambda_;
};

/// Beta(alpha, alpha) via G1 / (G1 + G2), G ~ Gamma(alpha, 1).
MixRatio sample_lambda(double alpha, Rng& rng);

struct MixedSample {
  Vector features;
  Vector soft_label;
  std::pair<std::int64_t, std::int64_t> parents;
  double lambda = 1.0;
};

/// lambda * s_i + (1 - lambda) * s_j for features and soft labels.
MixedSample mix_pair(const data::Sample& s_i, const data::Sample& s_j, MixRatio lambda,
                     int class_count = 2);

enum class LambdaMode { kPerBatch, kPerPair };

LambdaMode parse_lambda_mode(std::string_view name);

/// Partner permutation and ratios for one batch.
struct MixPlan {
  std::vector<std::size_t> partner;  // sample k mixes with partner[k]
  std::vector<double> lambdas;       // one entry per sample
};

/// Draws a permutation of [0, n) and the ratios from `rng`: the permutation
/// first, then one lambda (per batch) or n lambdas (per pair).
MixPlan plan_mix(std::size_t n, double alpha, Rng& rng, LambdaMode mode);

std::vector<MixedSample> mix_batch(std::span<const data::Sample> batch, double alpha, Rng& rng,
                                   LambdaMode mode = LambdaMode::kPerBatch,
                                   int class_count = 2);

/// Applies a plan to column-major features [d x n] and targets [t x n].
void apply_plan(const MixPlan& plan, const Matrix& features, const Matrix& targets,
                Matrix& mixed_features, Matrix& mixed_targets);

}  // namespace mixlab::mixup
