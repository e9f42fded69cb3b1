#include "mixlab/mixup.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "mixlab/errors.hpp"

namespace mixlab::mixup {

MixRatio::MixRatio(double lambda) : lambda_(lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw InvalidArgument("mix ratio must lie in [0, 1], got " + std::to_string(lambda));
  }
}

MixRatio sample_lambda(double alpha, Rng& rng) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw InvalidArgument("Beta concentration alpha must be positive, got " + std::to_string(alpha));
  }
  std::gamma_distribution<double> gamma(alpha, 1.0);
  const double g1 = gamma(rng);
  const double g2 = gamma(rng);
  const double total = g1 + g2;
  if (total == 0.0) {
    // Both draws underflowed (tiny alpha): mass sits at the endpoints.
    return MixRatio(std::bernoulli_distribution(0.5)(rng) ? 1.0 : 0.0);
  }
  return MixRatio(g1 / total);
}

MixedSample mix_pair(const data::Sample& s_i, const data::Sample& s_j, MixRatio lambda,
                     int class_count) {
  if (s_i.features.size() != s_j.features.size()) {
    throw DimensionMismatch("cannot mix samples of dimension " +
                            std::to_string(s_i.features.size()) + " and " +
                            std::to_string(s_j.features.size()));
  }
  const double l = lambda.value();
  MixedSample m;
  m.lambda = l;
  m.parents = {s_i.id, s_j.id};
  m.features = l * s_i.features + (1.0 - l) * s_j.features;
  m.soft_label = l * data::soft_label(s_i.label, class_count) +
                 (1.0 - l) * data::soft_label(s_j.label, class_count);
  return m;
}

LambdaMode parse_lambda_mode(std::string_view name) {
  if (name == "per_batch" || name == "per-batch") return LambdaMode::kPerBatch;
  if (name == "per_pair" || name == "per-pair") return LambdaMode::kPerPair;
  throw InvalidArgument("unknown lambda mode '" + std::string(name) + "'");
}

MixPlan plan_mix(std::size_t n, double alpha, Rng& rng, LambdaMode mode) {
  MixPlan plan;
  plan.partner.resize(n);
  std::iota(plan.partner.begin(), plan.partner.end(), std::size_t{0});
  for (std::size_t k = n; k > 1; --k) {
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    std::swap(plan.partner[k - 1], plan.partner[pick(rng)]);
  }
  if (mode == LambdaMode::kPerBatch) {
    plan.lambdas.assign(n, n == 0 ? 1.0 : sample_lambda(alpha, rng).value());
  } else {
    plan.lambdas.resize(n);
    for (auto& l : plan.lambdas) l = sample_lambda(alpha, rng).value();
  }
  return plan;
}

std::vector<MixedSample> mix_batch(std::span<const data::Sample> batch, double alpha, Rng& rng,
                                   LambdaMode mode, int class_count) {
  if (batch.empty()) throw InvalidArgument("cannot mix an empty batch");
  const MixPlan plan = plan_mix(batch.size(), alpha, rng, mode);
  std::vector<MixedSample> out;
  out.reserve(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) {
    out.push_back(mix_pair(batch[k], batch[plan.partner[k]], MixRatio(plan.lambdas[k]),
                           class_count));
  }
  return out;
}

void apply_plan(const MixPlan& plan, const Matrix& features, const Matrix& targets,
                Matrix& mixed_features, Matrix& mixed_targets) {
  const auto n = static_cast<Eigen::Index>(plan.partner.size());
  if (features.cols() != n || targets.cols() != n) {
    throw DimensionMismatch("mix plan size does not match the batch");
  }
  mixed_features.resize(features.rows(), n);
  mixed_targets.resize(targets.rows(), n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto j = static_cast<Eigen::Index>(plan.partner[static_cast<std::size_t>(k)]);
    const double l = plan.lambdas[static_cast<std::size_t>(k)];
    mixed_features.col(k) = l * features.col(k) + (1.0 - l) * features.col(j);
    mixed_targets.col(k) = l * targets.col(k) + (1.0 - l) * targets.col(j);
  }
}

}  // namespace mixlab::mixup
