#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mixlab/nn.hpp"
#include "mixlab/rng.hpp"

// Closed-form results for the saturated early phase of training of a linear
// sigmoid model, where every sample is misclassified and sigma(f) sits at its
// wrong extreme.
namespace mixlab::theory {

/// A positive sample (y = 1) and a negative sample (y = 0).
struct EarlyPhasePair {
  Vector x_pos;
  Vector x_neg;
};

/// Sum of the two saturated per-sample gradients: -x_pos + x_neg.
Vector vanilla_grad_early(const EarlyPhasePair& pair);
/// Gradient of the 50/50 mix with soft label 1/2: -(x_pos + x_neg) / 4.
Vector mix_grad_early(const EarlyPhasePair& pair);
/// vanilla + mix = -(5/4) x_pos + (3/4) x_neg.
Vector total_grad_early(const EarlyPhasePair& pair);

double cosine(const Vector& a, const Vector& b);

using PairSource = std::function<EarlyPhasePair(Rng&)>;

/// Draws x_pos ~ N(+s/2 u, sigma^2 I) and x_neg ~ N(-s/2 u, sigma^2 I) with a
/// fixed unit direction u derived from `direction_seed`.
PairSource two_gaussian_pairs(std::size_t dim, double separation, double sigma,
                              std::uint64_t direction_seed = 0);

/// Interference strength for explicit pairs and perturbation signs:
/// |sum_k s_k (x_pos + x_neg) / 4| / |sum_k (-x_pos + x_neg)|.
double interference_strength(std::span<const EarlyPhasePair> pairs,
                             std::span<const int> signs);

struct InterferencePoint {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double epsilon = 0.0;
};

struct InterferenceEstimate {
  std::vector<InterferencePoint> points;  // ordered by (N, seed)
  std::vector<std::size_t> n_values;
  std::vector<double> mean_epsilon;       // seed mean per N
  double fitted_slope = 0.0;              // OLS of log(mean eps) on log N
};

/// For every (N, seed): N independent pairs from `source` and one fair sign
/// per pair, each (N, seed) cell on its own RNG streams.
InterferenceEstimate interference_sweep(const PairSource& source,
                                        std::span<const std::size_t> n_values,
                                        std::span<const std::uint64_t> seeds);

/// Ordinary least squares slope of y on x.
double ols_slope(std::span<const double> x, std::span<const double> y);

/// std(noise) / E[descent] = sigma / |g|.
double relative_fluctuation(double sigma, double grad_norm);

struct EquivalenceSolution {
  double lambda_star = 0.5;
  double f_loss = 0.0;
  double f_plus = 0.0;
  double f_minus = 0.0;
  double M = 0.0;      // half-width (f_plus - f_minus) / 2
  double delta = 0.0;  // |lambda_star - 0.5|
};

/// Ratio that places a sample of score f_loss on the segment between a
/// zero-loss positive (f_plus) and a zero-loss negative (f_minus).
EquivalenceSolution equivalence_lambda(double f_loss, double f_plus, double f_minus);

/// lambda f_plus + (1 - lambda) f_minus.
double mixed_score(double lambda, double f_plus, double f_minus);

/// log(1 + exp(z)) without overflow.
double softplus(double z);

/// BCE of the sample at score M (2 lambda - 1) with hard label y in {0, 1}.
double loss_at_lambda(double lambda, double M, int y);

struct BenrPair {
  double vanilla = 0.0;
  double mix = 0.0;
};

/// Three-batch epoch with two positives (x1, x2) and one negative (x3), all
/// misclassified, batch size 1. Vanilla batches update along -x1, -x2, +x3;
/// Mixup batches are the three 50% mixes with the summed early-phase gradient.
BenrPair benr_theoretical(const Vector& x1, const Vector& x2, const Vector& x3);

}  // namespace mixlab::theory
