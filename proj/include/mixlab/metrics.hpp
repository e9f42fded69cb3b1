#pragma once

#include <span>
#include <utility>
#include <vector>

#include "mixlab/nn.hpp"

// Training-dynamics instrumentation.
namespace mixlab::metrics {

struct EpochDynamics {
  std::vector<double> batch_update_norms;
  Vector epoch_update;     // theta_end - theta_start
  Vector activations_ref;  // probe-set activations at initialization
  Vector activations_now;
};

/// Net epoch displacement below this norm makes BENR undefined.
inline constexpr double kDegenerateEpochNorm = 1e-15;

/// Sum of batch update norms over the norm of the epoch update.
double benr(const EpochDynamics& dyn);
double benr(std::span<const Vector> batch_updates);

/// |A_now - A_ref|.
double atd(const EpochDynamics& dyn);
double atd(const Vector& reference, const Vector& current);

struct CosStats {
  double avg_cos = 0.0;
  double prop_lt_half = 0.0;  // fraction with cos < 0.5
  double prop_lt_zero = 0.0;  // fraction with cos < 0
  std::size_t pair_count = 0;
  std::size_t excluded = 0;   // pairs dropped for a zero-norm gradient
};

/// Cosine between (vanilla, mixup) gradients for each pair. Throws
/// DegenerateInput when every pair is excluded.
CosStats grad_cos_stats(std::span<const std::pair<Vector, Vector>> pairs);

/// |mix - (mix . g) g| / |vanilla| with g the unit vanilla direction.
double grad_rate(const Vector& grad_mix, const Vector& grad_vanilla);
double grad_rate(const nn::GradSnapshot& grad_mix, const nn::GradSnapshot& grad_vanilla);

enum class ZeroMode { kRelu, kSigmoidSaturation };

/// Margin for sigmoid saturation counting.
inline constexpr double kSigmoidSaturationTol = 1e-6;

/// Mean over traces of the number of hidden post-activations counted as
/// zero: |a| <= tol (relu) or a <= tol || a >= 1 - tol (sigmoid). Only layers
/// with the matching activation are counted; the output layer never is.
double zero_activation_count(std::span<const nn::ForwardTrace> traces, ZeroMode mode, double tol);

/// Same count from batched hidden activations (one matrix per layer, samples
/// as columns).
double zero_activation_count(const nn::ModelParams& params, const nn::BatchOutput& out,
                             ZeroMode mode, double tol);

}  // namespace mixlab::metrics
