#include "mixlab/metrics.hpp"

#include <cmath>
#include <string>

#include "mixlab/errors.hpp"

namespace mixlab::metrics {

double benr(const EpochDynamics& dyn) {
  if (dyn.batch_update_norms.empty()) throw InvalidArgument("BENR needs at least one batch");
  const double epoch_norm = dyn.epoch_update.norm();
  if (epoch_norm < kDegenerateEpochNorm) {
    throw DegenerateInput("epoch update norm " + std::to_string(epoch_norm) +
                          " is too small for BENR");
  }
  double total = 0.0;
  for (double n : dyn.batch_update_norms) total += n;
  return total / epoch_norm;
}

double benr(std::span<const Vector> batch_updates) {
  if (batch_updates.empty()) throw InvalidArgument("BENR needs at least one batch");
  EpochDynamics dyn;
  dyn.epoch_update = Vector::Zero(batch_updates.front().size());
  for (const auto& u : batch_updates) {
    if (u.size() != dyn.epoch_update.size()) throw DimensionMismatch("batch updates differ in length");
    dyn.batch_update_norms.push_back(u.norm());
    dyn.epoch_update += u;
  }
  return benr(dyn);
}

double atd(const Vector& reference, const Vector& current) {
  if (reference.size() != current.size()) {
    throw DimensionMismatch("activation vectors differ in length (" +
                            std::to_string(reference.size()) + " vs " +
                            std::to_string(current.size()) + ")");
  }
  return (current - reference).norm();
}

double atd(const EpochDynamics& dyn) { return atd(dyn.activations_ref, dyn.activations_now); }

CosStats grad_cos_stats(std::span<const std::pair<Vector, Vector>> pairs) {
  CosStats st;
  double sum = 0.0;
  std::size_t lt_half = 0;
  std::size_t lt_zero = 0;
  for (const auto& [vanilla, mix] : pairs) {
    if (vanilla.size() != mix.size()) throw DimensionMismatch("gradient pair differs in length");
    const double nv = vanilla.norm();
    const double nm = mix.norm();
    if (nv == 0.0 || nm == 0.0) {
      ++st.excluded;
      continue;
    }
    const double c = vanilla.dot(mix) / (nv * nm);
    sum += c;
    if (c < 0.5) ++lt_half;
    if (c < 0.0) ++lt_zero;
    ++st.pair_count;
  }
  if (st.pair_count == 0) throw DegenerateInput("no gradient pair with nonzero norms");
  const double n = static_cast<double>(st.pair_count);
  st.avg_cos = sum / n;
  st.prop_lt_half = static_cast<double>(lt_half) / n;
  st.prop_lt_zero = static_cast<double>(lt_zero) / n;
  return st;
}

double grad_rate(const Vector& grad_mix, const Vector& grad_vanilla) {
  if (grad_mix.size() != grad_vanilla.size()) throw DimensionMismatch("gradients differ in length");
  const double nv = grad_vanilla.norm();
  if (nv == 0.0) throw InvalidArgument("grad rate undefined for a zero vanilla gradient");
  const Vector unit = grad_vanilla / nv;
  const Vector perp = grad_mix - grad_mix.dot(unit) * unit;
  return perp.norm() / nv;
}

double grad_rate(const nn::GradSnapshot& grad_mix, const nn::GradSnapshot& grad_vanilla) {
  return grad_rate(grad_mix.flat, grad_vanilla.flat);
}

namespace {

bool counts_as_zero(double a, ZeroMode mode, double tol) {
  if (mode == ZeroMode::kRelu) return std::abs(a) <= tol;
  return a <= tol || a >= 1.0 - tol;
}

nn::Activation counted_activation(ZeroMode mode) {
  return mode == ZeroMode::kRelu ? nn::Activation::kRelu : nn::Activation::kSigmoid;
}

}  // namespace

double zero_activation_count(std::span<const nn::ForwardTrace> traces, ZeroMode mode, double tol) {
  if (!(tol >= 0.0)) throw InvalidArgument("tolerance must be non-negative");
  if (traces.empty()) return 0.0;
  double total = 0.0;
  const std::size_t hidden = traces.front().post.size() - 1;
  for (const auto& t : traces) {
    if (t.post.size() != traces.front().post.size()) {
      throw DimensionMismatch("traces do not share an architecture");
    }
    for (std::size_t k = 0; k < hidden; ++k) {
      const Vector& a = t.post[k];
      // Activation type is not stored in the trace: relu outputs are >= 0 and
      // sigmoid outputs lie in (0, 1), which the mode already implies.
      for (Eigen::Index j = 0; j < a.size(); ++j) {
        if (counts_as_zero(a(j), mode, tol)) total += 1.0;
      }
    }
  }
  return total / static_cast<double>(traces.size());
}

double zero_activation_count(const nn::ModelParams& params, const nn::BatchOutput& out,
                             ZeroMode mode, double tol) {
  if (!(tol >= 0.0)) throw InvalidArgument("tolerance must be non-negative");
  if (out.post.size() != params.layers.size()) throw DimensionMismatch("batch output does not match model");
  if (out.post.empty() || out.post.front().cols() == 0) return 0.0;
  const nn::Activation wanted = counted_activation(mode);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < params.layers.size(); ++k) {
    if (params.layers[k].activation != wanted) continue;
    const Matrix& a = out.post[k];
    if (mode == ZeroMode::kRelu) {
      total += static_cast<double>((a.array().abs() <= tol).count());
    } else {
      total += static_cast<double>((a.array() <= tol || a.array() >= 1.0 - tol).count());
    }
  }
  return total / static_cast<double>(out.post.front().cols());
}

}  // namespace mixlab::metrics
