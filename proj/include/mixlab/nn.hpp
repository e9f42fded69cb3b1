#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mixlab/rng.hpp"

namespace mixlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace nn {

enum class Activation { kSigmoid, kRelu, kIdentity };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

/// Probability floor applied before every logarithm in the losses.
inline constexpr double kProbClamp = 1e-12;

struct Layer {
  Matrix weights;  // [out x in]
  Vector biases;   // [out]
  Activation activation = Activation::kIdentity;
};

struct LayerSpec {
  std::size_t width = 0;
  Activation activation = Activation::kIdentity;
};

struct Architecture {
  std::size_t input_dim = 0;
  std::vector<LayerSpec> layers;

  /// Hidden layers of `hidden_activation` followed by the prediction head:
  /// one sigmoid unit for two classes, `classes` identity units otherwise.
  static Architecture mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                          Activation hidden_activation, std::size_t classes);
};

/// Ordered dense layers. The last layer is the prediction head: a single
/// sigmoid unit (binary cross-entropy) or identity units fed to softmax
/// cross-entropy.
struct ModelParams {
  std::vector<Layer> layers;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;
  bool binary_head() const { return output_dim() == 1; }

  /// Throws DimensionMismatch on broken chaining, InvalidArgument on
  /// non-finite entries or an unsupported head.
  void validate() const;

  /// Layer-major; within a layer the weights row-major, then the biases.
  Vector flatten() const;
  void assign_flat(const Vector& flat);
};

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
ModelParams init_params(const Architecture& arch, Rng& rng);

struct ForwardTrace {
  Vector input;
  std::vector<Vector> pre;   // z_l
  std::vector<Vector> post;  // a_l = activation(z_l)
  Vector score;              // f, the final pre-activation
  std::optional<double> loss;
};

enum class GradSource { kVanilla, kMixup };

struct GradSnapshot {
  Vector flat;
  GradSource source = GradSource::kVanilla;
  int epoch = 0;
};

double sigmoid(double z);
Vector apply_activation(Activation a, const Vector& z);

ForwardTrace forward(const ModelParams& params, const Vector& x);

/// Binary cross-entropy on the score for a single-output head, softmax
/// cross-entropy otherwise. Targets may be soft.
double loss_from_score(const Vector& score, const Vector& target);
double loss(const ForwardTrace& trace, const Vector& target);

/// Exact gradient of loss(forward(params, x), target).
GradSnapshot backward(const ForwardTrace& trace, const Vector& target,
                      const ModelParams& params);

/// Central-difference estimate, one parameter at a time.
GradSnapshot finite_diff_grad(const ModelParams& params, const Vector& x,
                              const Vector& target, double eps);

ModelParams sgd_step(const ModelParams& params, const GradSnapshot& grad, double eta);
/// In-place variant used by the trainer.
void apply_sgd(ModelParams& params, const Vector& grad_flat, double eta);

// Batched evaluation. Samples are columns.

struct BatchOutput {
  std::vector<Matrix> post;  // per-layer activations, [width x n]
  Matrix score;              // final pre-activation, [out x n]
};

BatchOutput forward_batch(const ModelParams& params, const Matrix& inputs);

/// Per-sample losses for a batch of soft targets [out x n].
Vector batch_losses(const Matrix& score, const Matrix& targets);

struct BatchGrad {
  double mean_loss = 0.0;
  Vector flat;  // gradient of the mean loss
};

BatchGrad batch_gradient(const ModelParams& params, const Matrix& inputs,
                         const Matrix& targets);

/// Predicted class per column of `score`.
std::vector<int> predict_classes(const Matrix& score);

}  // namespace nn
}  // namespace mixlab
