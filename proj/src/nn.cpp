#include "mixlab/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "mixlab/errors.hpp"

namespace mixlab::nn {

Activation parse_activation(std::string_view name) {
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "relu") return Activation::kRelu;
  if (name == "identity" || name == "linear") return Activation::kIdentity;
  throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kSigmoid:
      return "sigmoid";
    case Activation::kRelu:
      return "relu";
    case Activation::kIdentity:
      return "identity";
  }
  return "identity";
}

Architecture Architecture::mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                               Activation hidden_activation, std::size_t classes) {
  if (classes < 2) throw InvalidArgument("classifier needs at least two classes");
  Architecture arch;
  arch.input_dim = input_dim;
  for (std::size_t w : hidden) arch.layers.push_back({w, hidden_activation});
  if (classes == 2) {
    arch.layers.push_back({1, Activation::kSigmoid});
  } else {
    arch.layers.push_back({classes, Activation::kIdentity});
  }
  return arch;
}

std::size_t ModelParams::input_dim() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weights.cols());
}

std::size_t ModelParams::output_dim() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weights.rows());
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.biases.size();
  return n;
}

void ModelParams::validate() const {
  if (layers.empty()) throw InvalidArgument("model has no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    if (l.biases.size() != l.weights.rows()) {
      throw DimensionMismatch("layer " + std::to_string(k) + ": bias length " +
                              std::to_string(l.biases.size()) + " != weight rows " +
                              std::to_string(l.weights.rows()));
    }
    if (k > 0 && l.weights.cols() != layers[k - 1].weights.rows()) {
      throw DimensionMismatch("layer " + std::to_string(k) + " input dim " +
                              std::to_string(l.weights.cols()) + " != previous output dim " +
                              std::to_string(layers[k - 1].weights.rows()));
    }
    if (!l.weights.allFinite() || !l.biases.allFinite()) {
      throw InvalidArgument("layer " + std::to_string(k) + " has non-finite entries");
    }
  }
  const auto& head = layers.back();
  if (head.weights.rows() == 1 && head.activation != Activation::kSigmoid) {
    throw InvalidArgument("single-output head must use sigmoid");
  }
  if (head.weights.rows() > 1 && head.activation != Activation::kIdentity) {
    throw InvalidArgument("multi-output head must be identity (softmax at loss time)");
  }
}

Vector ModelParams::flatten() const {
  Vector flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index pos = 0;
  for (const auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      flat.segment(pos, l.weights.cols()) = l.weights.row(r).transpose();
      pos += l.weights.cols();
    }
    flat.segment(pos, l.biases.size()) = l.biases;
    pos += l.biases.size();
  }
  return flat;
}

void ModelParams::assign_flat(const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count()) {
    throw DimensionMismatch("flat vector length " + std::to_string(flat.size()) +
                            " != parameter count " + std::to_string(parameter_count()));
  }
  Eigen::Index pos = 0;
  for (auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      l.weights.row(r) = flat.segment(pos, l.weights.cols()).transpose();
      pos += l.weights.cols();
    }
    l.biases = flat.segment(pos, l.biases.size());
    pos += l.biases.size();
  }
}

ModelParams init_params(const Architecture& arch, Rng& rng) {
  if (arch.input_dim == 0 || arch.layers.empty()) {
    throw InvalidArgument("architecture needs an input dimension and at least one layer");
  }
  ModelParams params;
  std::size_t fan_in = arch.input_dim;
  for (const auto& spec : arch.layers) {
    if (spec.width == 0) throw InvalidArgument("layer width must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Layer layer;
    layer.activation = spec.activation;
    layer.weights.resize(static_cast<Eigen::Index>(spec.width),
                         static_cast<Eigen::Index>(fan_in));
    layer.biases.resize(static_cast<Eigen::Index>(spec.width));
    // Row-major fill so the draw order matches the flattening order.
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = dist(rng);
    }
    for (Eigen::Index r = 0; r < layer.biases.size(); ++r) layer.biases(r) = dist(rng);
    params.layers.push_back(std::move(layer));
    fan_in = spec.width;
  }
  params.validate();
  return params;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

template <typename Derived>
void activate_inplace(Activation a, Eigen::MatrixBase<Derived>& z) {
  switch (a) {
    case Activation::kSigmoid:
      z = z.unaryExpr([](double v) { return sigmoid(v); });
      break;
    case Activation::kRelu:
      z = z.derived().cwiseMax(0.0);
      break;
    case Activation::kIdentity:
      break;
  }
}

// d activation / dz expressed through the post-activation (and pre for relu).
template <typename A, typename Z>
Matrix activation_slope(Activation a, const A& post, const Z& pre) {
  switch (a) {
    case Activation::kSigmoid:
      return post.array() * (1.0 - post.array());
    case Activation::kRelu:
      return (pre.array() > 0.0).template cast<double>();
    case Activation::kIdentity:
      return Matrix::Ones(post.rows(), post.cols());
  }
  return Matrix::Ones(post.rows(), post.cols());
}

void check_input(const ModelParams& params, Eigen::Index rows) {
  if (params.layers.empty()) throw InvalidArgument("model has no layers");
  if (static_cast<std::size_t>(rows) != params.input_dim()) {
    throw DimensionMismatch("input dimension " + std::to_string(rows) +
                            " != model input dimension " + std::to_string(params.input_dim()));
  }
}

// dL/dscore for one column of scores and soft targets.
template <typename S, typename T>
Vector score_residual(const S& score, const T& target) {
  if (score.size() == 1) {
    Vector r(1);
    r(0) = sigmoid(score(0)) - target(0);
    return r;
  }
  const double m = score.maxCoeff();
  Vector p = (score.array() - m).exp();
  p /= p.sum();
  return p * target.sum() - target;
}

}  // namespace

Vector apply_activation(Activation a, const Vector& z) {
  Vector out = z;
  activate_inplace(a, out);
  return out;
}

ForwardTrace forward(const ModelParams& params, const Vector& x) {
  check_input(params, x.size());
  ForwardTrace trace;
  trace.input = x;
  trace.pre.reserve(params.layers.size());
  trace.post.reserve(params.layers.size());
  const Vector* in = &trace.input;
  for (const auto& l : params.layers) {
    trace.pre.push_back(l.weights * (*in) + l.biases);
    trace.post.push_back(apply_activation(l.activation, trace.pre.back()));
    in = &trace.post.back();
  }
  trace.score = trace.pre.back();
  return trace;
}

double loss_from_score(const Vector& score, const Vector& target) {
  if (score.size() != target.size()) {
    throw DimensionMismatch("target length " + std::to_string(target.size()) +
                            " != score length " + std::to_string(score.size()));
  }
  if (score.size() == 1) {
    const double f = score(0);
    const double y = target(0);
    const double p = std::clamp(sigmoid(f), kProbClamp, 1.0 - kProbClamp);
    const double q = std::clamp(sigmoid(-f), kProbClamp, 1.0 - kProbClamp);
    return -y * std::log(p) - (1.0 - y) * std::log(q);
  }
  const double m = score.maxCoeff();
  const Vector shifted = score.array() - m;
  const double log_norm = std::log(shifted.array().exp().sum());
  double total = 0.0;
  for (Eigen::Index k = 0; k < score.size(); ++k) {
    if (target(k) == 0.0) continue;
    const double p = std::max(std::exp(shifted(k) - log_norm), kProbClamp);
    total -= target(k) * std::log(p);
  }
  return total;
}

double loss(const ForwardTrace& trace, const Vector& target) {
  return loss_from_score(trace.score, target);
}

GradSnapshot backward(const ForwardTrace& trace, const Vector& target,
                      const ModelParams& params) {
  if (trace.pre.size() != params.layers.size()) {
    throw DimensionMismatch("trace layer count does not match the model");
  }
  if (target.size() != trace.score.size()) {
    throw DimensionMismatch("target length does not match the score");
  }
  GradSnapshot grad;
  grad.flat.resize(static_cast<Eigen::Index>(params.parameter_count()));
  // Offsets of each layer's block in the flat vector.
  std::vector<Eigen::Index> offset(params.layers.size());
  Eigen::Index pos = 0;
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    offset[k] = pos;
    pos += params.layers[k].weights.size() + params.layers[k].biases.size();
  }

  Vector delta = score_residual(trace.score, target);
  for (std::size_t k = params.layers.size(); k-- > 0;) {
    const auto& l = params.layers[k];
    const Vector& a_prev = k == 0 ? trace.input : trace.post[k - 1];
    Eigen::Index p = offset[k];
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      grad.flat.segment(p, l.weights.cols()) = delta(r) * a_prev;
      p += l.weights.cols();
    }
    grad.flat.segment(p, l.biases.size()) = delta;
    if (k > 0) {
      const auto& below = params.layers[k - 1];
      const Matrix slope = activation_slope(below.activation, trace.post[k - 1], trace.pre[k - 1]);
      delta = (l.weights.transpose() * delta).cwiseProduct(slope.col(0));
    }
  }
  return grad;
}

GradSnapshot finite_diff_grad(const ModelParams& params, const Vector& x,
                              const Vector& target, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  ModelParams probe = params;
  Vector theta = params.flatten();
  GradSnapshot grad;
  grad.flat.resize(theta.size());
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double saved = theta(k);
    theta(k) = saved + eps;
    probe.assign_flat(theta);
    const double up = loss(forward(probe, x), target);
    theta(k) = saved - eps;
    probe.assign_flat(theta);
    const double down = loss(forward(probe, x), target);
    theta(k) = saved;
    grad.flat(k) = (up - down) / (2.0 * eps);
  }
  return grad;
}

void apply_sgd(ModelParams& params, const Vector& grad_flat, double eta) {
  if (!(eta > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (static_cast<std::size_t>(grad_flat.size()) != params.parameter_count()) {
    throw DimensionMismatch("gradient length " + std::to_string(grad_flat.size()) +
                            " != parameter count " + std::to_string(params.parameter_count()));
  }
  if (!grad_flat.allFinite()) throw InvalidArgument("gradient has non-finite entries");
  Eigen::Index pos = 0;
  for (auto& l : params.layers) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      l.weights.row(r) -= eta * grad_flat.segment(pos, l.weights.cols()).transpose();
      pos += l.weights.cols();
    }
    l.biases -= eta * grad_flat.segment(pos, l.biases.size());
    pos += l.biases.size();
  }
}

ModelParams sgd_step(const ModelParams& params, const GradSnapshot& grad, double eta) {
  ModelParams next = params;
  apply_sgd(next, grad.flat, eta);
  return next;
}

BatchOutput forward_batch(const ModelParams& params, const Matrix& inputs) {
  check_input(params, inputs.rows());
  BatchOutput out;
  out.post.reserve(params.layers.size());
  const Matrix* in = &inputs;
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    const auto& l = params.layers[k];
    Matrix z = l.weights * (*in);
    z.colwise() += l.biases;
    if (k + 1 == params.layers.size()) out.score = z;
    activate_inplace(l.activation, z);
    out.post.push_back(std::move(z));
    in = &out.post.back();
  }
  return out;
}

Vector batch_losses(const Matrix& score, const Matrix& targets) {
  if (score.rows() != targets.rows() || score.cols() != targets.cols()) {
    throw DimensionMismatch("target matrix shape does not match the scores");
  }
  Vector losses(score.cols());
  for (Eigen::Index c = 0; c < score.cols(); ++c) {
    losses(c) = loss_from_score(score.col(c), targets.col(c));
  }
  return losses;
}

BatchGrad batch_gradient(const ModelParams& params, const Matrix& inputs,
                         const Matrix& targets) {
  const BatchOutput fwd = forward_batch(params, inputs);
  const Eigen::Index n = inputs.cols();
  if (n == 0) throw InvalidArgument("empty batch");
  if (targets.cols() != n || targets.rows() != fwd.score.rows()) {
    throw DimensionMismatch("target matrix shape does not match the batch");
  }
  BatchGrad result;
  result.mean_loss = batch_losses(fwd.score, targets).mean();

  Matrix delta(fwd.score.rows(), n);
  for (Eigen::Index c = 0; c < n; ++c) delta.col(c) = score_residual(fwd.score.col(c), targets.col(c));
  delta /= static_cast<double>(n);

  result.flat.resize(static_cast<Eigen::Index>(params.parameter_count()));
  std::vector<Eigen::Index> offset(params.layers.size());
  Eigen::Index pos = 0;
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    offset[k] = pos;
    pos += params.layers[k].weights.size() + params.layers[k].biases.size();
  }
  for (std::size_t k = params.layers.size(); k-- > 0;) {
    const auto& l = params.layers[k];
    const Matrix& a_prev = k == 0 ? inputs : fwd.post[k - 1];
    // Row-major weight block: map as a transposed column-major matrix.
    Eigen::Map<Matrix> gw_t(result.flat.data() + offset[k], l.weights.cols(), l.weights.rows());
    gw_t.noalias() = a_prev * delta.transpose();
    result.flat.segment(offset[k] + l.weights.size(), l.biases.size()) = delta.rowwise().sum();
    if (k > 0) {
      const auto& below = params.layers[k - 1];
      Matrix back = l.weights.transpose() * delta;
      if (below.activation == Activation::kSigmoid) {
        back.array() *= fwd.post[k - 1].array() * (1.0 - fwd.post[k - 1].array());
      } else if (below.activation == Activation::kRelu) {
        back.array() *= (fwd.post[k - 1].array() > 0.0).cast<double>();
      }
      delta = std::move(back);
    }
  }
  return result;
}

std::vector<int> predict_classes(const Matrix& score) {
  std::vector<int> out(static_cast<std::size_t>(score.cols()));
  for (Eigen::Index c = 0; c < score.cols(); ++c) {
    if (score.rows() == 1) {
      out[static_cast<std::size_t>(c)] = score(0, c) > 0.0 ? 1 : 0;
    } else {
      Eigen::Index best = 0;
      score.col(c).maxCoeff(&best);
      out[static_cast<std::size_t>(c)] = static_cast<int>(best);
    }
  }
  return out;
}

}  // namespace mixlab::nn
