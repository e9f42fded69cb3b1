#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mixlab/errors.hpp"
#include "mixlab/metrics.hpp"
#include "mixlab/nn.hpp"

using namespace mixlab;
using namespace mixlab::metrics;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v(k++) = x;
  return v;
}

nn::ModelParams relu_net(const Vector& first_bias) {
  nn::ModelParams p;
  const auto w = first_bias.size();
  p.layers.push_back({Matrix::Zero(w, 2), first_bias, nn::Activation::kRelu});
  p.layers.push_back({Matrix::Ones(1, w), Vector::Zero(1), nn::Activation::kSigmoid});
  return p;
}

}  // namespace

TEST(Benr, Examples) {
  const std::vector<Vector> single{vec({3, 4})};
  EXPECT_NEAR(benr(single), 1.0, 1e-15);
  const std::vector<Vector> opposite{vec({1, 2}), vec({-1, -2})};
  EXPECT_THROW(benr(opposite), DegenerateInput);
  const std::vector<Vector> ortho{vec({1, 0}), vec({0, 1})};
  EXPECT_NEAR(benr(ortho), std::sqrt(2.0), 1e-15);
}

TEST(Benr, AtLeastOneWhenBatchesComposeTheEpoch) {
  Rng rng(2);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Vector> ups;
    for (int b = 0; b < 1 + trial % 7; ++b) {
      Vector u(5);
      for (auto& x : u) x = n(rng);
      ups.push_back(u);
    }
    EXPECT_GE(benr(ups), 1.0 - 1e-12);
  }
}

TEST(Benr, FromDynamicsAndPreconditions) {
  EpochDynamics d;
  d.batch_update_norms = {1.0, 1.0};
  d.epoch_update = vec({1, 1});
  EXPECT_NEAR(benr(d), std::sqrt(2.0), 1e-15);
  d.batch_update_norms.clear();
  EXPECT_THROW(benr(d), InvalidArgument);
}

TEST(Atd, Examples) {
  EXPECT_EQ(atd(vec({1, 2, 3}), vec({1, 2, 3})), 0.0);
  EXPECT_DOUBLE_EQ(atd(vec({0, 0, 0}), vec({3, 4, 0})), 5.0);
  const Vector a = vec({0.3, -1.2, 4.0, 0.5});
  const Vector b = vec({1.1, 0.2, -0.7, 2.0});
  EXPECT_NEAR(atd(2.0 * a, 2.0 * b), 2.0 * atd(a, b), 1e-14);
  EXPECT_THROW(atd(vec({1, 2}), vec({1})), DimensionMismatch);
  EXPECT_GT(atd(a, a + Vector::Constant(4, 1e-9)), 0.0);

  EpochDynamics d;
  d.activations_ref = vec({0, 0});
  d.activations_now = vec({0, 2});
  EXPECT_EQ(atd(d), 2.0);
}

TEST(CosStats, Examples) {
  const std::vector<std::pair<Vector, Vector>> same{{vec({1, 2}), vec({1, 2})}};
  auto s = grad_cos_stats(same);
  EXPECT_NEAR(s.avg_cos, 1.0, 1e-15);
  EXPECT_EQ(s.prop_lt_half, 0.0);
  EXPECT_EQ(s.prop_lt_zero, 0.0);

  const std::vector<std::pair<Vector, Vector>> ortho{{vec({1, 0}), vec({0, 1})}};
  s = grad_cos_stats(ortho);
  EXPECT_EQ(s.avg_cos, 0.0);
  EXPECT_EQ(s.prop_lt_half, 1.0);
  EXPECT_EQ(s.prop_lt_zero, 0.0);

  const std::vector<std::pair<Vector, Vector>> anti{{vec({1, 0}), vec({-1, 0})}};
  s = grad_cos_stats(anti);
  EXPECT_EQ(s.avg_cos, -1.0);
  EXPECT_EQ(s.prop_lt_half, 1.0);
  EXPECT_EQ(s.prop_lt_zero, 1.0);
}

TEST(CosStats, ZeroNormPairsExcluded) {
  const std::vector<std::pair<Vector, Vector>> pairs{
      {vec({1, 0}), vec({1, 0})}, {vec({0, 0}), vec({1, 0})}, {vec({1, 0}), vec({-1, 0})}};
  const auto s = grad_cos_stats(pairs);
  EXPECT_EQ(s.pair_count, 2u);
  EXPECT_EQ(s.excluded, 1u);
  EXPECT_EQ(s.avg_cos, 0.0);
  EXPECT_LE(s.prop_lt_zero, s.prop_lt_half);
  const std::vector<std::pair<Vector, Vector>> none{{vec({0, 0}), vec({1, 0})}};
  EXPECT_THROW(grad_cos_stats(none), DegenerateInput);
}

TEST(GradRate, Examples) {
  EXPECT_EQ(grad_rate(vec({2, 0}), vec({1, 0})), 0.0);
  EXPECT_DOUBLE_EQ(grad_rate(vec({1, 1}), vec({1, 0})), 1.0);
  EXPECT_DOUBLE_EQ(grad_rate(vec({0, 2}), vec({1, 0})), 2.0);
  EXPECT_THROW(grad_rate(vec({1, 1}), vec({0, 0})), InvalidArgument);
}

TEST(GradRate, ScalingLaws) {
  const Vector mix = vec({0.3, -1.0, 2.2});
  const Vector van = vec({1.5, 0.4, -0.2});
  const double r = grad_rate(mix, van);
  EXPECT_NEAR(grad_rate(3.0 * mix, van), 3.0 * r, 1e-14);
  EXPECT_NEAR(grad_rate(mix, 4.0 * van), r / 4.0, 1e-14);
}

TEST(ZeroActivations, ReluCounts) {
  const Vector x = vec({0.5, -0.5});
  const auto all_neg = relu_net(Vector::Constant(256, -1.0));
  const std::vector<nn::ForwardTrace> t1{nn::forward(all_neg, x)};
  EXPECT_EQ(zero_activation_count(t1, ZeroMode::kRelu, 0.0), 256.0);

  const auto all_pos = relu_net(Vector::Constant(256, 1.0));
  const std::vector<nn::ForwardTrace> t2{nn::forward(all_pos, x)};
  EXPECT_EQ(zero_activation_count(t2, ZeroMode::kRelu, 0.0), 0.0);

  Vector mixed = Vector::Constant(10, 0.7);
  mixed(1) = -0.1;
  mixed(4) = 0.0;
  mixed(8) = -3.0;
  const auto three = relu_net(mixed);
  const std::vector<nn::ForwardTrace> t3{nn::forward(three, x), nn::forward(three, -x)};
  EXPECT_EQ(zero_activation_count(t3, ZeroMode::kRelu, 0.0), 3.0);
}

TEST(ZeroActivations, BatchFormAgreesWithTraces) {
  Rng rng(6);
  const auto p = nn::init_params(nn::Architecture::mlp(4, {12, 9}, nn::Activation::kRelu, 3), rng);
  Matrix x(4, 20);
  std::normal_distribution<double> n;
  for (auto& v : x.reshaped()) v = n(rng);
  std::vector<nn::ForwardTrace> traces;
  for (int k = 0; k < 20; ++k) traces.push_back(nn::forward(p, x.col(k)));
  EXPECT_NEAR(zero_activation_count(traces, ZeroMode::kRelu, 0.0),
              zero_activation_count(p, nn::forward_batch(p, x), ZeroMode::kRelu, 0.0), 1e-12);
}

TEST(ZeroActivations, SigmoidSaturation) {
  nn::ModelParams p;
  Vector b(4);
  b << -40, 40, 0, 2;
  p.layers.push_back({Matrix::Zero(4, 1), b, nn::Activation::kSigmoid});
  p.layers.push_back({Matrix::Ones(1, 4), Vector::Zero(1), nn::Activation::kSigmoid});
  const std::vector<nn::ForwardTrace> t{nn::forward(p, vec({1}))};
  EXPECT_EQ(zero_activation_count(t, ZeroMode::kSigmoidSaturation, kSigmoidSaturationTol), 2.0);
  EXPECT_THROW(zero_activation_count(t, ZeroMode::kRelu, -1.0), InvalidArgument);
}
