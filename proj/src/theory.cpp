#include "mixlab/theory.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "mixlab/data.hpp"
#include "mixlab/errors.hpp"

namespace mixlab::theory {

namespace {

void check_pair(const EarlyPhasePair& pair) {
  if (pair.x_pos.size() != pair.x_neg.size()) {
    throw DimensionMismatch("early-phase pair has mismatched dimensions");
  }
}

}  // namespace

Vector vanilla_grad_early(const EarlyPhasePair& pair) {
  check_pair(pair);
  return pair.x_neg - pair.x_pos;
}

Vector mix_grad_early(const EarlyPhasePair& pair) {
  check_pair(pair);
  return -0.25 * (pair.x_pos + pair.x_neg);
}

Vector total_grad_early(const EarlyPhasePair& pair) {
  check_pair(pair);
  return -1.25 * pair.x_pos + 0.75 * pair.x_neg;
}

double cosine(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionMismatch("cosine of vectors of different length");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw DegenerateInput("cosine of a zero vector");
  return a.dot(b) / (na * nb);
}

PairSource two_gaussian_pairs(std::size_t dim, double separation, double sigma,
                              std::uint64_t direction_seed) {
  if (dim == 0) throw InvalidArgument("dimension must be at least 1");
  if (!(sigma >= 0.0)) throw InvalidArgument("sigma must be non-negative");
  const Vector mu_pos = 0.5 * separation * data::separation_direction(dim, direction_seed);
  return [mu_pos, sigma](Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    EarlyPhasePair p;
    p.x_pos.resize(mu_pos.size());
    p.x_neg.resize(mu_pos.size());
    for (Eigen::Index k = 0; k < mu_pos.size(); ++k) p.x_pos(k) = mu_pos(k) + sigma * normal(rng);
    for (Eigen::Index k = 0; k < mu_pos.size(); ++k) p.x_neg(k) = -mu_pos(k) + sigma * normal(rng);
    return p;
  };
}

double interference_strength(std::span<const EarlyPhasePair> pairs, std::span<const int> signs) {
  if (pairs.empty()) throw InvalidArgument("interference strength needs at least one pair");
  if (signs.size() != pairs.size()) throw DimensionMismatch("one sign per pair required");
  Vector vanilla = Vector::Zero(pairs.front().x_pos.size());
  Vector mix = Vector::Zero(vanilla.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    vanilla += vanilla_grad_early(pairs[k]);
    mix += static_cast<double>(signs[k]) * 0.25 * (pairs[k].x_pos + pairs[k].x_neg);
  }
  const double denom = vanilla.norm();
  if (denom == 0.0) throw DegenerateInput("vanilla gradient vanished (no class signal)");
  return mix.norm() / denom;
}

InterferenceEstimate interference_sweep(const PairSource& source,
                                        std::span<const std::size_t> n_values,
                                        std::span<const std::uint64_t> seeds) {
  if (n_values.size() < 2) throw InvalidArgument("interference sweep needs at least two N values");
  if (seeds.empty()) throw InvalidArgument("interference sweep needs at least one seed");
  for (std::size_t k = 0; k < n_values.size(); ++k) {
    if (n_values[k] == 0 || (k > 0 && n_values[k] <= n_values[k - 1])) {
      throw InvalidArgument("N values must be positive and strictly increasing");
    }
  }
  InterferenceEstimate est;
  std::vector<double> log_n;
  std::vector<double> log_eps;
  for (std::size_t n : n_values) {
    double sum = 0.0;
    for (std::uint64_t seed : seeds) {
      const SeedTree tree(seed);
      Rng pair_rng = tree.stream("pairs", n);
      Rng sign_rng = tree.stream("signs", n);
      std::bernoulli_distribution coin(0.5);
      Vector vanilla;
      Vector mix;
      for (std::size_t k = 0; k < n; ++k) {
        const EarlyPhasePair p = source(pair_rng);
        if (k == 0) {
          vanilla = Vector::Zero(p.x_pos.size());
          mix = Vector::Zero(p.x_pos.size());
        }
        vanilla += p.x_neg - p.x_pos;
        const double s = coin(sign_rng) ? 0.25 : -0.25;
        mix += s * (p.x_pos + p.x_neg);
      }
      const double denom = vanilla.norm();
      if (denom == 0.0) {
        throw DegenerateInput("vanilla gradient vanished at N=" + std::to_string(n) +
                              " seed=" + std::to_string(seed));
      }
      const double eps = mix.norm() / denom;
      est.points.push_back({n, seed, eps});
      sum += eps;
    }
    const double mean = sum / static_cast<double>(seeds.size());
    est.n_values.push_back(n);
    est.mean_epsilon.push_back(mean);
    log_n.push_back(std::log(static_cast<double>(n)));
    log_eps.push_back(std::log(mean));
  }
  est.fitted_slope = ols_slope(log_n, log_eps);
  return est;
}

double ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidArgument("slope fit needs at least two paired points");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  if (sxx == 0.0) throw DegenerateInput("slope fit with constant abscissa");
  return sxy / sxx;
}

double relative_fluctuation(double sigma, double grad_norm) {
  if (!(grad_norm > 0.0)) throw InvalidArgument("gradient norm must be positive");
  return sigma / grad_norm;
}

EquivalenceSolution equivalence_lambda(double f_loss, double f_plus, double f_minus) {
  if (f_plus == f_minus) throw InvalidArgument("zero-loss anchors must have distinct scores");
  if (!(f_minus < f_plus)) throw InvalidArgument("expected f_minus < f_plus");
  EquivalenceSolution s;
  s.f_loss = f_loss;
  s.f_plus = f_plus;
  s.f_minus = f_minus;
  s.M = 0.5 * (f_plus - f_minus);
  s.lambda_star = (f_loss - f_minus) / (f_plus - f_minus);
  s.delta = std::abs(s.lambda_star - 0.5);
  return s;
}

double mixed_score(double lambda, double f_plus, double f_minus) {
  return f_minus + lambda * (f_plus - f_minus);
}

double softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

double loss_at_lambda(double lambda, double M, int y) {
  if (!(M > 0.0)) throw InvalidArgument("M must be positive");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in [0, 1]");
  if (y != 0 && y != 1) throw InvalidArgument("label must be 0 or 1");
  const double f = M * (2.0 * lambda - 1.0);
  return y == 1 ? softplus(-f) : softplus(f);
}

BenrPair benr_theoretical(const Vector& x1, const Vector& x2, const Vector& x3) {
  if (x1.size() != x2.size() || x1.size() != x3.size()) {
    throw DimensionMismatch("BENR triple has mismatched dimensions");
  }
  BenrPair out;
  const double vanilla_den = (x1 + x2 - x3).norm();
  if (vanilla_den == 0.0) throw DegenerateInput("vanilla epoch update vanishes");
  out.vanilla = (x1.norm() + x2.norm() + x3.norm()) / vanilla_den;

  // m12 mixes two positives; m13 and m23 mix a positive with the negative.
  const Vector g12 = -1.5 * (x1 + x2);
  const Vector g13 = total_grad_early({x1, x3});
  const Vector g23 = total_grad_early({x2, x3});
  const double mix_den = (g12 + g13 + g23).norm();
  if (mix_den == 0.0) throw DegenerateInput("mixup epoch update vanishes");
  out.mix = (g12.norm() + g13.norm() + g23.norm()) / mix_den;
  return out;
}

}  // namespace mixlab::theory
