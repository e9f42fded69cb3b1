#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mixlab/data.hpp"
#include "mixlab/mixup.hpp"
#include "mixlab/nn.hpp"
#include "mixlab/strategies.hpp"

namespace mixlab::runner {

using Json = nlohmann::json;

struct DatasetSpec {
  std::string source = "two_gaussians";  // two_gaussians | k_gaussians | cifar10
  // Synthetic sources.
  std::size_t n_per_class = 500;
  std::size_t n_val_per_class = 250;
  std::size_t dim = 64;
  std::size_t classes = 2;
  double separation = 2.0;
  double sigma = 1.0;
  // Fixed data seed; when absent the data is drawn from the run seed.
  std::optional<std::uint64_t> seed;
  // CIFAR-10 binary batches.
  std::vector<std::string> train_files;
  std::vector<std::string> val_files;
  std::set<int> keep_classes{0, 1};
  double val_fraction = 0.2;  // used when val_files is empty
  std::optional<std::size_t> max_train;  // optional cap, applied after filtering
  data::Normalization normalization = data::Normalization::kStandardize;
};

struct ModelSpec {
  std::vector<std::size_t> hidden{256};
  nn::Activation hidden_activation = nn::Activation::kSigmoid;
};

struct OptimizerSpec {
  double eta = 0.1;
  std::size_t batch_size = 32;
  int epochs = 10;
};

struct MixupSpec {
  std::optional<double> alpha;  // empty: no Mixup
  mixup::LambdaMode lambda_mode = mixup::LambdaMode::kPerBatch;
};

enum class StrategyKind { kNone, kPause, kBoost, kHighLossRemoval };

std::string to_string(StrategyKind k);

struct StrategySpec {
  StrategyKind kind = StrategyKind::kNone;
  strategies::EnpWindow window;
  std::optional<double> enp_alpha;  // boost only
  double k_percent = 0.85;          // high_loss_removal only
  std::optional<int> teacher_epochs;  // defaults to optimizer.epochs
};

struct MetricToggles {
  bool benr = true;
  bool atd = true;
  bool zero_activations = true;
  bool cos_probe = false;
  bool grad_rate = false;
  std::size_t probe_size = 512;   // ATD probe subset of the validation split
  std::size_t cos_pairs = 0;      // pairs per epoch for the cosine probe; 0 = all
  std::optional<double> grad_rate_alpha;  // defaults to the Mixup alpha, else 1
};

struct RunConfig {
  std::string name = "run";
  DatasetSpec dataset;
  ModelSpec model;
  OptimizerSpec optimizer;
  MixupSpec mixup;
  StrategySpec strategy;
  MetricToggles metrics;
  std::uint64_t seed = 0;
  std::string out_dir;
  bool desk_scale = true;
  Json recipe;  // free-form reference fields carried by recipe fixtures

  static RunConfig from_json(const Json& j);
  Json to_json() const;

  /// Checks every module precondition; throws InvalidArgument.
  void validate() const;

  /// Stable hash of the configuration without seed, output directory and
  /// name. Object keys are canonically ordered, so field order is irrelevant.
  std::string hash() const;

  strategies::MixupSchedule schedule() const;
};

RunConfig load_config(const std::filesystem::path& path);

}  // namespace mixlab::runner
