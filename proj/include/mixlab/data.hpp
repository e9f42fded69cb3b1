#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string_view>
#include <vector>

#include "mixlab/nn.hpp"

namespace mixlab::data {

struct Sample {
  std::int64_t id = 0;
  Vector features;
  int label = 0;
};

enum class Normalization { kNone, kStandardize, kGlobalScale };

Normalization parse_normalization(std::string_view name);
std::string_view to_string(Normalization n);

/// Floor on the per-feature standard deviation when standardizing.
inline constexpr double kStdFloor = 1e-8;

/// Ordered, immutable-by-convention collection of samples.
struct Dataset {
  std::vector<Sample> samples;
  Normalization normalization = Normalization::kNone;
  int class_count = 2;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  std::size_t dim() const { return samples.empty() ? 0 : samples.front().features.size(); }

  /// Throws on duplicate ids, ragged features or out-of-range labels.
  void validate() const;

  /// Features as columns, [dim x n].
  Matrix feature_matrix() const;
  /// One-hot targets as columns: [1 x n] for two classes, [k x n] otherwise.
  Matrix target_matrix() const;

  std::vector<std::int64_t> ids() const;
  /// Subset in this dataset's order; throws InvalidArgument on unknown ids.
  Dataset subset(const std::set<std::int64_t>& keep) const;
};

/// Soft-label form of a hard label: scalar y for binary, one-hot otherwise.
Vector soft_label(int label, int class_count);

struct TwoGaussianSpec {
  std::size_t n_per_class = 0;
  std::size_t dim = 1;
  double separation = 2.0;
  double sigma = 1.0;
};

/// Unit direction u shared by all draws from `seed`.
Vector separation_direction(std::size_t dim, std::uint64_t seed);

/// Class 0 ~ N(+s/2 u, sigma^2 I), class 1 ~ N(-s/2 u, sigma^2 I); ids are
/// assigned 0..2n-1 with the two classes interleaved.
Dataset gen_two_gaussians(const TwoGaussianSpec& spec, std::uint64_t seed);

struct KGaussianSpec {
  std::size_t n_per_class = 0;
  std::size_t classes = 3;
  std::size_t dim = 1;
  double separation = 2.0;  // norm of each class mean
  double sigma = 1.0;
};

/// k isotropic Gaussian blobs around seeded random means of norm `separation`.
Dataset gen_k_gaussians(const KGaussianSpec& spec, std::uint64_t seed);

// CIFAR-10 binary layout: 1 label byte followed by 3x32x32 channel-major pixels.
inline constexpr std::size_t kCifarPixels = 3072;
inline constexpr std::size_t kCifarRecordBytes = kCifarPixels + 1;

struct RawCifarRecord {
  std::uint8_t label = 0;
  std::vector<std::uint8_t> pixels;  // kCifarPixels bytes
};

std::vector<RawCifarRecord> read_cifar10_records(const std::filesystem::path& path);
void write_cifar10_records(const std::filesystem::path& path,
                           const std::vector<RawCifarRecord>& records);

/// Loads one or more batch files, keeps the listed classes and re-indexes
/// them densely in ascending class order. Pixels scale to [0, 1]; sample ids
/// are global record indices across the files.
Dataset load_cifar10_binary(const std::vector<std::filesystem::path>& paths,
                            const std::set<int>& keep_classes);

Dataset normalize(const Dataset& dataset, Normalization scheme);

/// Statistics of the per-feature standardization, for applying the training
/// set's transform to a validation split.
struct FeatureStats {
  Vector mean;
  Vector stddev;
  double max_abs = 1.0;
};

FeatureStats feature_stats(const Dataset& dataset);
Dataset apply_normalization(const Dataset& dataset, Normalization scheme,
                            const FeatureStats& stats);

}  // namespace mixlab::data
