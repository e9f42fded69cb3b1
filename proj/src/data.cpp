#include "mixlab/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <string>
#include <unordered_set>

#include "mixlab/errors.hpp"
#include "mixlab/rng.hpp"

namespace mixlab::data {

Normalization parse_normalization(std::string_view name) {
  if (name == "none") return Normalization::kNone;
  if (name == "standardize" || name == "per-feature-standardize") return Normalization::kStandardize;
  if (name == "global-scale" || name == "global_scale") return Normalization::kGlobalScale;
  throw InvalidArgument("unknown normalization '" + std::string(name) + "'");
}

std::string_view to_string(Normalization n) {
  switch (n) {
    case Normalization::kNone:
      return "none";
    case Normalization::kStandardize:
      return "standardize";
    case Normalization::kGlobalScale:
      return "global-scale";
  }
  return "none";
}

void Dataset::validate() const {
  if (class_count < 2) throw InvalidArgument("class_count must be at least 2");
  std::unordered_set<std::int64_t> seen;
  seen.reserve(samples.size());
  const std::size_t d = dim();
  for (const auto& s : samples) {
    if (!seen.insert(s.id).second) {
      throw InvalidArgument("duplicate sample id " + std::to_string(s.id));
    }
    if (static_cast<std::size_t>(s.features.size()) != d) {
      throw DimensionMismatch("sample " + std::to_string(s.id) + " has feature dimension " +
                              std::to_string(s.features.size()) + ", expected " +
                              std::to_string(d));
    }
    if (s.label < 0 || s.label >= class_count) {
      throw InvalidArgument("sample " + std::to_string(s.id) + " label " +
                            std::to_string(s.label) + " outside [0, " +
                            std::to_string(class_count) + ")");
    }
  }
}

Matrix Dataset::feature_matrix() const {
  Matrix m(static_cast<Eigen::Index>(dim()), static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    m.col(static_cast<Eigen::Index>(i)) = samples[i].features;
  }
  return m;
}

Vector soft_label(int label, int class_count) {
  if (class_count == 2) {
    Vector y(1);
    y(0) = label == 1 ? 1.0 : 0.0;
    return y;
  }
  Vector y = Vector::Zero(class_count);
  y(label) = 1.0;
  return y;
}

Matrix Dataset::target_matrix() const {
  const Eigen::Index rows = class_count == 2 ? 1 : class_count;
  Matrix m = Matrix::Zero(rows, static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    if (class_count == 2) {
      m(0, c) = samples[i].label == 1 ? 1.0 : 0.0;
    } else {
      m(samples[i].label, c) = 1.0;
    }
  }
  return m;
}

std::vector<std::int64_t> Dataset::ids() const {
  std::vector<std::int64_t> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.id);
  return out;
}

Dataset Dataset::subset(const std::set<std::int64_t>& keep) const {
  Dataset out;
  out.normalization = normalization;
  out.class_count = class_count;
  std::size_t matched = 0;
  for (const auto& s : samples) {
    if (keep.count(s.id)) {
      out.samples.push_back(s);
      ++matched;
    }
  }
  if (matched != keep.size()) {
    for (std::int64_t id : keep) {
      const bool found = std::any_of(samples.begin(), samples.end(),
                                     [id](const Sample& s) { return s.id == id; });
      if (!found) throw InvalidArgument("unknown sample id " + std::to_string(id));
    }
  }
  return out;
}

Vector separation_direction(std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw InvalidArgument("dimension must be at least 1");
  Rng rng = SeedTree(seed).stream("direction");
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector u(static_cast<Eigen::Index>(dim));
  do {
    for (Eigen::Index k = 0; k < u.size(); ++k) u(k) = normal(rng);
  } while (u.norm() == 0.0);
  return u / u.norm();
}

Dataset gen_two_gaussians(const TwoGaussianSpec& spec, std::uint64_t seed) {
  if (spec.n_per_class == 0) throw InvalidArgument("n_per_class must be positive (empty class)");
  if (spec.dim == 0) throw InvalidArgument("dimension must be at least 1");
  if (!(spec.sigma >= 0.0)) throw InvalidArgument("sigma must be non-negative");
  const Vector u = separation_direction(spec.dim, seed);
  const Vector mu_plus = 0.5 * spec.separation * u;
  const Vector mu_minus = -mu_plus;

  Rng rng = SeedTree(seed).stream("samples");
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset ds;
  ds.class_count = 2;
  ds.samples.reserve(2 * spec.n_per_class);
  const auto d = static_cast<Eigen::Index>(spec.dim);
  for (std::size_t k = 0; k < spec.n_per_class; ++k) {
    for (int label = 0; label < 2; ++label) {
      Sample s;
      s.id = static_cast<std::int64_t>(2 * k + static_cast<std::size_t>(label));
      s.label = label;
      s.features.resize(d);
      for (Eigen::Index j = 0; j < d; ++j) s.features(j) = spec.sigma * normal(rng);
      s.features += label == 0 ? mu_plus : mu_minus;
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

Dataset gen_k_gaussians(const KGaussianSpec& spec, std::uint64_t seed) {
  if (spec.n_per_class == 0) throw InvalidArgument("n_per_class must be positive (empty class)");
  if (spec.classes < 2) throw InvalidArgument("need at least two classes");
  if (spec.dim == 0) throw InvalidArgument("dimension must be at least 1");
  if (!(spec.sigma >= 0.0)) throw InvalidArgument("sigma must be non-negative");
  const SeedTree tree(seed);
  std::vector<Vector> means;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    means.push_back(spec.separation * separation_direction(spec.dim, tree.derive("mean", c)));
  }
  Rng rng = tree.stream("samples");
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset ds;
  ds.class_count = static_cast<int>(spec.classes);
  const auto d = static_cast<Eigen::Index>(spec.dim);
  for (std::size_t k = 0; k < spec.n_per_class; ++k) {
    for (std::size_t c = 0; c < spec.classes; ++c) {
      Sample s;
      s.id = static_cast<std::int64_t>(k * spec.classes + c);
      s.label = static_cast<int>(c);
      s.features.resize(d);
      for (Eigen::Index j = 0; j < d; ++j) s.features(j) = spec.sigma * normal(rng);
      s.features += means[c];
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

std::vector<RawCifarRecord> read_cifar10_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open CIFAR-10 file '" + path.string() + "'");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % kCifarRecordBytes != 0) {
    throw FormatError("CIFAR-10 file '" + path.string() + "' has " +
                      std::to_string(bytes.size()) + " bytes, not a multiple of " +
                      std::to_string(kCifarRecordBytes));
  }
  const std::size_t n = bytes.size() / kCifarRecordBytes;
  std::vector<RawCifarRecord> records(n);
  for (std::size_t r = 0; r < n; ++r) {
    const char* rec = bytes.data() + r * kCifarRecordBytes;
    const auto label = static_cast<std::uint8_t>(rec[0]);
    if (label > 9) {
      throw FormatError("CIFAR-10 file '" + path.string() + "' record " + std::to_string(r) +
                        " has corrupt label byte " + std::to_string(label));
    }
    records[r].label = label;
    records[r].pixels.assign(reinterpret_cast<const std::uint8_t*>(rec + 1),
                             reinterpret_cast<const std::uint8_t*>(rec + kCifarRecordBytes));
  }
  return records;
}

void write_cifar10_records(const std::filesystem::path& path,
                           const std::vector<RawCifarRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write CIFAR-10 file '" + path.string() + "'");
  for (const auto& r : records) {
    if (r.pixels.size() != kCifarPixels) {
      throw InvalidArgument("CIFAR-10 record must carry exactly 3072 pixel bytes");
    }
    if (r.label > 9) throw InvalidArgument("CIFAR-10 label must be in [0, 9]");
    out.put(static_cast<char>(r.label));
    out.write(reinterpret_cast<const char*>(r.pixels.data()),
              static_cast<std::streamsize>(r.pixels.size()));
  }
}

Dataset load_cifar10_binary(const std::vector<std::filesystem::path>& paths,
                            const std::set<int>& keep_classes) {
  if (keep_classes.empty()) throw InvalidArgument("keep_classes must not be empty");
  for (int c : keep_classes) {
    if (c < 0 || c > 9) throw InvalidArgument("CIFAR-10 class ids are 0..9");
  }
  std::map<int, int> remap;
  for (int c : keep_classes) remap.emplace(c, static_cast<int>(remap.size()));

  Dataset ds;
  ds.class_count = std::max<int>(2, static_cast<int>(keep_classes.size()));
  std::int64_t global = 0;
  for (const auto& path : paths) {
    for (const auto& rec : read_cifar10_records(path)) {
      const std::int64_t id = global++;
      auto it = remap.find(rec.label);
      if (it == remap.end()) continue;
      Sample s;
      s.id = id;
      s.label = it->second;
      s.features.resize(static_cast<Eigen::Index>(kCifarPixels));
      for (std::size_t k = 0; k < kCifarPixels; ++k) {
        s.features(static_cast<Eigen::Index>(k)) = static_cast<double>(rec.pixels[k]) / 255.0;
      }
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

FeatureStats feature_stats(const Dataset& dataset) {
  if (dataset.empty()) throw InvalidArgument("cannot normalize an empty dataset");
  const Matrix x = dataset.feature_matrix();
  FeatureStats st;
  const double n = static_cast<double>(x.cols());
  st.mean = x.rowwise().sum() / n;
  const Matrix centered = x.colwise() - st.mean;
  st.stddev = (centered.array().square().rowwise().sum() / n).sqrt().matrix();
  st.stddev = st.stddev.cwiseMax(kStdFloor);
  st.max_abs = x.cwiseAbs().maxCoeff();
  return st;
}

Dataset apply_normalization(const Dataset& dataset, Normalization scheme,
                            const FeatureStats& stats) {
  Dataset out = dataset;
  out.normalization = scheme;
  switch (scheme) {
    case Normalization::kNone:
      break;
    case Normalization::kStandardize:
      for (auto& s : out.samples) {
        s.features = ((s.features - stats.mean).array() / stats.stddev.array()).matrix();
        // Floored columns are constant; pin them to exact zeros.
        for (Eigen::Index j = 0; j < s.features.size(); ++j) {
          if (stats.stddev(j) <= kStdFloor) s.features(j) = 0.0;
        }
      }
      break;
    case Normalization::kGlobalScale:
      if (stats.max_abs > 0.0) {
        for (auto& s : out.samples) s.features /= stats.max_abs;
      }
      break;
  }
  return out;
}

Dataset normalize(const Dataset& dataset, Normalization scheme) {
  return apply_normalization(dataset, scheme, feature_stats(dataset));
}

}  // namespace mixlab::data
