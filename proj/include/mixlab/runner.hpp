#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixlab/config.hpp"
#include "mixlab/errors.hpp"
#include "mixlab/metrics.hpp"
#include "mixlab/nn.hpp"

namespace mixlab::runner {

struct MetricRow {
  int epoch = 0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::optional<double> benr;
  std::optional<double> atd;
  std::optional<double> zero_act_avg;
  std::optional<double> effective_alpha;
  std::optional<metrics::CosStats> cos;
  std::optional<double> grad_rate;  // epoch 0 only
};

struct RunRecord {
  std::string run_id;
  std::string name;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<MetricRow> rows;
  double final_train_acc = 0.0;
  double final_val_acc = 0.0;
  double wall_time_s = 0.0;
  std::optional<std::size_t> easy_subset_size;  // high-loss removal only
  Vector final_params;                          // not serialized
  Json config;
};

/// Raised when a module fails mid-run; carries the position of the failure.
class RunError : public Error {
 public:
  RunError(int epoch, int batch, const std::string& what);
  int epoch() const { return epoch_; }
  int batch() const { return batch_; }

 private:
  int epoch_;
  int batch_;
};

/// Train and validation splits after normalization.
struct Splits {
  data::Dataset train;
  data::Dataset val;
};

Splits build_datasets(const DatasetSpec& spec, std::uint64_t data_seed);

struct RunOptions {
  bool write_files = true;
};

/// Executes one configured run: optional teacher phase, then the main loop.
/// Writes <out_dir>/metrics.csv incrementally and <out_dir>/record.json at the
/// end when `write_files` is set and out_dir is non-empty.
RunRecord run(const RunConfig& config, const RunOptions& options = {});

// CSV schemas.
inline constexpr const char* kMetricsHeader =
    "run_id,seed,epoch,train_acc,val_acc,train_loss,val_loss,benr,atd,zero_act_avg,"
    "effective_alpha,avg_cos,prop_lt_half,prop_lt_zero";
inline constexpr const char* kSweepHeader = "n_samples,hidden_width,seed,grad_rate";

std::string format_number(double v);
std::string metrics_csv_line(const RunRecord& record, const MetricRow& row);
std::string metrics_csv(const RunRecord& record);

/// Rebuilds the CSV-visible fields of each row.
std::vector<MetricRow> parse_metrics_csv(const std::string& text);

Json record_to_json(const RunRecord& record);
RunRecord record_from_json(const Json& j);
RunRecord load_record(const std::filesystem::path& path);

// Grad-rate sweep over sample count and hidden width.

struct SweepGrid {
  std::vector<std::size_t> n_samples;
  std::vector<std::size_t> hidden_width;
  std::vector<std::uint64_t> seeds;

  static SweepGrid from_json(const Json& j);
};

struct SweepRow {
  std::size_t n_samples = 0;
  std::size_t hidden_width = 0;
  std::uint64_t seed = 0;
  double grad_rate = 0.0;
};

/// Grad rate of one fresh initialization: full-dataset vanilla gradient
/// against the gradient of the Mixup-transformed dataset, no updates.
double initial_grad_rate(const RunConfig& config, std::size_t n_samples,
                         std::size_t hidden_width, std::uint64_t seed);

std::vector<SweepRow> sweep_grad_rate(const SweepGrid& grid, const RunConfig& base);
std::string sweep_csv(std::span<const SweepRow> rows);

// Aggregation over runs that differ only by seed.

struct Summary {
  std::string name;
  std::string config_hash;
  std::size_t runs = 0;
  double mean = 0.0;
  std::optional<double> variance;
  std::optional<double> delta;    // mean - baseline mean
  std::optional<double> p_value;  // one-tailed Welch vs the baseline
};

/// Summary of the final validation accuracy. Throws InvalidArgument when the
/// records do not share a config hash.
Summary aggregate(std::span<const RunRecord> records);
Summary aggregate(std::span<const RunRecord> records, std::span<const RunRecord> baseline);

/// Groups by config hash (ordered by name, then hash); compares every group
/// against the group whose name equals `baseline_name` when given.
std::vector<Summary> aggregate_groups(std::span<const RunRecord> records,
                                      const std::optional<std::string>& baseline_name);
std::string summary_csv(std::span<const Summary> rows);

}  // namespace mixlab::runner
