#include "mixlab/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "mixlab/errors.hpp"
#include "mixlab/mixup.hpp"
#include "mixlab/rng.hpp"
#include "mixlab/stats.hpp"
#include "mixlab/strategies.hpp"

namespace mixlab::runner {

RunError::RunError(int epoch, int batch, const std::string& what)
    : Error("run failed at epoch " + std::to_string(epoch) +
            (batch >= 0 ? ", batch " + std::to_string(batch) : std::string()) + ": " + what),
      epoch_(epoch),
      batch_(batch) {}

namespace {

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t k = idx.size(); k > 1; --k) {
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    std::swap(idx[k - 1], idx[pick(rng)]);
  }
}

data::Dataset take_front(const data::Dataset& ds, std::size_t begin, std::size_t end) {
  data::Dataset out;
  out.class_count = ds.class_count;
  out.normalization = ds.normalization;
  out.samples.assign(ds.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                     ds.samples.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

Matrix gather_columns(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = m.col(static_cast<Eigen::Index>(idx[k]));
  }
  return out;
}

struct Evaluation {
  double acc = 0.0;
  double loss = 0.0;
};

Evaluation evaluate(const nn::BatchOutput& out, const Matrix& targets, const data::Dataset& ds) {
  Evaluation e;
  if (ds.empty()) return e;
  const auto predicted = nn::predict_classes(out.score);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) correct += predicted[i] == ds.samples[i].label ? 1 : 0;
  e.acc = static_cast<double>(correct) / static_cast<double>(ds.size());
  e.loss = nn::batch_losses(out.score, targets).mean();
  return e;
}

// Concatenated last-hidden-layer activations (the head's output for models
// without hidden layers) of the probe columns.
Vector probe_activations(const nn::ModelParams& params, const Matrix& probe_inputs) {
  const nn::BatchOutput out = nn::forward_batch(params, probe_inputs);
  const std::size_t layer = params.layers.size() >= 2 ? params.layers.size() - 2 : 0;
  const Matrix& a = out.post[layer];
  return Eigen::Map<const Vector>(a.data(), a.size());
}

std::optional<metrics::ZeroMode> zero_mode_for(const nn::ModelParams& params) {
  if (params.layers.size() < 2) return std::nullopt;
  switch (params.layers.front().activation) {
    case nn::Activation::kRelu:
      return metrics::ZeroMode::kRelu;
    case nn::Activation::kSigmoid:
      return metrics::ZeroMode::kSigmoidSaturation;
    case nn::Activation::kIdentity:
      return std::nullopt;
  }
  return std::nullopt;
}

// Gradient of the mean loss over a Mixup-transformed copy of the batch.
Vector mixed_gradient(const nn::ModelParams& params, const Matrix& x, const Matrix& y, double alpha,
                      mixup::LambdaMode mode, Rng& rng) {
  const mixup::MixPlan plan = mixup::plan_mix(static_cast<std::size_t>(x.cols()), alpha, rng, mode);
  Matrix mx;
  Matrix my;
  mixup::apply_plan(plan, x, y, mx, my);
  return nn::batch_gradient(params, mx, my).flat;
}

// Gradient cosine probe: random (positive, negative) pairs, no updates.
metrics::CosStats cosine_probe(const nn::ModelParams& params, const data::Dataset& train,
                               std::size_t max_pairs, Rng& rng) {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < train.size(); ++i) {
    (train.samples[i].label == 1 ? pos : neg).push_back(i);
  }
  shuffle_indices(pos, rng);
  shuffle_indices(neg, rng);
  std::size_t n = std::min(pos.size(), neg.size());
  if (max_pairs > 0) n = std::min(n, max_pairs);
  Vector one(1);
  one(0) = 1.0;
  Vector zero(1);
  zero(0) = 0.0;
  Vector half(1);
  half(0) = 0.5;
  std::vector<std::pair<Vector, Vector>> grads;
  grads.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Vector& xi = train.samples[pos[k]].features;
    const Vector& xj = train.samples[neg[k]].features;
    Vector vanilla = nn::backward(nn::forward(params, xi), one, params).flat;
    vanilla += nn::backward(nn::forward(params, xj), zero, params).flat;
    const Vector xm = 0.5 * (xi + xj);
    Vector mix = nn::backward(nn::forward(params, xm), half, params).flat;
    grads.emplace_back(std::move(vanilla), std::move(mix));
  }
  return metrics::grad_cos_stats(grads);
}

struct TrainSettings {
  strategies::MixupSchedule schedule;
  const strategies::EasySubset* easy = nullptr;
  int epochs = 1;
  bool instrument = true;
};

struct TrainOutcome {
  nn::ModelParams params;
  std::vector<MetricRow> rows;
};

class Trainer {
 public:
  Trainer(const RunConfig& config, const Splits& splits)
      : config_(config),
        splits_(splits),
        train_x_(splits.train.feature_matrix()),
        train_y_(splits.train.target_matrix()),
        val_x_(splits.val.feature_matrix()),
        val_y_(splits.val.target_matrix()) {}

  TrainOutcome train(const SeedTree& tree, const TrainSettings& settings,
                     const std::function<void(const MetricRow&)>& on_row) const {
    const auto arch = nn::Architecture::mlp(splits_.train.dim(), config_.model.hidden,
                                            config_.model.hidden_activation,
                                            static_cast<std::size_t>(splits_.train.class_count));
    Rng init_rng = tree.stream("init");
    Rng shuffle_rng = tree.stream("shuffle");
    Rng mixup_rng = tree.stream("mixup");
    Rng cos_rng = tree.stream("cos-probe");
    TrainOutcome outcome{nn::init_params(arch, init_rng), {}};
    nn::ModelParams& params = outcome.params;

    const std::size_t n_train = splits_.train.size();
    std::vector<std::size_t> all(n_train);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<std::size_t> easy_idx;
    if (settings.easy != nullptr) {
      // Validate through the public view function, then map ids to columns.
      const data::Dataset view = strategies::training_view(0, strategies::EnpWindow::fixed(1.0), {},
                                                           splits_.train, settings.easy);
      for (std::size_t i = 0; i < n_train; ++i) {
        if (settings.easy->kept_ids.count(splits_.train.samples[i].id)) easy_idx.push_back(i);
      }
      if (easy_idx.size() != view.size()) throw InvalidArgument("easy subset does not match the dataset");
    }

    const bool instrument = settings.instrument;
    const auto zero_mode = zero_mode_for(params);
    Matrix probe_x;
    Vector act_ref;
    if (instrument && config_.metrics.atd && !splits_.val.empty()) {
      std::vector<std::size_t> probe(splits_.val.size());
      std::iota(probe.begin(), probe.end(), std::size_t{0});
      Rng probe_rng = tree.stream("probe");
      shuffle_indices(probe, probe_rng);
      probe.resize(std::min(probe.size(), std::max<std::size_t>(config_.metrics.probe_size, 1)));
      probe_x = gather_columns(val_x_, probe);
      act_ref = probe_activations(params, probe_x);
    }

    std::vector<double> acc_history;
    const double eta = config_.optimizer.eta;
    const std::size_t bs = config_.optimizer.batch_size;
    for (int epoch = 0; epoch < settings.epochs; ++epoch) {
      MetricRow row;
      row.epoch = epoch;
      const double enp = strategies::enp_fraction(settings.schedule.window, epoch, acc_history);
      const auto alpha_now = strategies::effective_alpha(settings.schedule, epoch, acc_history);
      row.effective_alpha = alpha_now;

      try {
        if (instrument && config_.metrics.cos_probe) {
          row.cos = cosine_probe(params, splits_.train, config_.metrics.cos_pairs, cos_rng);
        }
        if (instrument && config_.metrics.grad_rate && epoch == 0) {
          Rng gr_rng = tree.stream("grad-rate");
          const double a = config_.metrics.grad_rate_alpha.value_or(config_.mixup.alpha.value_or(1.0));
          const Vector van = nn::batch_gradient(params, train_x_, train_y_).flat;
          const Vector mix = mixed_gradient(params, train_x_, train_y_, a, config_.mixup.lambda_mode, gr_rng);
          row.grad_rate = metrics::grad_rate(mix, van);
        }
      } catch (const RunError&) {
        throw;
      } catch (const Error& e) {
        throw RunError(epoch, -1, e.what());
      }

      // Batch plan: (indices, alpha) segments covering one epoch.
      struct Segment {
        std::vector<std::size_t> order;
        std::size_t batches = 0;
        std::optional<double> alpha;
      };
      std::vector<Segment> segments;
      const auto batches_for = [bs](std::size_t n) { return (n + bs - 1) / bs; };
      const std::vector<std::size_t>& enp_pool = settings.easy ? easy_idx : all;
      if (enp >= 1.0) {
        segments.push_back({enp_pool, batches_for(enp_pool.size()), settings.schedule.enp_alpha});
      } else if (enp <= 0.0) {
        segments.push_back({all, batches_for(all.size()), settings.schedule.baseline_alpha});
      } else {
        const std::size_t total = batches_for(all.size());
        const auto enp_batches = std::min(
            static_cast<std::size_t>(std::llround(enp * static_cast<double>(total))),
            batches_for(enp_pool.size()));
        segments.push_back({enp_pool, enp_batches, settings.schedule.enp_alpha});
        segments.push_back({all, total - std::min(total, enp_batches), settings.schedule.baseline_alpha});
      }

      const Vector theta_start = params.flatten();
      std::vector<double> update_norms;
      int batch_index = 0;
      for (auto& seg : segments) {
        if (seg.batches == 0) continue;
        shuffle_indices(seg.order, shuffle_rng);
        for (std::size_t b = 0; b < seg.batches; ++b, ++batch_index) {
          const std::size_t begin = b * bs;
          const std::size_t end = std::min(seg.order.size(), begin + bs);
          if (begin >= end) break;
          try {
            const std::span<const std::size_t> idx(seg.order.data() + begin, end - begin);
            Matrix bx = gather_columns(train_x_, idx);
            Matrix by = gather_columns(train_y_, idx);
            if (seg.alpha) {
              const mixup::MixPlan plan =
                  mixup::plan_mix(idx.size(), *seg.alpha, mixup_rng, config_.mixup.lambda_mode);
              Matrix mx;
              Matrix my;
              mixup::apply_plan(plan, bx, by, mx, my);
              bx = std::move(mx);
              by = std::move(my);
            }
            const nn::BatchGrad g = nn::batch_gradient(params, bx, by);
            nn::apply_sgd(params, g.flat, eta);
            update_norms.push_back(eta * g.flat.norm());
          } catch (const Error& e) {
            throw RunError(epoch, batch_index, e.what());
          }
        }
      }

      try {
        const nn::BatchOutput train_out = nn::forward_batch(params, train_x_);
        const Evaluation tr = evaluate(train_out, train_y_, splits_.train);
        row.train_acc = tr.acc;
        row.train_loss = tr.loss;
        const nn::BatchOutput val_out = nn::forward_batch(params, val_x_);
        const Evaluation va = evaluate(val_out, val_y_, splits_.val);
        row.val_acc = va.acc;
        row.val_loss = va.loss;
        acc_history.push_back(va.acc);

        if (instrument && config_.metrics.benr && !update_norms.empty()) {
          metrics::EpochDynamics dyn;
          dyn.batch_update_norms = update_norms;
          dyn.epoch_update = params.flatten() - theta_start;
          if (dyn.epoch_update.norm() >= metrics::kDegenerateEpochNorm) row.benr = metrics::benr(dyn);
        }
        if (instrument && config_.metrics.atd && probe_x.cols() > 0) {
          row.atd = metrics::atd(act_ref, probe_activations(params, probe_x));
        }
        if (instrument && config_.metrics.zero_activations && zero_mode) {
          const double tol = *zero_mode == metrics::ZeroMode::kRelu ? 0.0 : metrics::kSigmoidSaturationTol;
          row.zero_act_avg = metrics::zero_activation_count(params, val_out, *zero_mode, tol);
        }
      } catch (const Error& e) {
        throw RunError(epoch, -1, e.what());
      }
      if (on_row) on_row(row);
      outcome.rows.push_back(std::move(row));
    }
    return outcome;
  }

 private:
  const RunConfig& config_;
  const Splits& splits_;
  Matrix train_x_;
  Matrix train_y_;
  Matrix val_x_;
  Matrix val_y_;
};

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> opt_from_json(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

Splits build_datasets(const DatasetSpec& spec, std::uint64_t data_seed) {
  Splits s;
  if (spec.source == "two_gaussians") {
    data::TwoGaussianSpec g{spec.n_per_class + spec.n_val_per_class, spec.dim, spec.separation, spec.sigma};
    const data::Dataset all = data::gen_two_gaussians(g, data_seed);
    s.train = take_front(all, 0, 2 * spec.n_per_class);
    s.val = take_front(all, 2 * spec.n_per_class, all.size());
  } else if (spec.source == "k_gaussians") {
    data::KGaussianSpec g{spec.n_per_class + spec.n_val_per_class, spec.classes, spec.dim,
                          spec.separation, spec.sigma};
    const data::Dataset all = data::gen_k_gaussians(g, data_seed);
    s.train = take_front(all, 0, spec.classes * spec.n_per_class);
    s.val = take_front(all, spec.classes * spec.n_per_class, all.size());
  } else if (spec.source == "cifar10") {
    std::vector<std::filesystem::path> train_paths(spec.train_files.begin(), spec.train_files.end());
    data::Dataset train = data::load_cifar10_binary(train_paths, spec.keep_classes);
    if (spec.val_files.empty()) {
      const auto n_val = static_cast<std::size_t>(
          std::llround(spec.val_fraction * static_cast<double>(train.size())));
      s.val = take_front(train, train.size() - n_val, train.size());
      train = take_front(train, 0, train.size() - n_val);
    } else {
      std::vector<std::filesystem::path> val_paths(spec.val_files.begin(), spec.val_files.end());
      s.val = data::load_cifar10_binary(val_paths, spec.keep_classes);
    }
    if (spec.max_train && *spec.max_train < train.size()) train = take_front(train, 0, *spec.max_train);
    s.train = std::move(train);
  } else {
    throw InvalidArgument("unknown dataset source '" + spec.source + "'");
  }
  if (s.train.empty()) throw InvalidArgument("training split is empty");
  const data::FeatureStats stats = data::feature_stats(s.train);
  s.train = data::apply_normalization(s.train, spec.normalization, stats);
  s.val = data::apply_normalization(s.val, spec.normalization, stats);
  s.train.validate();
  s.val.validate();
  return s;
}

RunRecord run(const RunConfig& config, const RunOptions& options) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const SeedTree tree(config.seed);
  const std::uint64_t data_seed = config.dataset.seed.value_or(tree.derive("data-gen"));
  const Splits splits = build_datasets(config.dataset, data_seed);

  RunRecord record;
  record.name = config.name;
  record.run_id = config.name + "-s" + std::to_string(config.seed);
  record.config_hash = config.hash();
  record.seed = config.seed;
  record.config = config.to_json();

  const Trainer trainer(config, splits);
  const strategies::MixupSchedule schedule = config.schedule();

  std::optional<strategies::EasySubset> easy;
  if (config.strategy.kind == StrategyKind::kHighLossRemoval) {
    TrainSettings teacher;
    teacher.schedule = strategies::MixupSchedule::constant(std::nullopt);
    teacher.epochs = config.strategy.teacher_epochs.value_or(config.optimizer.epochs);
    teacher.instrument = false;
    const TrainOutcome t = trainer.train(tree.child("teacher"), teacher, nullptr);
    easy = strategies::select_easy_subset(strategies::record_teacher_losses(t.params, splits.train),
                                          config.strategy.k_percent, record.run_id + "-teacher");
    record.easy_subset_size = easy->kept_ids.size();
  }

  const bool write = options.write_files && !config.out_dir.empty();
  std::ofstream csv;
  if (write) {
    std::filesystem::create_directories(config.out_dir);
    csv.open(std::filesystem::path(config.out_dir) / "metrics.csv", std::ios::trunc);
    if (!csv) throw Error("cannot write metrics.csv under '" + config.out_dir + "'");
    csv << kMetricsHeader << '\n';
  }

  TrainSettings main;
  main.schedule = schedule;
  main.easy = easy ? &*easy : nullptr;
  main.epochs = config.optimizer.epochs;
  const TrainOutcome out = trainer.train(tree, main, [&](const MetricRow& row) {
    if (write) csv << metrics_csv_line(record, row) << '\n' << std::flush;
  });

  record.rows = out.rows;
  record.final_params = out.params.flatten();
  record.final_train_acc = out.rows.back().train_acc;
  record.final_val_acc = out.rows.back().val_acc;
  record.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (write) {
    std::ofstream js(std::filesystem::path(config.out_dir) / "record.json", std::ios::trunc);
    js << record_to_json(record).dump(2) << '\n';
  }
  return record;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string metrics_csv_line(const RunRecord& record, const MetricRow& row) {
  std::string line = record.run_id + ',' + std::to_string(record.seed) + ',' + std::to_string(row.epoch);
  for (double v : {row.train_acc, row.val_acc, row.train_loss, row.val_loss}) line += ',' + format_number(v);
  for (const auto& v : {row.benr, row.atd, row.zero_act_avg, row.effective_alpha}) line += ',' + opt_number(v);
  if (row.cos) {
    line += ',' + format_number(row.cos->avg_cos) + ',' + format_number(row.cos->prop_lt_half) + ',' +
            format_number(row.cos->prop_lt_zero);
  } else {
    line += ",,,";
  }
  return line;
}

std::string metrics_csv(const RunRecord& record) {
  std::string out = std::string(kMetricsHeader) + '\n';
  for (const auto& row : record.rows) out += metrics_csv_line(record, row) + '\n';
  return out;
}

std::vector<MetricRow> parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw FormatError("metrics CSV header does not match the expected schema");
  }
  std::vector<MetricRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 14) throw FormatError("metrics CSV row has " + std::to_string(cells.size()) + " cells");
    MetricRow r;
    r.epoch = std::stoi(cells[2]);
    r.train_acc = std::stod(cells[3]);
    r.val_acc = std::stod(cells[4]);
    r.train_loss = std::stod(cells[5]);
    r.val_loss = std::stod(cells[6]);
    r.benr = parse_opt(cells[7]);
    r.atd = parse_opt(cells[8]);
    r.zero_act_avg = parse_opt(cells[9]);
    r.effective_alpha = parse_opt(cells[10]);
    if (!cells[11].empty()) {
      metrics::CosStats c;
      c.avg_cos = std::stod(cells[11]);
      c.prop_lt_half = std::stod(cells[12]);
      c.prop_lt_zero = std::stod(cells[13]);
      r.cos = c;
    }
    rows.push_back(r);
  }
  return rows;
}

Json record_to_json(const RunRecord& record) {
  Json rows = Json::array();
  for (const auto& r : record.rows) {
    Json j = {{"epoch", r.epoch},
              {"train_acc", r.train_acc},
              {"val_acc", r.val_acc},
              {"train_loss", r.train_loss},
              {"val_loss", r.val_loss},
              {"benr", opt_json(r.benr)},
              {"atd", opt_json(r.atd)},
              {"zero_act_avg", opt_json(r.zero_act_avg)},
              {"effective_alpha", opt_json(r.effective_alpha)},
              {"grad_rate", opt_json(r.grad_rate)}};
    if (r.cos) {
      j["cos"] = {{"avg_cos", r.cos->avg_cos},
                  {"prop_lt_half", r.cos->prop_lt_half},
                  {"prop_lt_zero", r.cos->prop_lt_zero},
                  {"pair_count", r.cos->pair_count},
                  {"excluded", r.cos->excluded}};
    } else {
      j["cos"] = nullptr;
    }
    rows.push_back(std::move(j));
  }
  Json j = {{"run_id", record.run_id},
            {"name", record.name},
            {"config_hash", record.config_hash},
            {"seed", record.seed},
            {"final_train_acc", record.final_train_acc},
            {"final_val_acc", record.final_val_acc},
            {"wall_time_s", record.wall_time_s},
            {"rows", rows},
            {"config", record.config}};
  j["easy_subset_size"] = record.easy_subset_size ? Json(*record.easy_subset_size) : Json(nullptr);
  return j;
}

RunRecord record_from_json(const Json& j) {
  RunRecord r;
  r.run_id = j.at("run_id").get<std::string>();
  r.name = j.at("name").get<std::string>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.final_train_acc = j.at("final_train_acc").get<double>();
  r.final_val_acc = j.at("final_val_acc").get<double>();
  r.wall_time_s = j.value("wall_time_s", 0.0);
  if (j.contains("config")) r.config = j.at("config");
  if (j.contains("easy_subset_size") && !j.at("easy_subset_size").is_null()) {
    r.easy_subset_size = j.at("easy_subset_size").get<std::size_t>();
  }
  for (const auto& jr : j.at("rows")) {
    MetricRow m;
    m.epoch = jr.at("epoch").get<int>();
    m.train_acc = jr.at("train_acc").get<double>();
    m.val_acc = jr.at("val_acc").get<double>();
    m.train_loss = jr.at("train_loss").get<double>();
    m.val_loss = jr.at("val_loss").get<double>();
    m.benr = opt_from_json(jr, "benr");
    m.atd = opt_from_json(jr, "atd");
    m.zero_act_avg = opt_from_json(jr, "zero_act_avg");
    m.effective_alpha = opt_from_json(jr, "effective_alpha");
    m.grad_rate = opt_from_json(jr, "grad_rate");
    if (jr.contains("cos") && !jr.at("cos").is_null()) {
      const Json& c = jr.at("cos");
      metrics::CosStats cs;
      cs.avg_cos = c.at("avg_cos").get<double>();
      cs.prop_lt_half = c.at("prop_lt_half").get<double>();
      cs.prop_lt_zero = c.at("prop_lt_zero").get<double>();
      cs.pair_count = c.value("pair_count", std::size_t{0});
      cs.excluded = c.value("excluded", std::size_t{0});
      m.cos = cs;
    }
    r.rows.push_back(m);
  }
  return r;
}

RunRecord load_record(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open run record '" + path.string() + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw FormatError("run record '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return record_from_json(j);
}

SweepGrid SweepGrid::from_json(const Json& j) {
  SweepGrid g;
  try {
    g.n_samples = j.at("n_samples").get<std::vector<std::size_t>>();
    g.hidden_width = j.at("hidden_width").get<std::vector<std::size_t>>();
    if (j.contains("seeds")) g.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("malformed sweep grid: ") + e.what());
  }
  if (g.n_samples.empty() || g.hidden_width.empty()) {
    throw InvalidArgument("sweep grid needs at least one n_samples and one hidden_width");
  }
  return g;
}

double initial_grad_rate(const RunConfig& config, std::size_t n_samples, std::size_t hidden_width,
                         std::uint64_t seed) {
  if (n_samples == 0 || hidden_width == 0) throw InvalidArgument("grid values must be positive");
  const SeedTree tree(seed);
  DatasetSpec spec = config.dataset;
  const std::size_t classes = spec.source == "k_gaussians" ? spec.classes : 2;
  if (spec.source != "cifar10") {
    spec.n_per_class = std::max<std::size_t>(1, n_samples / classes);
    spec.n_val_per_class = 1;
  }
  const Splits splits = build_datasets(spec, spec.seed.value_or(tree.derive("data-gen")));
  data::Dataset train = splits.train;
  if (spec.source == "cifar10") {
    if (train.size() < n_samples) {
      throw InvalidArgument("requested " + std::to_string(n_samples) + " samples but only " +
                            std::to_string(train.size()) + " are available");
    }
    std::vector<std::size_t> idx(train.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng pick = tree.stream("subset");
    shuffle_indices(idx, pick);
    data::Dataset sub;
    sub.class_count = train.class_count;
    sub.normalization = train.normalization;
    for (std::size_t k = 0; k < n_samples; ++k) sub.samples.push_back(train.samples[idx[k]]);
    train = std::move(sub);
  }

  std::vector<std::size_t> hidden = config.model.hidden;
  if (hidden.empty()) {
    hidden.push_back(hidden_width);
  } else {
    hidden.front() = hidden_width;
  }
  const auto arch = nn::Architecture::mlp(train.dim(), hidden, config.model.hidden_activation,
                                          static_cast<std::size_t>(train.class_count));
  Rng init_rng = tree.stream("init");
  const nn::ModelParams params = nn::init_params(arch, init_rng);
  const Matrix x = train.feature_matrix();
  const Matrix y = train.target_matrix();
  const Vector vanilla = nn::batch_gradient(params, x, y).flat;
  Rng mix_rng = tree.stream("grad-rate");
  const double alpha = config.metrics.grad_rate_alpha.value_or(config.mixup.alpha.value_or(1.0));
  const Vector mix = mixed_gradient(params, x, y, alpha, config.mixup.lambda_mode, mix_rng);
  return metrics::grad_rate(mix, vanilla);
}

std::vector<SweepRow> sweep_grad_rate(const SweepGrid& grid, const RunConfig& base) {
  if (grid.n_samples.empty() || grid.hidden_width.empty() || grid.seeds.empty()) {
    throw InvalidArgument("sweep grid must have at least one N, one width and one seed");
  }
  std::vector<SweepRow> rows;
  for (std::size_t n : grid.n_samples) {
    for (std::size_t w : grid.hidden_width) {
      for (std::uint64_t seed : grid.seeds) rows.push_back({n, w, seed, initial_grad_rate(base, n, w, seed)});
    }
  }
  return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::string out = std::string(kSweepHeader) + '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.n_samples) + ',' + std::to_string(r.hidden_width) + ',' +
           std::to_string(r.seed) + ',' + format_number(r.grad_rate) + '\n';
  }
  return out;
}

namespace {

std::vector<double> final_accuracies(std::span<const RunRecord> records) {
  std::vector<double> v;
  for (const auto& r : records) v.push_back(r.final_val_acc);
  return v;
}

void check_same_config(std::span<const RunRecord> records) {
  if (records.empty()) throw InvalidArgument("cannot aggregate zero records");
  for (const auto& r : records) {
    if (r.config_hash != records.front().config_hash) {
      throw InvalidArgument("records mix configurations (" + records.front().config_hash + " vs " +
                            r.config_hash + ")");
    }
  }
}

}  // namespace

Summary aggregate(std::span<const RunRecord> records) {
  check_same_config(records);
  const auto acc = final_accuracies(records);
  Summary s;
  s.name = records.front().name;
  s.config_hash = records.front().config_hash;
  s.runs = records.size();
  s.mean = stats::mean(acc);
  s.variance = stats::sample_variance(acc);
  return s;
}

Summary aggregate(std::span<const RunRecord> records, std::span<const RunRecord> baseline) {
  Summary s = aggregate(records);
  const Summary base = aggregate(baseline);
  s.delta = s.mean - base.mean;
  const auto a = final_accuracies(records);
  const auto b = final_accuracies(baseline);
  if (a.size() >= 2 && b.size() >= 2) {
    try {
      s.p_value = stats::welch_t_one_tailed(a, b).p;
    } catch (const DegenerateInput&) {
      // Zero variance in both groups: the p-value stays absent.
    }
  }
  return s;
}

std::vector<Summary> aggregate_groups(std::span<const RunRecord> records,
                                      const std::optional<std::string>& baseline_name) {
  std::map<std::pair<std::string, std::string>, std::vector<RunRecord>> groups;
  for (const auto& r : records) groups[{r.name, r.config_hash}].push_back(r);
  const std::vector<RunRecord>* baseline = nullptr;
  if (baseline_name) {
    for (const auto& [key, group] : groups) {
      if (key.first == *baseline_name) {
        if (baseline != nullptr) throw InvalidArgument("baseline name '" + *baseline_name + "' is ambiguous");
        baseline = &group;
      }
    }
    if (baseline == nullptr) throw InvalidArgument("no runs named '" + *baseline_name + "'");
  }
  std::vector<Summary> out;
  for (const auto& [key, group] : groups) {
    out.push_back(baseline ? aggregate(group, *baseline) : aggregate(group));
  }
  return out;
}

std::string summary_csv(std::span<const Summary> rows) {
  std::string out = "name,config_hash,runs,mean_val_acc,variance,delta,p_value\n";
  for (const auto& s : rows) {
    out += s.name + ',' + s.config_hash + ',' + std::to_string(s.runs) + ',' + format_number(s.mean) +
           ',' + opt_number(s.variance) + ',' + opt_number(s.delta) + ',' + opt_number(s.p_value) + '\n';
  }
  return out;
}

}  // namespace mixlab::runner
