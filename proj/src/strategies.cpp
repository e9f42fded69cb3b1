#include "mixlab/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "mixlab/errors.hpp"

namespace mixlab::strategies {

EnpWindow EnpWindow::fixed(double end_epoch) {
  EnpWindow w;
  w.mode = Mode::kFixedEpochs;
  w.end_epoch = end_epoch;
  w.validate();
  return w;
}

EnpWindow EnpWindow::threshold(double acc) {
  EnpWindow w;
  w.mode = Mode::kAccuracyThreshold;
  w.acc_threshold = acc;
  w.validate();
  return w;
}

void EnpWindow::validate() const {
  if (!(end_epoch >= 0.0) || !std::isfinite(end_epoch)) {
    throw InvalidArgument("ENP end_epoch must be a finite value >= 0");
  }
  if (!(acc_threshold > 0.0 && acc_threshold < 1.0)) {
    throw InvalidArgument("ENP accuracy threshold must lie in (0, 1)");
  }
}

EnpWindow::Mode parse_enp_mode(std::string_view name) {
  if (name == "fixed_epochs" || name == "fixed") return EnpWindow::Mode::kFixedEpochs;
  if (name == "accuracy_threshold" || name == "threshold") return EnpWindow::Mode::kAccuracyThreshold;
  throw InvalidArgument("unknown ENP mode '" + std::string(name) + "'");
}

bool enp_active(const EnpWindow& window, int epoch, std::span<const double> acc_history) {
  return enp_fraction(window, epoch, acc_history) > 0.0;
}

double enp_fraction(const EnpWindow& window, int epoch, std::span<const double> acc_history) {
  if (epoch < 0) throw InvalidArgument("epoch must be non-negative");
  if (window.mode == EnpWindow::Mode::kFixedEpochs) {
    return std::clamp(window.end_epoch - static_cast<double>(epoch), 0.0, 1.0);
  }
  const std::size_t seen = std::min<std::size_t>(static_cast<std::size_t>(epoch), acc_history.size());
  for (std::size_t k = 0; k < seen; ++k) {
    if (acc_history[k] >= window.acc_threshold) return 0.0;
  }
  return 1.0;
}

MixupSchedule MixupSchedule::constant(std::optional<double> alpha) {
  MixupSchedule s;
  s.baseline_alpha = alpha;
  s.enp_alpha = alpha;
  s.validate();
  return s;
}

MixupSchedule MixupSchedule::pause(double alpha, EnpWindow window) {
  MixupSchedule s;
  s.baseline_alpha = alpha;
  s.window = window;
  s.validate();
  return s;
}

MixupSchedule MixupSchedule::boost(double baseline, double enp, EnpWindow window) {
  MixupSchedule s;
  s.baseline_alpha = baseline;
  s.enp_alpha = enp;
  s.window = window;
  s.validate();
  return s;
}

void MixupSchedule::validate() const {
  window.validate();
  if (baseline_alpha && !(*baseline_alpha > 0.0)) throw InvalidArgument("baseline alpha must be > 0");
  if (enp_alpha && !(*enp_alpha > 0.0)) throw InvalidArgument("ENP alpha must be > 0");
}

std::optional<double> effective_alpha(const MixupSchedule& schedule, int epoch,
                                      std::span<const double> acc_history) {
  return enp_active(schedule.window, epoch, acc_history) ? schedule.enp_alpha
                                                         : schedule.baseline_alpha;
}

LossMap record_teacher_losses(const nn::ModelParams& params, const data::Dataset& dataset) {
  LossMap out;
  if (dataset.empty()) return out;
  const nn::BatchOutput fwd = nn::forward_batch(params, dataset.feature_matrix());
  const Vector losses = nn::batch_losses(fwd.score, dataset.target_matrix());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out.emplace(dataset.samples[i].id, losses(static_cast<Eigen::Index>(i)));
  }
  return out;
}

EasySubset select_easy_subset(const LossMap& losses, double k_percent, std::string teacher_run_id) {
  if (losses.empty()) throw InvalidArgument("cannot select from an empty loss map");
  if (!(k_percent > 0.0 && k_percent <= 1.0)) throw InvalidArgument("k_percent must lie in (0, 1]");
  std::vector<std::pair<double, std::int64_t>> ranked;
  ranked.reserve(losses.size());
  for (const auto& [id, l] : losses) ranked.emplace_back(l, id);
  std::sort(ranked.begin(), ranked.end());
  const double n = static_cast<double>(ranked.size());
  // Guard the ceiling against k*n landing a rounding error above an integer.
  auto keep = static_cast<std::size_t>(std::ceil(k_percent * n - 1e-9));
  keep = std::clamp<std::size_t>(keep, 1, ranked.size());
  EasySubset easy;
  easy.k_percent = k_percent;
  easy.teacher_run_id = std::move(teacher_run_id);
  for (std::size_t k = 0; k < keep; ++k) easy.kept_ids.insert(ranked[k].second);
  return easy;
}

data::Dataset training_view(int epoch, const EnpWindow& window, std::span<const double> acc_history,
                            const data::Dataset& full, const EasySubset* easy) {
  if (easy == nullptr) return full;
  data::Dataset restricted = full.subset(easy->kept_ids);  // rejects unknown ids
  if (!enp_active(window, epoch, acc_history)) return full;
  return restricted;
}

}  // namespace mixlab::strategies
