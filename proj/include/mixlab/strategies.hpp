#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>

#include "mixlab/data.hpp"
#include "mixlab/nn.hpp"

// Phase-aware data policies for the Enlightenment Period (ENP): the initial
// window of training that lasts until validation accuracy first reaches
// roughly 50%.
namespace mixlab::strategies {

struct EnpWindow {
  enum class Mode { kFixedEpochs, kAccuracyThreshold };

  Mode mode = Mode::kFixedEpochs;
  // Half-open [0, end_epoch). Fractional values end the window part-way
  // through epoch floor(end_epoch).
  double end_epoch = 0.0;
  double acc_threshold = 0.5;

  static EnpWindow fixed(double end_epoch);
  static EnpWindow threshold(double acc = 0.5);

  void validate() const;
};

EnpWindow::Mode parse_enp_mode(std::string_view name);

/// Fixed mode: epoch < end_epoch. Threshold mode: no earlier epoch reached
/// the threshold, so the window latches closed once crossed. `acc_history`
/// holds validation accuracy of epochs 0..epoch-1.
bool enp_active(const EnpWindow& window, int epoch, std::span<const double> acc_history);

/// Share of epoch `epoch` that lies inside the window, in [0, 1].
double enp_fraction(const EnpWindow& window, int epoch, std::span<const double> acc_history);

struct MixupSchedule {
  std::optional<double> baseline_alpha;  // empty: no Mixup outside the ENP
  std::optional<double> enp_alpha;       // empty: no Mixup inside the ENP
  EnpWindow window;

  /// Same alpha everywhere; the window is irrelevant.
  static MixupSchedule constant(std::optional<double> alpha);
  /// Mixup disabled inside the window.
  static MixupSchedule pause(double alpha, EnpWindow window);
  /// Larger alpha inside the window.
  static MixupSchedule boost(double baseline, double enp, EnpWindow window);

  void validate() const;
};

std::optional<double> effective_alpha(const MixupSchedule& schedule, int epoch,
                                      std::span<const double> acc_history);

using LossMap = std::map<std::int64_t, double>;

/// Per-sample loss under fixed (teacher) parameters.
LossMap record_teacher_losses(const nn::ModelParams& params, const data::Dataset& dataset);

struct EasySubset {
  std::set<std::int64_t> kept_ids;
  double k_percent = 1.0;
  std::string teacher_run_id;
};

/// ceil(k * n) lowest-loss ids, ties broken by ascending id.
EasySubset select_easy_subset(const LossMap& losses, double k_percent,
                              std::string teacher_run_id = {});

/// Restricted to the easy ids while the ENP is active, the full dataset
/// otherwise.
data::Dataset training_view(int epoch, const EnpWindow& window, std::span<const double> acc_history,
                            const data::Dataset& full, const EasySubset* easy);

}  // namespace mixlab::strategies
