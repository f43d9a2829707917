#pragma once

// Early-stopping monitor: fixed-rule checks, last-success window, plateau
// learning-rate scheduler with a floor, and the baseline envelope compared at
// milestone epochs.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hypermads {

struct EpochRecord {
  int epoch = 0;
  double val_accuracy = 0.0;
  double val_loss = 0.0;
  double learning_rate = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

// Per-epoch validation series. Epochs are contiguous from 1.
class TrainingHistory {
 public:
  TrainingHistory() = default;
  // Throws std::invalid_argument unless epochs run 1, 2, ..., n.
  explicit TrainingHistory(std::vector<EpochRecord> epochs);

  void append(const EpochRecord& record);

  const std::vector<EpochRecord>& epochs() const { return epochs_; }
  std::size_t size() const { return epochs_.size(); }
  bool empty() const { return epochs_.empty(); }
  const EpochRecord& back() const { return epochs_.back(); }
  int current_epoch() const { return epochs_.empty() ? 0 : epochs_.back().epoch; }
  // 1-based; caller guarantees 1 <= epoch <= size().
  const EpochRecord& at_epoch(int epoch) const { return epochs_[static_cast<std::size_t>(epoch - 1)]; }
  // Running-max accuracy over the whole history; 0 when empty.
  double best_accuracy() const;

  bool operator==(const TrainingHistory&) const = default;

 private:
  std::vector<EpochRecord> epochs_;
};

enum class StopReason : std::uint8_t {
  none,
  default_low_accuracy,
  default_loss_plateau,
  last_success,
  scheduler_lr_floor,
  envelope_breach,
  evaluation_failed,
};

std::string_view to_string(StopReason reason);
// Throws std::invalid_argument for an unknown name.
StopReason parse_stop_reason(std::string_view text);

struct StopVerdict {
  bool stop = false;
  StopReason reason = StopReason::none;
  std::string detail;

  static StopVerdict keep_going() { return {}; }
  static StopVerdict halt(StopReason reason, std::string detail) { return {true, reason, std::move(detail)}; }
};

namespace stop_defaults {
inline constexpr int kLowAccuracyEpoch = 25;
inline constexpr double kLowAccuracyThreshold = 0.12;
inline constexpr int kLossWindow = 50;
inline constexpr double kLossStdThreshold = 1e-3;
inline constexpr int kLastSuccessWindow = 25;
inline constexpr int kPatience = 25;
inline constexpr double kFactor = 0.1;
inline constexpr double kLrFloor = 1e-8;
}  // namespace stop_defaults

struct BaselineEnvelope {
  TrainingHistory baseline;
  std::vector<int> milestones{5, 10, 25, 50, 100, 125, 150};
  std::vector<double> margins{0.5, 0.6, 0.7, 0.8, 0.85, 0.9, 0.95};
  // Baseline references at or below this level disable the comparison.
  double chance_level = 0.1;

  bool has_baseline() const { return !baseline.empty(); }
  // Throws std::invalid_argument if milestones/margins are not strictly
  // increasing, margins leave (0, 1], or lengths differ.
  void check() const;
};

// Low accuracy after 25 epochs, or population std of the last 50 losses < 1e-3.
StopVerdict check_default(const TrainingHistory& history);

// Stops once the last new running maximum is more than `window` epochs old.
StopVerdict check_last_success(const TrainingHistory& history, int window = stop_defaults::kLastSuccessWindow);

struct SchedulerStep {
  double new_lr = 0.0;
  StopVerdict verdict;
};

// Stateless plateau scheduler: the reduction state is recovered from the
// learning rates recorded in `history`. A reduction fires when neither a new
// running maximum (epochs >= 2) nor a previous reduction happened in the last
// `patience` epochs. Throws std::invalid_argument for factor outside (0, 1),
// non-positive floor or patience, or an empty history.
SchedulerStep scheduler_step(const TrainingHistory& history, int patience = stop_defaults::kPatience,
                             double factor = stop_defaults::kFactor, double lr_floor = stop_defaults::kLrFloor);

// Compares the candidate with margin_i × baseline at milestone epochs only.
StopVerdict check_envelope(const TrainingHistory& history, const BaselineEnvelope& envelope);

// Replaces the baseline curve when the candidate strictly beats the incumbent,
// or unconditionally when no baseline exists yet.
BaselineEnvelope update_baseline(BaselineEnvelope envelope, const TrainingHistory& candidate_history,
                                 double candidate_final, double incumbent_final);

enum class StopMode : std::uint8_t { none, default_rules, last_success, scheduler, scheduler_baseline };

std::string_view to_string(StopMode mode);
// Accepts none|default|last-success|scheduler|scheduler+baseline.
StopMode parse_stop_mode(std::string_view text);

struct MonitorDecision {
  StopVerdict verdict;
  double next_learning_rate = 0.0;
};

// Dispatch on the strategy. scheduler+baseline stops when either the
// envelope or the scheduler floor triggers; the envelope is checked first.
MonitorDecision combined_verdict(const TrainingHistory& history, const BaselineEnvelope& envelope, StopMode mode);

}  // namespace hypermads
