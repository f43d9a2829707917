#include "hypermads/early_stop.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "hypermads/format.hpp"

namespace hypermads {

TrainingHistory::TrainingHistory(std::vector<EpochRecord> epochs) {
  epochs_.reserve(epochs.size());
  for (const auto& r : epochs) append(r);
}

void TrainingHistory::append(const EpochRecord& record) {
  if (record.epoch != current_epoch() + 1)
    throw std::invalid_argument("TrainingHistory: expected epoch " + std::to_string(current_epoch() + 1) + ", got " +
                                std::to_string(record.epoch));
  epochs_.push_back(record);
}

double TrainingHistory::best_accuracy() const {
  double best = 0.0;
  for (const auto& r : epochs_) best = std::max(best, r.val_accuracy);
  return best;
}

namespace {

constexpr std::array<std::string_view, 7> kReasonNames = {
    "none", "default-low-accuracy", "default-loss-plateau", "last-success",
    "scheduler-lr-floor", "envelope-breach", "evaluation-failed",
};

constexpr std::array<std::string_view, 5> kModeNames = {
    "none", "default", "last-success", "scheduler", "scheduler+baseline",
};

// Epoch of the last new running maximum, counting epoch 1 as the first.
int last_record_epoch(const TrainingHistory& history) {
  int last = 0;
  double best = -1.0;
  for (const auto& r : history.epochs()) {
    if (r.val_accuracy > best || last == 0) {
      best = r.val_accuracy;
      last = r.epoch;
    }
  }
  return last;
}

}  // namespace

std::string_view to_string(StopReason reason) { return kReasonNames[static_cast<std::size_t>(reason)]; }

StopReason parse_stop_reason(std::string_view text) {
  for (std::size_t i = 0; i < kReasonNames.size(); ++i)
    if (kReasonNames[i] == text) return static_cast<StopReason>(i);
  throw std::invalid_argument("unknown stop reason '" + std::string(text) + "'");
}

std::string_view to_string(StopMode mode) { return kModeNames[static_cast<std::size_t>(mode)]; }

StopMode parse_stop_mode(std::string_view text) {
  for (std::size_t i = 0; i < kModeNames.size(); ++i)
    if (kModeNames[i] == text) return static_cast<StopMode>(i);
  throw std::invalid_argument("unknown stopping mode '" + std::string(text) +
                              "' (expected none|default|last-success|scheduler|scheduler+baseline)");
}

void BaselineEnvelope::check() const {
  if (milestones.size() != margins.size())
    throw std::invalid_argument("envelope: milestones and margins differ in length");
  for (std::size_t i = 0; i < milestones.size(); ++i) {
    if (milestones[i] < 1) throw std::invalid_argument("envelope: milestones must be >= 1");
    if (!(margins[i] > 0.0 && margins[i] <= 1.0)) throw std::invalid_argument("envelope: margins must lie in (0, 1]");
    if (i > 0 && milestones[i] <= milestones[i - 1])
      throw std::invalid_argument("envelope: milestones must be strictly increasing");
    if (i > 0 && margins[i] <= margins[i - 1])
      throw std::invalid_argument("envelope: margins must be strictly increasing");
  }
}

StopVerdict check_default(const TrainingHistory& history) {
  using namespace stop_defaults;
  const int epoch = history.current_epoch();
  if (epoch >= kLowAccuracyEpoch && history.best_accuracy() <= kLowAccuracyThreshold)
    return StopVerdict::halt(StopReason::default_low_accuracy,
                             "accuracy " + format_double(history.best_accuracy()) + " after " +
                                 std::to_string(epoch) + " epochs");
  if (history.size() >= static_cast<std::size_t>(kLossWindow)) {
    const auto& e = history.epochs();
    auto first = e.end() - kLossWindow;
    double mean = 0.0;
    for (auto it = first; it != e.end(); ++it) mean += it->val_loss;
    mean /= kLossWindow;
    double var = 0.0;
    for (auto it = first; it != e.end(); ++it) var += (it->val_loss - mean) * (it->val_loss - mean);
    double sd = std::sqrt(var / kLossWindow);
    if (sd < kLossStdThreshold)
      return StopVerdict::halt(StopReason::default_loss_plateau, "loss std " + format_double(sd));
  }
  return StopVerdict::keep_going();
}

StopVerdict check_last_success(const TrainingHistory& history, int window) {
  if (history.empty()) return StopVerdict::keep_going();
  const int since = history.current_epoch() - last_record_epoch(history);
  if (since > window)
    return StopVerdict::halt(StopReason::last_success, "no improvement for " + std::to_string(since) + " epochs");
  return StopVerdict::keep_going();
}

SchedulerStep scheduler_step(const TrainingHistory& history, int patience, double factor, double lr_floor) {
  if (!(factor > 0.0 && factor < 1.0)) throw std::invalid_argument("scheduler: factor must lie in (0, 1)");
  if (!(lr_floor > 0.0)) throw std::invalid_argument("scheduler: lr floor must be positive");
  if (patience < 1) throw std::invalid_argument("scheduler: patience must be >= 1");
  if (history.empty()) throw std::invalid_argument("scheduler: empty history");

  const auto& e = history.epochs();
  int anchor = 0;
  double best = e.front().val_accuracy;
  for (std::size_t i = 1; i < e.size(); ++i) {
    if (e[i].val_accuracy > best) {
      best = e[i].val_accuracy;
      anchor = e[i].epoch;
    }
    // A rate drop between epochs i and i+1 was decided at the end of epoch i.
    if (e[i].learning_rate < e[i - 1].learning_rate) anchor = std::max(anchor, e[i - 1].epoch);
  }

  const double lr = history.back().learning_rate;
  SchedulerStep step{lr, StopVerdict::keep_going()};
  if (history.current_epoch() - anchor >= patience) {
    step.new_lr = lr * factor;
    // Values within rounding of the floor count as equal to it.
    if (step.new_lr < lr_floor * (1.0 - 1e-9))
      step.verdict = StopVerdict::halt(StopReason::scheduler_lr_floor,
                                       "learning rate " + format_double(step.new_lr) + " below floor");
  }
  return step;
}

StopVerdict check_envelope(const TrainingHistory& history, const BaselineEnvelope& envelope) {
  if (!envelope.has_baseline() || history.empty()) return StopVerdict::keep_going();
  const int epoch = history.current_epoch();
  auto it = std::find(envelope.milestones.begin(), envelope.milestones.end(), epoch);
  if (it == envelope.milestones.end()) return StopVerdict::keep_going();
  const double margin = envelope.margins[static_cast<std::size_t>(it - envelope.milestones.begin())];

  const auto& base = envelope.baseline;
  const double reference = epoch <= base.current_epoch() ? base.at_epoch(epoch).val_accuracy : base.best_accuracy();
  if (reference <= envelope.chance_level) return StopVerdict::keep_going();

  const double candidate = history.back().val_accuracy;
  if (candidate < margin * reference)
    return StopVerdict::halt(StopReason::envelope_breach, "epoch " + std::to_string(epoch) + ": " +
                                                              format_double(candidate) + " < " + format_double(margin) +
                                                              " x " + format_double(reference));
  return StopVerdict::keep_going();
}

BaselineEnvelope update_baseline(BaselineEnvelope envelope, const TrainingHistory& candidate_history,
                                 double candidate_final, double incumbent_final) {
  if (!envelope.has_baseline() || candidate_final > incumbent_final) envelope.baseline = candidate_history;
  return envelope;
}

MonitorDecision combined_verdict(const TrainingHistory& history, const BaselineEnvelope& envelope, StopMode mode) {
  const double lr = history.empty() ? 0.0 : history.back().learning_rate;
  switch (mode) {
    case StopMode::none:
      return {StopVerdict::keep_going(), lr};
    case StopMode::default_rules:
      return {check_default(history), lr};
    case StopMode::last_success:
      return {check_last_success(history), lr};
    case StopMode::scheduler: {
      auto step = scheduler_step(history);
      return {std::move(step.verdict), step.new_lr};
    }
    case StopMode::scheduler_baseline: {
      if (auto v = check_envelope(history, envelope); v.stop) return {std::move(v), lr};
      auto step = scheduler_step(history);
      return {std::move(step.verdict), step.new_lr};
    }
  }
  throw std::invalid_argument("combined_verdict: unknown mode");
}

}  // namespace hypermads
