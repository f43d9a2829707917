#pragma once

// Convex quadratic over the eight real training scalars with every
// categorical slot and the batch size frozen. Score = -f(x), one epoch.

#include <array>
#include <cmath>
#include <random>

#include "hypermads/blackbox.hpp"
#include "hypermads/hp_space.hpp"

namespace hypermads::testing {

inline constexpr std::array<SlotKind, 8> kQuadraticKinds = {
    SlotKind::learning_rate, SlotKind::dropout,   SlotKind::weight_decay,    SlotKind::momentum,
    SlotKind::lr_decay,      SlotKind::grad_clip, SlotKind::label_smoothing, SlotKind::epoch_scale,
};

inline SpaceBounds quadratic_bounds() {
  SpaceBounds b = default_bounds();
  for (auto kind : kQuadraticKinds) b[kind] = {0.01, 1.0, 1e-13, 0.25};
  b[SlotKind::batch_size] = {128, 128, 1, 1};
  b.min_conv = b.max_conv = 0;
  b.min_fc = b.max_fc = 0;
  b.optimizers = {"sgd"};
  return b;
}

inline std::array<double, 8> quadratic_point(const Configuration& c) {
  const auto& t = c.training;
  return {t.learning_rate, t.dropout, t.weight_decay, t.momentum, t.lr_decay, t.grad_clip, t.label_smoothing,
          t.epoch_scale};
}

inline Configuration quadratic_start() {
  Configuration c;
  c.training = TrainingHP{.batch_size = 128,
                          .learning_rate = 0.5,
                          .dropout = 0.5,
                          .weight_decay = 0.5,
                          .momentum = 0.5,
                          .lr_decay = 0.5,
                          .grad_clip = 0.5,
                          .label_smoothing = 0.5,
                          .epoch_scale = 0.5};
  return c;
}

class QuadraticBlackbox final : public Blackbox {
 public:
  explicit QuadraticBlackbox(std::uint64_t problem_seed) {
    std::mt19937_64 rng(problem_seed);
    std::uniform_real_distribution<double> centre(0.15, 0.85), weight(1.0, 10.0);
    for (std::size_t i = 0; i < 8; ++i) {
      optimum_[i] = centre(rng);
      weights_[i] = weight(rng);
    }
  }

  double f(const Configuration& c) const {
    auto x = quadratic_point(c);
    double v = 0.0;
    for (std::size_t i = 0; i < 8; ++i) v += weights_[i] * (x[i] - optimum_[i]) * (x[i] - optimum_[i]);
    return v;
  }
  const std::array<double, 8>& optimum() const { return optimum_; }

  EvaluationResult evaluate(const EvaluationRequest& request) const override {
    EvaluationResult r;
    r.final_val_accuracy = -f(request.config);
    r.history.append({1, r.final_val_accuracy, 0.0, request.config.training.learning_rate});
    r.epochs_used = 1;
    r.wall_cost = request.data_fraction;
    return r;
  }
  bool concurrent_safe() const override { return true; }

 private:
  std::array<double, 8> optimum_{};
  std::array<double, 8> weights_{};
};

}  // namespace hypermads::testing
