#pragma once

// Blackbox evaluation contract: train a configuration epoch by epoch under an
// optional early-stopping monitor and report its best validation accuracy.

#include <cstdint>
#include <functional>
#include <string>

#include "hypermads/early_stop.hpp"
#include "hypermads/hp_space.hpp"

namespace hypermads {

// Called once after every epoch. The returned learning rate is applied to the
// next epoch by trainers that accept it.
using EpochMonitor = std::function<MonitorDecision(const TrainingHistory&)>;

struct EvaluationRequest {
  Configuration config;
  int max_epochs = 200;
  double data_fraction = 1.0;
  std::uint64_t seed = 0;
  EpochMonitor monitor;  // empty: never stop early

  // Throws std::invalid_argument for max_epochs < 1 or a fraction outside (0, 1].
  void check() const;
};

struct EvaluationResult {
  TrainingHistory history;
  double final_val_accuracy = 0.0;  // best epoch
  int epochs_used = 0;
  StopReason stop_reason = StopReason::none;
  std::string detail;
  double wall_cost = 0.0;  // abstract units: epochs × data fraction
  bool failed = false;

  static EvaluationResult failure(std::string detail);
};

class Blackbox {
 public:
  virtual ~Blackbox() = default;
  virtual EvaluationResult evaluate(const EvaluationRequest& request) const = 0;
  // True when evaluate() may run concurrently from several threads.
  virtual bool concurrent_safe() const { return false; }
};

// Per-configuration parameters of the simulated learning curve.
struct SimulatedModel {
  double chance = 0.1;
  double asymptote = 0.1;  // A, in [chance, 0.995]
  double tau = 1.0;        // epochs
  bool divergent = false;
  int peak_epoch = 0;      // divergent curves decay after this epoch
  double decay_tau = 5.0;
  double noise_sigma = 0.0;
  double initial_lr = 0.01;
  std::uint64_t noise_seed = 0;
};

struct SimulationOptions {
  double noise_sigma = 0.003;
  double chance = 0.1;
  double quantum = 1e-4;  // validation-set resolution; 0 disables rounding
};

// Side of the last feature map for a 32×32 input; 0 when a layer leaves
// nothing (the simulated trainer rejects such networks).
int feature_map_size(const Configuration& config);

// Noise-free accuracy at (possibly fractional) epoch e >= 0.
double backbone_accuracy(const SimulatedModel& model, double epoch, double data_fraction);

// Curve at a constant learning rate, no monitor.
TrainingHistory simulate_curve(const SimulatedModel& model, int epochs, double data_fraction,
                               double quantum = SimulationOptions{}.quantum);

// Deterministic stand-in for network training. The effective step size is the
// learning rate amplified by momentum; the best step sits just below the
// point where training diverges. The asymptote rewards a few conv layers with
// mid-sized channels, a small final feature map and light regularization.
// Small steps, large batches, depth and dropout slow the curve down.
// Learning-rate cuts from the monitor shrink the epoch-to-epoch noise.
class SimulatedBlackbox final : public Blackbox {
 public:
  explicit SimulatedBlackbox(SpaceBounds bounds, SimulationOptions options = {});

  SimulatedModel model(const Configuration& config, std::uint64_t seed) const;
  EvaluationResult evaluate(const EvaluationRequest& request) const override;
  bool concurrent_safe() const override { return true; }

  const SpaceBounds& bounds() const { return bounds_; }
  const SimulationOptions& options() const { return options_; }

 private:
  SpaceBounds bounds_;
  SimulationOptions options_;
};

}  // namespace hypermads
