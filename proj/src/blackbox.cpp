#include "hypermads/blackbox.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "hypermads/format.hpp"

namespace hypermads {

void EvaluationRequest::check() const {
  if (max_epochs < 1) throw std::invalid_argument("evaluation request: max_epochs must be >= 1");
  if (!(data_fraction > 0.0 && data_fraction <= 1.0))
    throw std::invalid_argument("evaluation request: data fraction must lie in (0, 1]");
}

EvaluationResult EvaluationResult::failure(std::string detail) {
  EvaluationResult r;
  r.failed = true;
  r.stop_reason = StopReason::evaluation_failed;
  r.detail = std::move(detail);
  return r;
}

namespace {

constexpr double kTopAccuracy = 0.995;
constexpr int kInputSize = 32;

struct OptimizerProfile {
  double best_step;  // effective step size with the best asymptote
  double edge;       // step / best_step above which training diverges
  double coupling;   // momentum amplification: step = lr / (1 - coupling·momentum)
  double offset;     // penalty relative to the best optimizer
  double momentum_weight;
};

OptimizerProfile profile_for(const std::string& name) {
  if (name == "adam") return {1.5e-3, 10.0, 0.0, 0.03, 0.05};
  if (name == "adagrad") return {2e-2, 10.0, 0.0, 0.12, 0.0};
  if (name == "rmsprop") return {1e-3, 4.0, 0.5, 0.06, 0.0};
  return {0.6, 2.0, 1.0, 0.0, 0.0};  // sgd and anything unknown
}

double sq(double x) { return x * x; }

double quantize(double value, double quantum) {
  if (!(quantum > 0.0)) return value;
  // Dividing by an integral inverse lands on the double nearest k·quantum.
  const double inverse = std::round(1.0 / quantum);
  if (std::abs(inverse * quantum - 1.0) < 1e-12) return std::round(value * inverse) / inverse;
  return std::round(value / quantum) * quantum;
}

double step_ratio(const Configuration& c, const OptimizerProfile& opt) {
  const double step = c.training.learning_rate / (1.0 - opt.coupling * c.training.momentum);
  return step / opt.best_step;
}

// Very narrow layers starve everything after them.
double bottleneck(double width, double floor) { return width < floor ? 0.5 * sq(std::log2(floor / width)) : 0.0; }

// Penalty >= 0; the asymptote is chance + (top - chance)·exp(-penalty).
double landscape_penalty(const Configuration& c, const OptimizerProfile& opt, double ratio, int spatial) {
  const auto& t = c.training;
  double p = opt.offset;
  p += 0.3 * sq(std::log10(ratio));
  p += opt.momentum_weight * sq(t.momentum - 0.9);
  p += 0.03 * sq(std::log2(t.batch_size / 96.0));
  p += 1.5 * sq(t.dropout - 0.3);
  p += 6000.0 * sq(t.weight_decay - 7e-4);
  p += 0.6 * sq(t.lr_decay - 0.85);
  p += 0.015 * sq(std::log(t.grad_clip / 3.0));
  p += 1.0 * sq(t.label_smoothing - 0.08);
  p += 0.15 * sq(1.0 - t.epoch_scale);

  p += 0.025 * sq(c.n_conv - 3.0);
  p += 0.015 * sq(c.n_fc - 1.0);
  if (!c.conv_layers.empty()) {
    double layers = 0.0;
    for (const auto& l : c.conv_layers) {
      layers += 0.02 * sq(std::log2(l.out_channels / 96.0)) + bottleneck(l.out_channels, 8.0);
      layers += 0.01 * sq(l.kernel_size - 3.0);
      layers += 0.03 * sq(l.padding - 0.5 * (l.kernel_size - 1));
      layers += 0.06 * sq(l.pooling - 2.0);
    }
    p += layers / static_cast<double>(c.conv_layers.size());
  }
  p += 0.03 * sq(std::log2(spatial / 4.0));
  if (!c.fc_sizes.empty()) {
    double fc = 0.0;
    for (int s : c.fc_sizes) fc += 0.01 * sq(std::log2(s / 384.0)) + bottleneck(s, 16.0);
    p += fc / static_cast<double>(c.fc_sizes.size());
  }
  return p;
}

}  // namespace

int feature_map_size(const Configuration& config) {
  int size = kInputSize;
  for (const auto& l : config.conv_layers) {
    size = (size + 2 * l.padding - l.kernel_size) / l.stride + 1;
    if (size < 1) return 0;
    size /= l.pooling;
    if (size < 1) return 0;
  }
  return size;
}

double backbone_accuracy(const SimulatedModel& m, double epoch, double data_fraction) {
  const double a_eff = m.asymptote * (0.8 + 0.2 * data_fraction);
  auto rise = [&](double e) { return m.chance + (a_eff - m.chance) * (1.0 - std::exp(-e / m.tau)); };
  double a = rise(epoch);
  if (m.divergent && epoch > m.peak_epoch) {
    const double top = rise(m.peak_epoch);
    a = m.chance + (top - m.chance) * std::exp(-(epoch - m.peak_epoch) / m.decay_tau);
  }
  return std::clamp(a, 0.0, 1.0);
}

namespace {

// Shared by simulate_curve and SimulatedBlackbox::evaluate so that a
// never-stopping monitor reproduces the plain curve.
EvaluationResult run_curve(const SimulatedModel& m, int max_epochs, double data_fraction, double quantum,
                           const EpochMonitor& monitor) {
  std::mt19937_64 rng(m.noise_seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  EvaluationResult result;
  double lr = m.initial_lr;
  for (int e = 1; e <= max_epochs; ++e) {
    const double z_acc = normal(rng);
    const double z_loss = normal(rng);
    const double sigma = m.noise_sigma * (lr / m.initial_lr);
    const double clean = backbone_accuracy(m, e, data_fraction);
    const double acc = std::clamp(quantize(clean + sigma * z_acc, quantum), 0.0, 1.0);
    const double loss = std::max(0.0, -std::log(std::clamp(clean, 1e-3, 0.999)) + 2.0 * sigma * z_loss);
    result.history.append({e, acc, loss, lr});

    if (monitor) {
      MonitorDecision d = monitor(result.history);
      if (d.verdict.stop) {
        result.stop_reason = d.verdict.reason;
        result.detail = std::move(d.verdict.detail);
        break;
      }
      if (d.next_learning_rate > 0.0) lr = d.next_learning_rate;
    }
  }
  result.epochs_used = static_cast<int>(result.history.size());
  result.final_val_accuracy = result.history.best_accuracy();
  result.wall_cost = result.epochs_used * data_fraction;
  return result;
}

}  // namespace

TrainingHistory simulate_curve(const SimulatedModel& model, int epochs, double data_fraction, double quantum) {
  if (epochs < 1) throw std::invalid_argument("simulate_curve: epochs must be >= 1");
  return run_curve(model, epochs, data_fraction, quantum, {}).history;
}

SimulatedBlackbox::SimulatedBlackbox(SpaceBounds bounds, SimulationOptions options)
    : bounds_(std::move(bounds)), options_(options) {
  bounds_.check();
}

SimulatedModel SimulatedBlackbox::model(const Configuration& config, std::uint64_t seed) const {
  const auto& name = bounds_.optimizers.at(static_cast<std::size_t>(config.optimizer_id));
  const OptimizerProfile opt = profile_for(name);
  const auto& t = config.training;

  SimulatedModel m;
  m.chance = options_.chance;
  m.noise_sigma = options_.noise_sigma;
  m.initial_lr = t.learning_rate;
  m.noise_seed = mix_seed(fnv1a(serialize(config)), seed);

  // Architecture-level offset, fixed per (layer counts, optimizer, seed).
  const std::string arch = std::to_string(config.n_conv) + "/" + std::to_string(config.n_fc) + "/" + name;
  const double u = static_cast<double>(mix_seed(fnv1a(arch), seed) >> 11) * 0x1.0p-53;

  const double ratio = step_ratio(config, opt);
  const int spatial = std::max(1, feature_map_size(config));
  const double penalty = landscape_penalty(config, opt, ratio, spatial) + 0.06 * u;
  m.asymptote = m.chance + (kTopAccuracy - m.chance) * std::exp(-penalty);

  m.tau = 2.5 * std::pow(ratio, -0.7) * (1.0 + 0.1 * config.n_conv) * std::sqrt(t.batch_size / 128.0) *
          (1.0 + t.dropout) / std::sqrt(t.epoch_scale);
  m.tau = std::clamp(m.tau, 1.0, 150.0);

  const double over = ratio / opt.edge;
  if (over > 5.0) {
    m.asymptote = m.chance;  // never learns
  } else if (over > 1.0) {
    m.divergent = true;
    m.asymptote = m.chance + 0.6 * (m.asymptote - m.chance);
    m.peak_epoch = std::max(1, static_cast<int>(std::lround(8.0 / over)));
    m.decay_tau = 5.0;
  }
  return m;
}

EvaluationResult SimulatedBlackbox::evaluate(const EvaluationRequest& request) const {
  request.check();
  if (auto v = validate(request.config, bounds_); !v.empty())
    return EvaluationResult::failure("invalid configuration: " + v.front().slot + " " + v.front().message);
  if (feature_map_size(request.config) < 1) return EvaluationResult::failure("feature map collapses to nothing");
  return run_curve(model(request.config, request.seed), request.max_epochs, request.data_fraction, options_.quantum,
                   request.monitor);
}

}  // namespace hypermads
