#include "hypermads/kernels.hpp"

#include <limits>
#include <stdexcept>


namespace hypermads {

namespace {

double evaluate_one(const Configuration& config, int epochs, double data_fraction, const Blackbox& blackbox,
                    std::uint64_t seed) {
  EvaluationRequest request;
  request.config = config;
  request.max_epochs = epochs;
  request.data_fraction = data_fraction;
  request.seed = seed;
  try {
    EvaluationResult r = blackbox.evaluate(request);
    if (r.failed) return -std::numeric_limits<double>::infinity();
    return r.final_val_accuracy;
  } catch (const std::exception&) {
    return -std::numeric_limits<double>::infinity();
  }
}

bool better(double acc, std::size_t idx, double best_acc, std::size_t best_idx) {
  return acc > best_acc || (acc == best_acc && idx < best_idx);
}

}  // namespace

std::vector<double> evaluate_batch_serial(std::span<const Configuration> configs, int epochs, double data_fraction,
                                          const Blackbox& blackbox, std::uint64_t seed) {
  std::vector<double> out(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i)
    out[i] = evaluate_one(configs[i], epochs, data_fraction, blackbox, seed);
  return out;
}

std::vector<double> evaluate_batch_parallel(std::span<const Configuration> configs, int epochs,
                                            double data_fraction, const Blackbox& blackbox, std::uint64_t seed) {
  if (!blackbox.concurrent_safe()) return evaluate_batch_serial(configs, epochs, data_fraction, blackbox, seed);
  std::vector<double> out(configs.size());
  const auto n = static_cast<std::ptrdiff_t>(configs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] =
        evaluate_one(configs[static_cast<std::size_t>(i)], epochs, data_fraction, blackbox, seed);
  return out;
}

std::vector<double> evaluate_batch(std::span<const Configuration> configs, int epochs, double data_fraction,
                                   const Blackbox& blackbox, std::uint64_t seed, Execution execution) {
  return execution == Execution::parallel
             ? evaluate_batch_parallel(configs, epochs, data_fraction, blackbox, seed)
             : evaluate_batch_serial(configs, epochs, data_fraction, blackbox, seed);
}

Lattice coarse_lattice(const SpaceBounds& bounds) {
  Lattice l;
  for (int n : {1, 2, 3, 4})
    if (n >= bounds.min_conv && n <= bounds.max_conv) l.conv_counts.push_back(n);
  for (int n : {1, 2})
    if (n >= bounds.min_fc && n <= bounds.max_fc) l.fc_counts.push_back(n);
  for (std::size_t i = 0; i < bounds.optimizers.size(); ++i) l.optimizers.push_back(static_cast<int>(i));

  auto set = [&](SlotKind k, std::vector<double> values) {
    std::vector<double> kept;
    for (double v : values)
      if (v >= bounds[k].lower && v <= bounds[k].upper) kept.push_back(v);
    if (kept.empty()) kept.push_back(bounds[k].lower);
    l.levels[static_cast<std::size_t>(k)] = std::move(kept);
  };
  set(SlotKind::out_channels, {32, 64, 128});
  set(SlotKind::kernel_size, {3, 5});
  set(SlotKind::stride, {1});
  set(SlotKind::padding, {1, 2});
  set(SlotKind::pooling, {2});
  set(SlotKind::fc_size, {128, 256, 512});
  set(SlotKind::batch_size, {64, 128, 256});
  set(SlotKind::learning_rate, {1e-4, 1e-3, 1e-2, 1e-1});
  set(SlotKind::dropout, {0.0, 0.25, 0.5});
  set(SlotKind::weight_decay, {0.0, 5e-4});
  set(SlotKind::momentum, {0.0, 0.9});
  set(SlotKind::lr_decay, {0.9});
  set(SlotKind::grad_clip, {5.0});
  set(SlotKind::label_smoothing, {0.0, 0.1});
  set(SlotKind::epoch_scale, {1.0});
  return l;
}

std::size_t lattice_size(const Lattice& lattice) {
  std::size_t n = lattice.conv_counts.size() * lattice.fc_counts.size() * lattice.optimizers.size();
  for (const auto& v : lattice.levels) n *= v.size();
  return n;
}

Configuration lattice_point(const Lattice& lattice, std::size_t index) {
  if (index >= lattice_size(lattice)) throw std::out_of_range("lattice_point: index out of range");
  auto take = [&](std::size_t radix) {
    std::size_t digit = index % radix;
    index /= radix;
    return digit;
  };
  auto level = [&](SlotKind k) {
    const auto& v = lattice.levels[static_cast<std::size_t>(k)];
    return v[take(v.size())];
  };

  Configuration c;
  c.n_conv = lattice.conv_counts[take(lattice.conv_counts.size())];
  c.n_fc = lattice.fc_counts[take(lattice.fc_counts.size())];
  c.optimizer_id = lattice.optimizers[take(lattice.optimizers.size())];

  ConvLayerHP conv;
  conv.out_channels = static_cast<int>(level(SlotKind::out_channels));
  conv.kernel_size = static_cast<int>(level(SlotKind::kernel_size));
  conv.stride = static_cast<int>(level(SlotKind::stride));
  conv.padding = static_cast<int>(level(SlotKind::padding));
  conv.pooling = static_cast<int>(level(SlotKind::pooling));
  c.conv_layers.assign(static_cast<std::size_t>(c.n_conv), conv);
  c.fc_sizes.assign(static_cast<std::size_t>(c.n_fc), static_cast<int>(level(SlotKind::fc_size)));

  auto& t = c.training;
  t.batch_size = static_cast<int>(level(SlotKind::batch_size));
  t.learning_rate = level(SlotKind::learning_rate);
  t.dropout = level(SlotKind::dropout);
  t.weight_decay = level(SlotKind::weight_decay);
  t.momentum = level(SlotKind::momentum);
  t.lr_decay = level(SlotKind::lr_decay);
  t.grad_clip = level(SlotKind::grad_clip);
  t.label_smoothing = level(SlotKind::label_smoothing);
  t.epoch_scale = level(SlotKind::epoch_scale);
  return c;
}

SweepResult lattice_sweep_serial(const Lattice& lattice, const Blackbox& blackbox, std::uint64_t seed,
                                 int max_epochs) {
  const std::size_t n = lattice_size(lattice);
  SweepResult r;
  r.best_accuracy = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double acc = evaluate_one(lattice_point(lattice, i), max_epochs, 1.0, blackbox, seed);
    if (better(acc, i, r.best_accuracy, r.best_index) || i == 0) {
      r.best_accuracy = acc;
      r.best_index = i;
    }
  }
  r.evaluated = n;
  if (n > 0) r.best = lattice_point(lattice, r.best_index);
  return r;
}

SweepResult lattice_sweep_parallel(const Lattice& lattice, const Blackbox& blackbox, std::uint64_t seed,
                                   int max_epochs) {
  if (!blackbox.concurrent_safe()) return lattice_sweep_serial(lattice, blackbox, seed, max_epochs);
  const std::size_t n = lattice_size(lattice);
  double best_acc = -std::numeric_limits<double>::infinity();
  std::size_t best_idx = n;

#pragma omp parallel
  {
    double local_acc = -std::numeric_limits<double>::infinity();
    std::size_t local_idx = n;
#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      const auto idx = static_cast<std::size_t>(i);
      double acc = evaluate_one(lattice_point(lattice, idx), max_epochs, 1.0, blackbox, seed);
      if (local_idx == n || better(acc, idx, local_acc, local_idx)) {
        local_acc = acc;
        local_idx = idx;
      }
    }
#pragma omp critical(hypermads_sweep)
    if (local_idx != n && (best_idx == n || better(local_acc, local_idx, best_acc, best_idx))) {
      best_acc = local_acc;
      best_idx = local_idx;
    }
  }

  SweepResult r;
  r.evaluated = n;
  if (best_idx != n) {
    r.best_accuracy = best_acc;
    r.best_index = best_idx;
    r.best = lattice_point(lattice, best_idx);
  }
  return r;
}

}  // namespace hypermads
