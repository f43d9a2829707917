#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "hypermads/kernels.hpp"

using namespace hypermads;

namespace {

// The coarse lattice cut down to a few hundred points.
Lattice small_lattice(const SpaceBounds& bounds) {
  auto l = coarse_lattice(bounds);
  l.conv_counts = {1, 2};
  l.fc_counts = {1};
  l.optimizers = {0, 1};
  l.levels[static_cast<std::size_t>(SlotKind::learning_rate)] = {1e-3, 1e-2, 1e-1};
  l.levels[static_cast<std::size_t>(SlotKind::batch_size)] = {64, 256};
  l.levels[static_cast<std::size_t>(SlotKind::dropout)] = {0.0, 0.25};
  l.levels[static_cast<std::size_t>(SlotKind::out_channels)] = {32, 128};
  l.levels[static_cast<std::size_t>(SlotKind::momentum)] = {0.9};
  l.levels[static_cast<std::size_t>(SlotKind::label_smoothing)] = {0.1};
  l.levels[static_cast<std::size_t>(SlotKind::weight_decay)] = {5e-4};
  l.levels[static_cast<std::size_t>(SlotKind::fc_size)] = {256};
  l.levels[static_cast<std::size_t>(SlotKind::padding)] = {1};
  return l;
}

}  // namespace

TEST_CASE("serial and parallel batches agree") {
  auto bounds = default_bounds();
  SimulatedBlackbox box(bounds);
  std::vector<Configuration> configs;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 64; ++i) {
    auto c = preset(i % 2 ? "p1" : "p3");
    c.training.learning_rate = std::pow(10.0, -4.0 + 4.0 * u(rng));
    configs.push_back(c);
  }
  configs[5].training.dropout = 4.0;  // invalid
  auto a = evaluate_batch_serial(configs, 200, 0.1, box, 9);
  auto b = evaluate_batch_parallel(configs, 200, 0.1, box, 9);
  CHECK(a == b);
  CHECK(std::isinf(a[5]));
  CHECK(evaluate_batch(configs, 200, 0.1, box, 9, Execution::serial) == a);
  for (std::size_t i = 0; i < configs.size(); ++i)
    if (i != 5) CHECK(a[i] == box.evaluate({configs[i], 200, 0.1, 9, {}}).final_val_accuracy);
}

TEST_CASE("coarse lattice size and decoding") {
  auto bounds = default_bounds();
  auto l = coarse_lattice(bounds);
  std::size_t expected = l.optimizers.size();
  for (const auto& v : l.levels) expected *= v.size();
  expected *= l.conv_counts.size() * l.fc_counts.size();
  CHECK(lattice_size(l) == expected);
  CHECK(lattice_size(l) == 331776);

  std::set<std::string> seen;
  for (std::size_t i = 0; i < lattice_size(l); i += 997) {
    auto c = lattice_point(l, i);
    CHECK(is_valid(c, bounds));
    CHECK(c.training.epoch_scale == 1.0);
    for (const auto& layer : c.conv_layers) CHECK(layer == c.conv_layers.front());
    seen.insert(serialize(c));
  }
  CHECK(seen.size() == (lattice_size(l) + 996) / 997);
  CHECK_THROWS_AS(lattice_point(l, lattice_size(l)), std::out_of_range);
}

TEST_CASE("sweep finds the brute-force best, serial and parallel alike") {
  auto bounds = default_bounds();
  SimulatedBlackbox box(bounds);
  auto l = small_lattice(bounds);
  const std::size_t n = lattice_size(l);
  REQUIRE(n < 2000);

  double best = -1.0;
  std::size_t best_index = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = box.evaluate({lattice_point(l, i), 200, 1.0, 4, {}});
    if (!r.failed && r.final_val_accuracy > best) {
      best = r.final_val_accuracy;
      best_index = i;
    }
  }
  auto s = lattice_sweep_serial(l, box, 4);
  auto p = lattice_sweep_parallel(l, box, 4);
  CHECK(s.best_accuracy == best);
  CHECK(s.best_index == best_index);
  CHECK(s.evaluated == n);
  CHECK(p.best_accuracy == s.best_accuracy);
  CHECK(p.best_index == s.best_index);
  CHECK(p.best == s.best);
}
