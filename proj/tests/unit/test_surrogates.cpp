#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hypermads/mads.hpp"
#include "hypermads/surrogates.hpp"

using namespace hypermads;

namespace {

Configuration random_config(std::mt19937_64& rng, const SpaceBounds& b) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  static const char* names[] = {"p1", "p2", "p3"};
  Configuration c = preset(names[static_cast<int>(u(rng) * 3)]);
  c.optimizer_id = static_cast<int>(u(rng) * 4);
  auto& t = c.training;
  t.learning_rate = std::pow(10.0, -4.0 + 3.0 * u(rng));
  t.batch_size = 16 + static_cast<int>(u(rng) * 496);
  t.dropout = 0.9 * u(rng);
  t.momentum = 0.95 * u(rng);
  t.weight_decay = 0.01 * u(rng);
  t.label_smoothing = 0.3 * u(rng);
  t.epoch_scale = 0.25 + 0.75 * u(rng);
  for (auto& l : c.conv_layers) l.out_channels = 4 + static_cast<int>(u(rng) * 250);
  for (auto& s : c.fc_sizes) s = 8 + static_cast<int>(u(rng) * 1000);
  REQUIRE(is_valid(c, b));
  return c;
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j);
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

PollSet poll_of(const std::vector<Configuration>& configs) {
  PollSet p;
  for (const auto& c : configs) p.candidates.push_back({c, PollOrigin::poll_direction});
  return p;
}

// Scores are read off the learning rate: lr 0.1·k scores k, flat curve.
class TableBlackbox final : public Blackbox {
 public:
  EvaluationResult evaluate(const EvaluationRequest& req) const override {
    EvaluationResult r;
    const double acc = std::round(req.config.training.learning_rate * 10.0) / 10.0;
    for (int e = 1; e <= req.max_epochs; ++e) r.history.append({e, acc, 1.0, 0.1});
    r.epochs_used = req.max_epochs;
    r.final_val_accuracy = acc;
    return r;
  }
  bool concurrent_safe() const override { return true; }
};

}  // namespace

TEST_CASE("cost ratio table") {
  CHECK(surrogate_cost(SurrogateSpec::named("r1")) == 0.125);
  CHECK(surrogate_cost(SurrogateSpec::named("r2")) == 0.05);
  CHECK(surrogate_cost(SurrogateSpec::named("r3")) == 0.20);
  CHECK(surrogate_cost(SurrogateSpec::named("r4")) == 0.10);
  CHECK(surrogate_cost(SurrogateSpec::named("oracle")) == 1.0);
  CHECK(surrogate_cost(SurrogateSpec::named("none")) == 0.0);
}

TEST_CASE("fidelity table") {
  auto r1 = SurrogateSpec::named("r1");
  CHECK((r1.epoch_budget == 25 && r1.data_fraction == 1.0));
  auto r2 = SurrogateSpec::named("r2");
  CHECK((r2.epoch_budget == 10 && r2.data_fraction == 1.0));
  auto r3 = SurrogateSpec::named("r3");
  CHECK((r3.epoch_budget == 200 && r3.data_fraction == 0.2));
  auto r4 = SurrogateSpec::named("r4");
  CHECK((r4.epoch_budget == 200 && r4.data_fraction == 0.1));
  auto full = SurrogateSpec::named("oracle");
  CHECK((full.epoch_budget == 200 && full.data_fraction == 1.0));
  CHECK(SurrogateSpec::named("R4") == r4);
  CHECK(SurrogateSpec::named("oracle", 50).epoch_budget == 50);
  for (auto name : {"r1", "r2", "r3", "r4", "none", "oracle"}) CHECK_NOTHROW(SurrogateSpec::named(name).check());
}

TEST_CASE("custom specs") {
  auto c = SurrogateSpec::named("custom:40,0.5,0.1");
  CHECK(c.kind == SurrogateKind::custom);
  CHECK(c.epoch_budget == 40);
  CHECK(c.data_fraction == 0.5);
  CHECK(c.cost_ratio == 0.1);
  CHECK(SurrogateSpec::named(to_string(c)) == c);
  CHECK_THROWS_AS(SurrogateSpec::named("custom:40,0.5"), std::invalid_argument);
  CHECK_THROWS_AS(SurrogateSpec::custom(0, 0.5, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(SurrogateSpec::custom(10, 1.5, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(SurrogateSpec::custom(10, 0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(SurrogateSpec::named("r9"), std::invalid_argument);

  auto bad = SurrogateSpec::named("r4");
  bad.cost_ratio = 0.3;
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
}

TEST_CASE("oracle estimate is the full accuracy") {
  auto bounds = default_bounds();
  SimulatedBlackbox box(bounds);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    auto c = random_config(rng, bounds);
    auto full = box.evaluate({c, 200, 1.0, 4, {}});
    double e = estimate(SurrogateSpec::named("oracle"), c, box, 4);
    if (full.failed)
      CHECK(std::isinf(e));
    else
      CHECK(e == full.final_val_accuracy);
  }
}

TEST_CASE("low-fidelity estimates stay below the full run") {
  auto bounds = default_bounds();
  SimulatedBlackbox box(bounds, SimulationOptions{.noise_sigma = 0.0});
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    auto c = random_config(rng, bounds);
    auto full = box.evaluate({c, 200, 1.0, 4, {}});
    if (full.failed) continue;
    for (auto name : {"r1", "r2", "r3", "r4"}) CHECK(estimate(SurrogateSpec::named(name), c, box, 4) <= full.final_val_accuracy);
  }
}

TEST_CASE("shorter training underestimates a slow learner more") {
  auto bounds = default_bounds();
  SimulatedBlackbox box(bounds, SimulationOptions{.noise_sigma = 0.0});
  auto slow = preset("p3");
  slow.training.learning_rate = 1e-4;
  slow.training.momentum = 0.0;
  slow.training.batch_size = 512;
  REQUIRE(box.model(slow, 1).tau > 10.0);
  CHECK(estimate(SurrogateSpec::named("r2"), slow, box, 1) < estimate(SurrogateSpec::named("r1"), slow, box, 1));
}

TEST_CASE("estimates are deterministic") {
  auto bounds = default_bounds();
  SimulatedBlackbox box(bounds);
  auto c = preset("p2");
  for (auto name : {"r1", "r2", "r3", "r4", "oracle"})
    CHECK(estimate(SurrogateSpec::named(name), c, box, 3) == estimate(SurrogateSpec::named(name), c, box, 3));
  CHECK_THROWS_AS(estimate(SurrogateSpec::named("none"), c, box, 3), std::invalid_argument);
}

TEST_CASE("failed estimates give the worst score") {
  SimulatedBlackbox box(default_bounds());
  auto c = preset("p1");
  c.training.dropout = 5.0;
  CHECK(estimate(SurrogateSpec::named("r4"), c, box, 1) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("R4 ranks random configurations like the full objective") {
  auto bounds = default_bounds();
  SimulatedBlackbox box(bounds);
  std::mt19937_64 rng(2024);
  std::vector<double> r4, full;
  while (r4.size() < 100) {
    auto c = random_config(rng, bounds);
    auto f = box.evaluate({c, 200, 1.0, 1, {}});
    if (f.failed) continue;
    full.push_back(f.final_val_accuracy);
    r4.push_back(estimate(SurrogateSpec::named("r4"), c, box, 1));
  }
  double rho = spearman(r4, full);
  MESSAGE("spearman " << rho);
  CHECK(rho >= 0.8);
}

TEST_CASE("ranking without a surrogate keeps the order for free") {
  SimulatedBlackbox box(default_bounds());
  auto poll = generate_poll(preset("p1"), Mesh(default_bounds()), 3, default_bounds());
  auto ranked = rank_candidates(poll, SurrogateSpec::named("none"), box, 1);
  CHECK(ranked.cost == 0.0);
  REQUIRE(ranked.candidates.size() == poll.size());
  for (std::size_t i = 0; i < poll.size(); ++i) {
    CHECK(ranked.candidates[i].poll_index == i);
    CHECK(ranked.candidates[i].candidate.config == poll.candidates[i].config);
  }
}

TEST_CASE("six candidates under R4 cost 0.6") {
  TableBlackbox box;
  std::vector<Configuration> configs;
  for (double lr : {0.3, 0.5, 0.1, 0.5, 0.9, 0.2}) {
    auto c = preset("p1");
    c.training.learning_rate = lr;
    configs.push_back(c);
  }
  auto ranked = rank_candidates(poll_of(configs), SurrogateSpec::named("r4"), box, 1);
  CHECK(ranked.cost == doctest::Approx(0.6).epsilon(1e-12));
  std::vector<std::size_t> order;
  for (const auto& r : ranked.candidates) order.push_back(r.poll_index);
  CHECK(order == std::vector<std::size_t>{4, 1, 3, 0, 5, 2});  // ties keep poll order
}

TEST_CASE("oracle ranking sorts by the true score") {
  auto bounds = default_bounds();
  SimulatedBlackbox box(bounds);
  auto poll = generate_poll(preset("p2"), Mesh(bounds), 8, bounds);
  auto ranked = rank_candidates(poll, SurrogateSpec::named("oracle"), box, 5);
  std::vector<double> truth;
  for (const auto& r : ranked.candidates) {
    auto f = box.evaluate({r.candidate.config, 200, 1.0, 5, {}});
    truth.push_back(f.failed ? -std::numeric_limits<double>::infinity() : f.final_val_accuracy);
  }
  CHECK(std::is_sorted(truth.rbegin(), truth.rend()));
  CHECK(ranked.cost == doctest::Approx(static_cast<double>(poll.size())));
}

TEST_CASE("serial and parallel ranking agree") {
  auto bounds = default_bounds();
  SimulatedBlackbox box(bounds);
  auto poll = generate_poll(preset("p3"), Mesh(bounds, -30, -2), 4, bounds);
  auto a = rank_candidates(poll, SurrogateSpec::named("r4"), box, 2, Execution::serial);
  auto b = rank_candidates(poll, SurrogateSpec::named("r4"), box, 2, Execution::parallel);
  REQUIRE(a.candidates.size() == b.candidates.size());
  for (std::size_t i = 0; i < a.candidates.size(); ++i) {
    CHECK(a.candidates[i].poll_index == b.candidates[i].poll_index);
    CHECK(a.candidates[i].estimate == b.candidates[i].estimate);
  }
  CHECK(a.cost == b.cost);
}
