#pragma once

// Static low-fidelity surrogates used to rank poll candidates before the
// opportunistic evaluation, with their cost in full-evaluation units.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hypermads/blackbox.hpp"
#include "hypermads/poll_set.hpp"

namespace hypermads {

enum class SurrogateKind : std::uint8_t { none, r1, r2, r3, r4, oracle, custom };

struct SurrogateSpec {
  SurrogateKind kind = SurrogateKind::none;
  int epoch_budget = 0;
  double data_fraction = 1.0;
  double cost_ratio = 0.0;

  // r1 = 25 epochs on all data (0.125), r2 = 10 epochs (0.05),
  // r3 = 200 epochs on 20% (0.20), r4 = 200 epochs on 10% (0.10);
  // oracle = the full objective at `full_epochs` (1.0); none = no ranking.
  // Also accepts "custom:<epochs>,<fraction>,<cost>".
  static SurrogateSpec named(std::string_view name, int full_epochs = 200);
  static SurrogateSpec custom(int epoch_budget, double data_fraction, double cost_ratio);

  bool enabled() const { return kind != SurrogateKind::none; }
  // Throws std::invalid_argument when the fields disagree with the kind.
  void check() const;

  bool operator==(const SurrogateSpec&) const = default;
};

std::string to_string(const SurrogateSpec& spec);

double surrogate_cost(const SurrogateSpec& spec);

enum class Execution : std::uint8_t { serial, parallel };

// Low-fidelity accuracy estimate, no early stopping. Failures give -inf.
double estimate(const SurrogateSpec& spec, const Configuration& config, const Blackbox& blackbox,
                std::uint64_t seed);

struct RankedCandidate {
  PollCandidate candidate;
  double estimate = 0.0;
  std::size_t poll_index = 0;
};

struct RankedPoll {
  std::vector<RankedCandidate> candidates;  // best estimate first, ties in poll order
  double cost = 0.0;                        // |poll| × cost ratio
};

// With a disabled spec the poll order is kept and nothing is charged.
RankedPoll rank_candidates(const PollSet& poll, const SurrogateSpec& spec, const Blackbox& blackbox,
                           std::uint64_t seed, Execution execution = Execution::parallel);

}  // namespace hypermads
