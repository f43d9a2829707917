#pragma once

// Mixed-variable MADS: orthogonal poll around the incumbent, categorical
// neighbors, surrogate ordering and opportunistic evaluation with an
// early-stopping monitor.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "hypermads/blackbox.hpp"
#include "hypermads/early_stop.hpp"
#include "hypermads/ledger.hpp"
#include "hypermads/mesh.hpp"
#include "hypermads/poll_set.hpp"
#include "hypermads/surrogates.hpp"

namespace hypermads {

struct IterationOutcome {
  enum class Status : std::uint8_t { success, failure };

  Status status = Status::failure;
  double evaluations_spent = 0.0;
  std::optional<Configuration> new_incumbent;
  double new_score = 0.0;
  std::size_t evaluated = 0;

  bool success() const { return status == Status::success; }
};

// Success: index + 1, capped at 0. Failure: index - 1.
Mesh update_mesh(const Mesh& mesh, const IterationOutcome& outcome);

// Householder columns of a seeded normal vector and their negations (2n),
// each scaled to unit infinity norm.
std::vector<std::vector<double>> poll_directions(std::size_t n, std::uint64_t seed);

// Δ_k ⊙ d for the incumbent's quantitative slots, before projection.
std::vector<double> poll_displacement(const Configuration& incumbent, std::span<const double> direction,
                                      const Mesh& mesh);

// Quantitative candidates are snapped to the mesh anchored at the incumbent
// and clipped; duplicates and copies of the incumbent are dropped. The
// categorical neighbors follow when `extended` is set.
PollSet generate_poll(const Configuration& incumbent, const Mesh& mesh, std::uint64_t seed, const SpaceBounds& bounds,
                      bool extended = true);

struct CandidateScore {
  double score = 0.0;  // -inf marks a failed evaluation
  double cost = 1.0;
};
using CandidateEvaluator = std::function<CandidateScore(const PollCandidate&)>;

// Evaluates in order and returns at the first strict improvement.
IterationOutcome opportunistic_evaluate(std::span<const PollCandidate> ordered, double incumbent_score,
                                        const CandidateEvaluator& evaluator);

// Optional search step: candidates to try before the poll. Empty = skip.
using SearchHook = std::function<std::vector<Configuration>(const Configuration& incumbent, const Mesh& mesh,
                                                            int iteration)>;

struct CampaignOptions {
  SpaceBounds bounds = default_bounds();
  StopMode stop_mode = StopMode::scheduler_baseline;
  BaselineEnvelope envelope;  // milestones and margins; any baseline is discarded
  SurrogateSpec ranking = SurrogateSpec::named("r4");
  std::uint64_t seed = 0;
  int max_epochs = 200;
  int min_mesh_index = -30;
  int max_iterations = 0;  // 0 = unlimited
  bool charge_ranking_cost = true;
  bool extended_poll = true;
  Execution execution = Execution::parallel;
  SearchHook search;
  std::function<void(const LedgerRecord&)> on_record;
  // Records reused in order instead of calling the blackbox (resume). Each
  // must match the record the campaign would produce next.
  const RunLedger* replay = nullptr;
  // Keep only the replay prefix that matches and continue fresh from the
  // first disagreement (a resumed run with a larger budget).
  bool replay_prefix = false;
};

enum class Termination : std::uint8_t { budget, mesh, iterations };

struct CampaignResult {
  RunLedger ledger;
  Configuration incumbent;
  double incumbent_score = 0.0;
  Mesh mesh;
  int iterations = 0;
  Termination termination = Termination::budget;
};

// Throws std::invalid_argument for budget <= 0 or an invalid initial point,
// std::runtime_error when a replay record disagrees with the campaign and
// replay_prefix is off.
CampaignResult run_campaign(const Configuration& initial, int budget_bbe, const Blackbox& blackbox,
                            const CampaignOptions& options);

}  // namespace hypermads
