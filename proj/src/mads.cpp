#include "hypermads/mads.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <unordered_set>

#include "hypermads/format.hpp"

namespace hypermads {

namespace {
constexpr double kBudgetTolerance = 1e-9;
constexpr double kWorst = -std::numeric_limits<double>::infinity();
}  // namespace

Mesh update_mesh(const Mesh& mesh, const IterationOutcome& outcome) {
  return mesh.with_index(outcome.success() ? std::min(0, mesh.index() + 1) : mesh.index() - 1);
}

std::vector<std::vector<double>> poll_directions(std::size_t n, std::uint64_t seed) {
  std::vector<std::vector<double>> dirs;
  if (n == 0) return dirs;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  double norm2 = 0.0;
  while (norm2 < 1e-12) {
    norm2 = 0.0;
    for (auto& x : v) {
      x = normal(rng);
      norm2 += x * x;
    }
  }

  dirs.reserve(2 * n);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> h(n);
    double inf = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = (i == j ? 1.0 : 0.0) - 2.0 * v[i] * v[j] / norm2;
      inf = std::max(inf, std::abs(h[i]));
    }
    for (auto& x : h) x /= inf;
    dirs.push_back(std::move(h));
  }
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> neg = dirs[j];
    for (auto& x : neg) x = -x;
    dirs.push_back(std::move(neg));
  }
  return dirs;
}

std::vector<double> poll_displacement(const Configuration& incumbent, std::span<const double> direction,
                                      const Mesh& mesh) {
  const auto slots = quantitative_slots(incumbent);
  if (direction.size() != slots.size()) throw std::invalid_argument("poll_displacement: direction size mismatch");
  std::vector<double> d(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) d[i] = mesh.poll_size(slots[i].kind) * direction[i];
  return d;
}

PollSet generate_poll(const Configuration& incumbent, const Mesh& mesh, std::uint64_t seed, const SpaceBounds& bounds,
                      bool extended) {
  PollSet poll;
  const auto slots = quantitative_slots(incumbent);
  const auto x = quantitative_values(incumbent);
  poll.directions = poll_directions(slots.size(), seed);

  std::unordered_set<std::string> seen{serialize(incumbent)};
  std::vector<double> y(x.size());
  for (const auto& dir : poll.directions) {
    const auto disp = poll_displacement(incumbent, dir, mesh);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto& b = bounds[slots[i].kind];
      y[i] = snap_to_mesh(x[i] + disp[i], x[i], mesh.mesh_size(slots[i].kind), b.lower, b.upper);
    }
    Configuration c = with_quantitative_values(incumbent, y);
    if (seen.insert(serialize(c)).second) poll.candidates.push_back({std::move(c), PollOrigin::poll_direction});
  }

  if (extended) {
    for (auto& n : neighbors(incumbent, bounds))
      if (seen.insert(serialize(n.config)).second)
        poll.candidates.push_back({std::move(n.config), PollOrigin::categorical_neighbor});
  }
  return poll;
}

IterationOutcome opportunistic_evaluate(std::span<const PollCandidate> ordered, double incumbent_score,
                                        const CandidateEvaluator& evaluator) {
  IterationOutcome out;
  for (const auto& candidate : ordered) {
    CandidateScore s = evaluator(candidate);
    ++out.evaluated;
    out.evaluations_spent += s.cost;
    if (s.score > incumbent_score) {
      out.status = IterationOutcome::Status::success;
      out.new_incumbent = candidate.config;
      out.new_score = s.score;
      break;
    }
  }
  return out;
}

namespace {

class Campaign {
 public:
  Campaign(int budget, const Blackbox& blackbox, const CampaignOptions& options)
      : budget_(budget), blackbox_(blackbox), opt_(options), mesh_(options.bounds, options.min_mesh_index, 0) {
    opt_.ranking.check();
    opt_.envelope.check();
    opt_.envelope.baseline = {};
    if (opt_.replay) replay_end_ = opt_.replay->size();
  }

  CampaignResult run(const Configuration& initial) {
    incumbent_ = initial;
    incumbent_score_ = full_eval(initial);
    ledger_.records.back().incumbent = true;
    notify();

    CampaignResult result;
    result.termination = Termination::budget;
    while (true) {
      if (mesh_.exhausted()) {
        result.termination = Termination::mesh;
        break;
      }
      if (opt_.max_iterations > 0 && iteration_ >= opt_.max_iterations) {
        result.termination = Termination::iterations;
        break;
      }
      if (!room_for(1.0)) break;
      ++iteration_;
      if (!iterate()) break;
    }

    result.ledger = std::move(ledger_);
    result.incumbent = incumbent_;
    result.incumbent_score = incumbent_score_;
    result.mesh = mesh_;
    result.iterations = iteration_;
    return result;
  }

 private:
  bool room_for(double cost) const { return cumulative_ + cost <= budget_ + kBudgetTolerance; }

  const LedgerRecord* replayed() const {
    const std::size_t i = ledger_.records.size();
    if (opt_.replay && i < replay_end_) return &opt_.replay->records[i];
    return nullptr;
  }

  // Throws, or drops the rest of the replay when only its prefix must match.
  void mismatch(const std::string& what) {
    if (opt_.replay_prefix) {
      replay_end_ = ledger_.records.size();
      return;
    }
    throw std::runtime_error("ledger record " + std::to_string(ledger_.records.size()) +
                             " does not match the campaign: " + what);
  }

  // The replayed record to reuse for a full evaluation of `config`, if any.
  const LedgerRecord* reusable(const std::string& config) {
    const LedgerRecord* old = replayed();
    if (!old) return nullptr;
    if (old->kind == RecordKind::full_eval && old->config == config) return old;
    mismatch(old->kind != RecordKind::full_eval ? "expected full-eval" : "configuration differs");
    return nullptr;
  }

  // Appends a record; the sink sees it once its incumbent flag is final.
  void emit(LedgerRecord r) {
    r.record_index = ledger_.records.size();
    r.iteration = iteration_;
    r.mesh_index = mesh_.index();
    cumulative_ += r.charged_cost;
    r.cumulative_cost = cumulative_;
    if (const LedgerRecord* old = replayed()) {
      if (old->kind != r.kind)
        mismatch("expected " + std::string(to_string(r.kind)));
      else if (old->config != r.config)
        mismatch("configuration differs");
      else if (old->charged_cost != r.charged_cost)
        mismatch("charged cost differs");
    }
    ledger_.records.push_back(std::move(r));
  }

  void notify() {
    if (opt_.on_record) opt_.on_record(ledger_.records.back());
  }

  double full_eval(const Configuration& config) {
    LedgerRecord r;
    r.kind = RecordKind::full_eval;
    r.config = serialize(config);
    r.charged_cost = 1.0;

    if (const LedgerRecord* old = reusable(r.config)) {
      r.score = old->score;
      r.epochs_used = old->epochs_used;
      r.stop_reason = old->stop_reason;
      r.history = old->history;
    } else {
      EvaluationRequest request;
      request.config = config;
      request.max_epochs = opt_.max_epochs;
      request.seed = opt_.seed;
      if (opt_.stop_mode != StopMode::none) {
        request.monitor = [env = opt_.envelope, mode = opt_.stop_mode](const TrainingHistory& h) {
          return combined_verdict(h, env, mode);
        };
      }
      EvaluationResult res = blackbox_.evaluate(request);
      r.score = res.failed ? kWorst : res.final_val_accuracy;
      r.epochs_used = res.epochs_used;
      r.stop_reason = res.stop_reason;
      r.history = std::move(res.history);
    }
    r.work = r.epochs_used;
    evaluated_.insert(r.config);

    const double score = r.score;
    if (!r.history.empty()) opt_.envelope = update_baseline(opt_.envelope, r.history, score, incumbent_score_);
    r.incumbent = ledger_.records.empty() ? true : score > incumbent_score_;
    emit(std::move(r));
    return score;
  }

  std::vector<PollCandidate> order(const PollSet& poll) {
    std::vector<PollCandidate> ordered;
    const double pass_cost = static_cast<double>(poll.size()) * opt_.ranking.cost_ratio;
    const double charged = opt_.charge_ranking_cost ? pass_cost : 0.0;
    if (!opt_.ranking.enabled() || !room_for(charged + 1.0)) return poll.candidates;

    // Estimates come from the replay ledger when it covers the whole pass.
    std::vector<double> estimates;
    const std::size_t start = ledger_.records.size();
    if (opt_.replay && start + poll.size() <= replay_end_) {
      for (std::size_t i = 0; i < poll.size(); ++i) {
        const auto& old = opt_.replay->records[start + i];
        if (old.kind != RecordKind::surrogate_eval) break;
        estimates.push_back(old.score);
      }
      if (estimates.size() != poll.size()) estimates.clear();
    }

    RankedPoll ranked;
    if (estimates.empty()) {
      ranked = rank_candidates(poll, opt_.ranking, blackbox_, opt_.seed, opt_.execution);
      estimates.assign(poll.size(), 0.0);
      for (const auto& c : ranked.candidates) estimates[c.poll_index] = c.estimate;
    } else {
      for (std::size_t i = 0; i < poll.size(); ++i) ranked.candidates.push_back({poll.candidates[i], estimates[i], i});
      std::stable_sort(ranked.candidates.begin(), ranked.candidates.end(),
                       [](const RankedCandidate& a, const RankedCandidate& b) { return a.estimate > b.estimate; });
    }

    for (std::size_t i = 0; i < poll.size(); ++i) {
      LedgerRecord r;
      r.kind = RecordKind::surrogate_eval;
      r.config = serialize(poll.candidates[i].config);
      r.score = estimates[i];
      r.epochs_used = opt_.ranking.epoch_budget;
      r.work = opt_.ranking.epoch_budget * opt_.ranking.data_fraction;
      emit(std::move(r));
      notify();
    }
    LedgerRecord pass;
    pass.kind = RecordKind::ranking_pass;
    pass.charged_cost = charged;
    emit(std::move(pass));
    notify();

    ordered.reserve(poll.size());
    for (auto& c : ranked.candidates) ordered.push_back(std::move(c.candidate));
    return ordered;
  }

  // Returns false when the budget ran out before the poll finished.
  bool iterate() {
    bool out_of_budget = false;
    auto evaluator = [&](const PollCandidate& c) -> CandidateScore {
      if (!room_for(1.0)) {
        out_of_budget = true;
        return {kWorst, 0.0};
      }
      const double s = full_eval(c.config);
      notify();
      return {s, 1.0};
    };
    // Once the budget is gone every remaining candidate is skipped at no cost.
    auto guarded = [&](const PollCandidate& c) -> CandidateScore {
      if (out_of_budget) return {kWorst, 0.0};
      return evaluator(c);
    };

    if (opt_.search) {
      std::vector<PollCandidate> trial;
      for (auto& c : opt_.search(incumbent_, mesh_, iteration_))
        if (is_valid(c, opt_.bounds) && !evaluated_.count(serialize(c)))
          trial.push_back({std::move(c), PollOrigin::poll_direction});
      if (!trial.empty()) {
        IterationOutcome s = opportunistic_evaluate(trial, incumbent_score_, guarded);
        if (out_of_budget) return false;
        if (s.success()) {
          accept(s);
          return true;
        }
      }
    }

    PollSet poll = generate_poll(incumbent_, mesh_, mix_seed(opt_.seed, static_cast<std::uint64_t>(iteration_)),
                                 opt_.bounds, opt_.extended_poll);
    std::erase_if(poll.candidates, [&](const PollCandidate& c) { return evaluated_.count(serialize(c.config)) > 0; });

    IterationOutcome outcome;
    if (!poll.empty()) {
      const auto ordered = order(poll);
      outcome = opportunistic_evaluate(ordered, incumbent_score_, guarded);
      if (out_of_budget) return false;
    }
    accept(outcome);
    return true;
  }

  void accept(const IterationOutcome& outcome) {
    if (outcome.success()) {
      incumbent_ = *outcome.new_incumbent;
      incumbent_score_ = outcome.new_score;
    }
    mesh_ = update_mesh(mesh_, outcome);
  }

  const int budget_;
  const Blackbox& blackbox_;
  CampaignOptions opt_;
  Mesh mesh_;
  RunLedger ledger_;
  Configuration incumbent_;
  double incumbent_score_ = kWorst;
  double cumulative_ = 0.0;
  int iteration_ = 0;
  std::unordered_set<std::string> evaluated_;
  std::size_t replay_end_ = 0;
};

}  // namespace

CampaignResult run_campaign(const Configuration& initial, int budget_bbe, const Blackbox& blackbox,
                            const CampaignOptions& options) {
  if (budget_bbe <= 0) throw std::invalid_argument("run_campaign: budget must be positive");
  if (auto v = validate(initial, options.bounds); !v.empty())
    throw std::invalid_argument("run_campaign: invalid initial point: " + v.front().slot + " " + v.front().message);
  if (options.max_epochs < 1) throw std::invalid_argument("run_campaign: max_epochs must be >= 1");
  return Campaign(budget_bbe, blackbox, options).run(initial);
}

}  // namespace hypermads
