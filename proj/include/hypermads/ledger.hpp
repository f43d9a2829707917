#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hypermads/early_stop.hpp"

namespace hypermads {

enum class RecordKind : std::uint8_t { full_eval, surrogate_eval, ranking_pass };

std::string_view to_string(RecordKind kind);
RecordKind parse_record_kind(std::string_view text);

// One line of the run ledger. Surrogate rows carry their estimate and are
// charged through the ranking-pass row that closes the pass.
struct LedgerRecord {
  std::size_t record_index = 0;
  RecordKind kind = RecordKind::full_eval;
  int iteration = 0;
  int mesh_index = 0;
  std::string config;  // empty for ranking passes
  double score = 0.0;  // -inf for failed evaluations
  int epochs_used = 0;
  StopReason stop_reason = StopReason::none;
  double charged_cost = 0.0;
  double cumulative_cost = 0.0;
  bool incumbent = false;  // full evaluation that became the incumbent
  double work = 0.0;       // epochs × data fraction
  TrainingHistory history; // full evaluations only

  bool operator==(const LedgerRecord&) const = default;
};

struct RunLedger {
  std::vector<LedgerRecord> records;

  bool empty() const { return records.empty(); }
  std::size_t size() const { return records.size(); }
  std::size_t full_evaluations() const;
  double total_cost() const { return records.empty() ? 0.0 : records.back().cumulative_cost; }
  // Epochs spent in full evaluations.
  long long full_epochs() const;
  double total_work() const;
  // Last record flagged incumbent, or nullptr.
  const LedgerRecord* best() const;

  bool operator==(const RunLedger&) const = default;
};

}  // namespace hypermads
