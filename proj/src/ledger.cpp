#include "hypermads/ledger.hpp"

#include <array>
#include <stdexcept>

namespace hypermads {

namespace {
constexpr std::array<std::string_view, 3> kKindNames = {"full-eval", "surrogate-eval", "ranking-pass"};
}

std::string_view to_string(RecordKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

RecordKind parse_record_kind(std::string_view text) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == text) return static_cast<RecordKind>(i);
  throw std::invalid_argument("unknown record kind '" + std::string(text) + "'");
}

std::size_t RunLedger::full_evaluations() const {
  std::size_t n = 0;
  for (const auto& r : records) n += r.kind == RecordKind::full_eval;
  return n;
}

long long RunLedger::full_epochs() const {
  long long n = 0;
  for (const auto& r : records)
    if (r.kind == RecordKind::full_eval) n += r.epochs_used;
  return n;
}

double RunLedger::total_work() const {
  double w = 0.0;
  for (const auto& r : records) w += r.work;
  return w;
}

const LedgerRecord* RunLedger::best() const {
  for (auto it = records.rbegin(); it != records.rend(); ++it)
    if (it->incumbent) return &*it;
  return nullptr;
}

}  // namespace hypermads
