#include "hypermads/surrogates.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "hypermads/format.hpp"
#include "hypermads/kernels.hpp"

namespace hypermads {

namespace {

struct Row {
  std::string_view name;
  SurrogateKind kind;
  int epochs;
  double fraction;
  double cost;
};

constexpr Row kTable[] = {
    {"r1", SurrogateKind::r1, 25, 1.0, 0.125},
    {"r2", SurrogateKind::r2, 10, 1.0, 0.05},
    {"r3", SurrogateKind::r3, 200, 0.2, 0.20},
    {"r4", SurrogateKind::r4, 200, 0.1, 0.10},
};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

}  // namespace

SurrogateSpec SurrogateSpec::named(std::string_view name, int full_epochs) {
  const std::string n = lower(name);
  if (n == "none") return {};
  if (n == "oracle" || n == "full") {
    if (full_epochs < 1) throw std::invalid_argument("oracle surrogate: epochs must be >= 1");
    return {SurrogateKind::oracle, full_epochs, 1.0, 1.0};
  }
  for (const auto& row : kTable)
    if (n == row.name) return {row.kind, row.epochs, row.fraction, row.cost};
  if (n.rfind("custom:", 0) == 0) {
    std::string_view rest = std::string_view(n).substr(7);
    std::vector<std::string_view> parts;
    std::size_t pos = 0;
    while (true) {
      auto comma = rest.find(',', pos);
      parts.push_back(rest.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (parts.size() != 3) throw std::invalid_argument("custom surrogate: expected custom:<epochs>,<fraction>,<cost>");
    return custom(static_cast<int>(parse_int(parts[0])), parse_double(parts[1]), parse_double(parts[2]));
  }
  throw std::invalid_argument("unknown surrogate '" + std::string(name) +
                              "' (expected r1|r2|r3|r4|none|oracle|custom:<epochs>,<fraction>,<cost>)");
}

SurrogateSpec SurrogateSpec::custom(int epoch_budget, double data_fraction, double cost_ratio) {
  SurrogateSpec s{SurrogateKind::custom, epoch_budget, data_fraction, cost_ratio};
  s.check();
  return s;
}

void SurrogateSpec::check() const {
  if (kind == SurrogateKind::none) return;
  if (epoch_budget < 1) throw std::invalid_argument("surrogate: epoch budget must be >= 1");
  if (!(data_fraction > 0.0 && data_fraction <= 1.0))
    throw std::invalid_argument("surrogate: data fraction must lie in (0, 1]");
  if (!(cost_ratio > 0.0 && cost_ratio <= 1.0)) throw std::invalid_argument("surrogate: cost ratio must lie in (0, 1]");
  for (const auto& row : kTable)
    if (kind == row.kind && (epoch_budget != row.epochs || data_fraction != row.fraction || cost_ratio != row.cost))
      throw std::invalid_argument("surrogate: " + std::string(row.name) + " fields differ from its definition");
  if (kind == SurrogateKind::oracle && (data_fraction != 1.0 || cost_ratio != 1.0))
    throw std::invalid_argument("surrogate: oracle must use all data at cost 1");
}

std::string to_string(const SurrogateSpec& spec) {
  switch (spec.kind) {
    case SurrogateKind::none:
      return "none";
    case SurrogateKind::oracle:
      return "oracle";
    case SurrogateKind::custom:
      return "custom:" + std::to_string(spec.epoch_budget) + "," + format_double(spec.data_fraction) + "," +
             format_double(spec.cost_ratio);
    default:
      for (const auto& row : kTable)
        if (row.kind == spec.kind) return std::string(row.name);
  }
  return "none";
}

double surrogate_cost(const SurrogateSpec& spec) {
  spec.check();
  return spec.enabled() ? spec.cost_ratio : 0.0;
}

double estimate(const SurrogateSpec& spec, const Configuration& config, const Blackbox& blackbox,
                std::uint64_t seed) {
  spec.check();
  if (!spec.enabled()) throw std::invalid_argument("estimate: surrogate disabled");
  Configuration one[] = {config};
  double v = evaluate_batch_serial(one, spec.epoch_budget, spec.data_fraction, blackbox, seed).front();
  if (std::isinf(v)) std::cerr << "surrogate " << to_string(spec) << " failed for " << serialize(config) << "\n";
  return v;
}

RankedPoll rank_candidates(const PollSet& poll, const SurrogateSpec& spec, const Blackbox& blackbox,
                           std::uint64_t seed, Execution execution) {
  spec.check();
  RankedPoll ranked;
  ranked.candidates.reserve(poll.size());
  if (!spec.enabled()) {
    for (std::size_t i = 0; i < poll.size(); ++i) ranked.candidates.push_back({poll.candidates[i], 0.0, i});
    return ranked;
  }

  std::vector<Configuration> configs;
  configs.reserve(poll.size());
  for (const auto& c : poll.candidates) configs.push_back(c.config);
  std::vector<double> scores =
      evaluate_batch(configs, spec.epoch_budget, spec.data_fraction, blackbox, seed, execution);

  for (std::size_t i = 0; i < poll.size(); ++i) {
    if (std::isinf(scores[i]))
      std::cerr << "surrogate " << to_string(spec) << " failed for " << serialize(configs[i]) << "\n";
    ranked.candidates.push_back({poll.candidates[i], scores[i], i});
  }
  std::stable_sort(ranked.candidates.begin(), ranked.candidates.end(),
                   [](const RankedCandidate& a, const RankedCandidate& b) { return a.estimate > b.estimate; });
  ranked.cost = static_cast<double>(poll.size()) * spec.cost_ratio;
  return ranked;
}

}  // namespace hypermads
