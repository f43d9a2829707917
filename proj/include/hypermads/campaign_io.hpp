#pragma once

// Campaign settings, ledger persistence (CSV), convergence export and resume.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hypermads/blackbox.hpp"
#include "hypermads/ledger.hpp"
#include "hypermads/mads.hpp"

namespace hypermads {

inline constexpr const char* kOutputRootVariable = "HYPERMADS_OUTPUT_ROOT";

struct CampaignSettings {
  std::string initial = "p1";  // preset name, or a file holding one serialized configuration
  int budget = 200;
  int max_epochs = 200;
  StopMode stop_mode = StopMode::scheduler_baseline;
  std::string rank = "r4";
  std::uint64_t seed = 0;
  std::string output_dir;  // empty: derived from the output root
  std::string backend = "simulated";
  std::string command;  // external backend launch command
  int min_mesh_index = -30;
  bool charge_ranking_cost = true;
  bool extended_poll = true;
  std::vector<int> milestones = BaselineEnvelope{}.milestones;
  std::vector<double> margins = BaselineEnvelope{}.margins;

  // Throws std::invalid_argument on any inconsistency.
  void check() const;
};

// Throws std::invalid_argument for unknown keys or bad values.
void apply_setting(CampaignSettings& settings, const std::string& key, const std::string& value);
// `key = value` lines; '#' starts a comment.
void apply_settings_text(CampaignSettings& settings, const std::string& text);
void apply_settings_file(CampaignSettings& settings, const std::filesystem::path& path);
std::string settings_text(const CampaignSettings& settings);

// Output directory when none is given: $HYPERMADS_OUTPUT_ROOT (or "runs")
// joined with a name built from the initial point, strategy, ranking and seed.
std::filesystem::path default_output_dir(const CampaignSettings& settings);

Configuration initial_configuration(const CampaignSettings& settings);
std::unique_ptr<Blackbox> make_blackbox(const CampaignSettings& settings, const std::filesystem::path& log_path = {});
CampaignOptions campaign_options(const CampaignSettings& settings);

// ledger.csv columns:
// record_index,kind,iteration,mesh_index,config,score,epochs_used,stop_reason,
// charged_cost,cumulative_cost,incumbent,work
void write_ledger_header(std::ostream& out);
void write_ledger_row(std::ostream& out, const LedgerRecord& record);
// histories.csv columns: record_index,epoch,val_accuracy,val_loss,learning_rate
void write_history_header(std::ostream& out);
void write_history_rows(std::ostream& out, const LedgerRecord& record);

void write_ledger(const std::filesystem::path& dir, const RunLedger& ledger);
// Reads ledger.csv and histories.csv. A trailing line without newline (an
// interrupted write) is ignored. Throws std::runtime_error on malformed files.
RunLedger read_ledger(const std::filesystem::path& dir);

struct ConvergencePoint {
  std::size_t evaluation = 0;  // 1-based count of full evaluations
  double cumulative_bbe = 0.0;
  long long cumulative_epochs = 0;
  double cumulative_work = 0.0;
  double score = 0.0;
  double best_so_far = 0.0;
};

// One point per full evaluation. Throws std::invalid_argument when the ledger
// holds no full evaluation.
std::vector<ConvergencePoint> convergence_series(const RunLedger& ledger);
// Columns: evaluation,cumulative_bbe,cumulative_epochs,cumulative_work,score,best_so_far
void write_convergence(std::ostream& out, const std::vector<ConvergencePoint>& series);

// Best full-evaluation score among records whose cumulative cost is within
// `charged`; -inf if none.
double best_within(const RunLedger& ledger, double charged);

struct RunReport {
  CampaignResult result;
  std::filesystem::path dir;
  double wall_seconds = 0.0;
};

std::string summary_text(const RunReport& report);

// Writes settings.txt, ledger.csv, histories.csv as records arrive, then
// summary.txt and convergence.csv.
RunReport run_to_directory(const CampaignSettings& settings);

// Continues the campaign stored in `dir`. The stored settings are used;
// `budget` may raise the budget and `seed`, when given, must match.
// Throws std::runtime_error for inconsistent ledgers or settings.
RunReport resume_directory(const std::filesystem::path& dir, std::optional<int> budget = {},
                           std::optional<std::uint64_t> seed = {});

}  // namespace hypermads
