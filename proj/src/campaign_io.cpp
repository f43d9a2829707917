#include "hypermads/campaign_io.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "hypermads/external_blackbox.hpp"
#include "hypermads/format.hpp"

namespace hypermads {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (true) {
    auto next = s.find(sep, pos);
    parts.emplace_back(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return parts;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("not a boolean: '" + v + "'");
}

template <class T, class F>
std::string join(const std::vector<T>& values, F format) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ",";
    s += format(values[i]);
  }
  return s;
}

bool is_preset(const std::string& name) { return name == "p1" || name == "p2" || name == "p3"; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Splits into complete lines; an unterminated tail is dropped.
std::vector<std::string> complete_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (true) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) break;
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

std::string format_score(double v) { return format_double(v); }

}  // namespace

void CampaignSettings::check() const {
  if (budget <= 0) throw std::invalid_argument("budget must be a positive number of evaluations");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
  if (min_mesh_index > 0) throw std::invalid_argument("min_mesh_index must be <= 0");
  if (backend != "simulated" && backend != "external")
    throw std::invalid_argument("backend must be simulated or external");
  if (backend == "external" && command.empty()) throw std::invalid_argument("external backend needs a command");
  if (!is_preset(initial) && !fs::is_regular_file(initial))
    throw std::invalid_argument("initial point '" + initial + "' is neither p1, p2, p3 nor a readable file");
  SurrogateSpec::named(rank, max_epochs).check();
  BaselineEnvelope env;
  env.milestones = milestones;
  env.margins = margins;
  env.check();
}

void apply_setting(CampaignSettings& s, const std::string& key, const std::string& value) {
  if (key == "initial" || key == "preset")
    s.initial = value;
  else if (key == "budget")
    s.budget = static_cast<int>(parse_int(value));
  else if (key == "max_epochs")
    s.max_epochs = static_cast<int>(parse_int(value));
  else if (key == "stop")
    s.stop_mode = parse_stop_mode(value);
  else if (key == "rank") {
    SurrogateSpec::named(value);
    s.rank = value;
  } else if (key == "seed")
    s.seed = static_cast<std::uint64_t>(parse_int(value));
  else if (key == "out")
    s.output_dir = value;
  else if (key == "backend")
    s.backend = value;
  else if (key == "command")
    s.command = value;
  else if (key == "min_mesh_index")
    s.min_mesh_index = static_cast<int>(parse_int(value));
  else if (key == "charge_ranking_cost")
    s.charge_ranking_cost = parse_bool(value);
  else if (key == "extended_poll")
    s.extended_poll = parse_bool(value);
  else if (key == "milestones") {
    s.milestones.clear();
    for (const auto& p : split(value, ',')) s.milestones.push_back(static_cast<int>(parse_int(trim(p))));
  } else if (key == "margins") {
    s.margins.clear();
    for (const auto& p : split(value, ',')) s.margins.push_back(parse_double(trim(p)));
  } else
    throw std::invalid_argument("unknown setting '" + key + "'");
}

void apply_settings_text(CampaignSettings& settings, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("line " + std::to_string(n) + ": expected key = value");
    try {
      apply_setting(settings, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("line " + std::to_string(n) + ": " + e.what());
    }
  }
}

void apply_settings_file(CampaignSettings& settings, const fs::path& path) {
  apply_settings_text(settings, read_file(path));
}

std::string settings_text(const CampaignSettings& s) {
  std::ostringstream out;
  out << "initial = " << s.initial << "\n"
      << "budget = " << s.budget << "\n"
      << "max_epochs = " << s.max_epochs << "\n"
      << "stop = " << to_string(s.stop_mode) << "\n"
      << "rank = " << s.rank << "\n"
      << "seed = " << s.seed << "\n"
      << "backend = " << s.backend << "\n";
  if (!s.command.empty()) out << "command = " << s.command << "\n";
  out << "min_mesh_index = " << s.min_mesh_index << "\n"
      << "charge_ranking_cost = " << (s.charge_ranking_cost ? "true" : "false") << "\n"
      << "extended_poll = " << (s.extended_poll ? "true" : "false") << "\n"
      << "milestones = " << join(s.milestones, [](int v) { return std::to_string(v); }) << "\n"
      << "margins = " << join(s.margins, [](double v) { return format_double(v); }) << "\n";
  return out.str();
}

fs::path default_output_dir(const CampaignSettings& s) {
  const char* root = std::getenv(kOutputRootVariable);
  fs::path base = root && *root ? fs::path(root) : fs::path("runs");
  std::string stem = is_preset(s.initial) ? s.initial : fs::path(s.initial).stem().string();
  std::string stop(to_string(s.stop_mode));
  for (auto& c : stop)
    if (c == '+') c = '_';
  return base / (stem + "-" + stop + "-" + s.rank + "-s" + std::to_string(s.seed));
}

Configuration initial_configuration(const CampaignSettings& s) {
  if (is_preset(s.initial)) return preset(s.initial);
  if (!fs::exists(s.initial))
    throw std::invalid_argument("unknown preset '" + s.initial + "' (expected p1|p2|p3 or a configuration file)");
  std::string text;
  for (const auto& line : complete_lines(read_file(s.initial) + "\n")) {
    std::string t = trim(line);
    if (!t.empty() && t[0] != '#') text += t;
  }
  return parse_configuration(text);
}

std::unique_ptr<Blackbox> make_blackbox(const CampaignSettings& s, const fs::path& log_path) {
  if (s.backend == "simulated") return std::make_unique<SimulatedBlackbox>(default_bounds());
  ProcessAdapterSettings p;
  p.command = s.command;
  if (!log_path.empty()) {
    p.log = [log_path](std::string_view text) {
      std::ofstream out(log_path, std::ios::app);
      out << text << "\n";
    };
  }
  return std::make_unique<ExternalBlackbox>(std::move(p));
}

CampaignOptions campaign_options(const CampaignSettings& s) {
  CampaignOptions o;
  o.bounds = default_bounds();
  o.stop_mode = s.stop_mode;
  o.envelope.milestones = s.milestones;
  o.envelope.margins = s.margins;
  o.ranking = SurrogateSpec::named(s.rank, s.max_epochs);
  o.seed = s.seed;
  o.max_epochs = s.max_epochs;
  o.min_mesh_index = s.min_mesh_index;
  o.charge_ranking_cost = s.charge_ranking_cost;
  o.extended_poll = s.extended_poll;
  return o;
}

void write_ledger_header(std::ostream& out) {
  out << "record_index,kind,iteration,mesh_index,config,score,epochs_used,stop_reason,charged_cost,cumulative_cost,"
         "incumbent,work\n";
}

void write_ledger_row(std::ostream& out, const LedgerRecord& r) {
  out << r.record_index << ',' << to_string(r.kind) << ',' << r.iteration << ',' << r.mesh_index << ',' << r.config
      << ',' << (r.kind == RecordKind::ranking_pass ? std::string() : format_score(r.score)) << ',' << r.epochs_used
      << ',' << to_string(r.stop_reason) << ',' << format_double(r.charged_cost) << ','
      << format_double(r.cumulative_cost) << ',' << (r.incumbent ? 1 : 0) << ',' << format_double(r.work) << '\n';
}

void write_history_header(std::ostream& out) { out << "record_index,epoch,val_accuracy,val_loss,learning_rate\n"; }

void write_history_rows(std::ostream& out, const LedgerRecord& r) {
  for (const auto& e : r.history.epochs())
    out << r.record_index << ',' << e.epoch << ',' << format_double(e.val_accuracy) << ','
        << format_double(e.val_loss) << ',' << format_double(e.learning_rate) << '\n';
}

void write_ledger(const fs::path& dir, const RunLedger& ledger) {
  std::ofstream l(dir / "ledger.csv", std::ios::binary);
  std::ofstream h(dir / "histories.csv", std::ios::binary);
  if (!l || !h) throw std::runtime_error("cannot write ledger files in " + dir.string());
  write_ledger_header(l);
  write_history_header(h);
  for (const auto& r : ledger.records) {
    write_ledger_row(l, r);
    write_history_rows(h, r);
  }
}

RunLedger read_ledger(const fs::path& dir) {
  const auto lines = complete_lines(read_file(dir / "ledger.csv"));
  if (lines.empty()) throw std::runtime_error("ledger.csv: missing header");
  RunLedger ledger;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    auto bad = [&](const std::string& why) {
      return std::runtime_error("ledger.csv line " + std::to_string(i + 1) + ": " + why);
    };
    if (f.size() != 12) throw bad("expected 12 fields");
    try {
      LedgerRecord r;
      r.record_index = static_cast<std::size_t>(parse_int(f[0]));
      r.kind = parse_record_kind(f[1]);
      r.iteration = static_cast<int>(parse_int(f[2]));
      r.mesh_index = static_cast<int>(parse_int(f[3]));
      r.config = f[4];
      r.score = f[5].empty() ? 0.0 : parse_double(f[5]);
      r.epochs_used = static_cast<int>(parse_int(f[6]));
      r.stop_reason = parse_stop_reason(f[7]);
      r.charged_cost = parse_double(f[8]);
      r.cumulative_cost = parse_double(f[9]);
      r.incumbent = f[10] == "1";
      r.work = parse_double(f[11]);
      if (r.record_index != ledger.records.size()) throw bad("record indices must be contiguous from 0");
      ledger.records.push_back(std::move(r));
    } catch (const std::invalid_argument& e) {
      throw bad(e.what());
    }
  }

  const auto hist = complete_lines(read_file(dir / "histories.csv"));
  for (std::size_t i = 1; i < hist.size(); ++i) {
    const auto f = split(hist[i], ',');
    if (f.size() != 5) throw std::runtime_error("histories.csv line " + std::to_string(i + 1) + ": expected 5 fields");
    try {
      const auto idx = static_cast<std::size_t>(parse_int(f[0]));
      if (idx >= ledger.records.size()) continue;  // record line lost in an interrupted write
      ledger.records[idx].history.append({static_cast<int>(parse_int(f[1])), parse_double(f[2]), parse_double(f[3]),
                                          parse_double(f[4])});
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("histories.csv line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return ledger;
}

std::vector<ConvergencePoint> convergence_series(const RunLedger& ledger) {
  std::vector<ConvergencePoint> series;
  long long epochs = 0;
  double work = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& r : ledger.records) {
    epochs += r.epochs_used;
    work += r.work;
    if (r.kind != RecordKind::full_eval) continue;
    best = std::max(best, r.score);
    series.push_back({series.size() + 1, r.cumulative_cost, epochs, work, r.score, best});
  }
  if (series.empty()) throw std::invalid_argument("convergence export: ledger has no full evaluations");
  return series;
}

void write_convergence(std::ostream& out, const std::vector<ConvergencePoint>& series) {
  out << "evaluation,cumulative_bbe,cumulative_epochs,cumulative_work,score,best_so_far\n";
  for (const auto& p : series)
    out << p.evaluation << ',' << format_double(p.cumulative_bbe) << ',' << p.cumulative_epochs << ','
        << format_double(p.cumulative_work) << ',' << format_score(p.score) << ',' << format_score(p.best_so_far)
        << '\n';
}

double best_within(const RunLedger& ledger, double charged) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& r : ledger.records)
    if (r.kind == RecordKind::full_eval && r.cumulative_cost <= charged + 1e-9) best = std::max(best, r.score);
  return best;
}

std::string summary_text(const RunReport& report) {
  const auto& res = report.result;
  const auto& ledger = res.ledger;
  const std::size_t evals = ledger.full_evaluations();
  std::ostringstream out;
  const char* term = res.termination == Termination::budget ? "budget"
                     : res.termination == Termination::mesh ? "mesh"
                                                            : "iterations";
  out << "best_config = " << serialize(res.incumbent) << "\n"
      << "best_score = " << format_score(res.incumbent_score) << "\n"
      << "full_evaluations = " << evals << "\n"
      << "total_epochs = " << ledger.full_epochs() << "\n"
      << "mean_epochs = " << format_double(evals ? static_cast<double>(ledger.full_epochs()) / evals : 0.0) << "\n"
      << "total_charged_bbe = " << format_double(ledger.total_cost()) << "\n"
      << "total_work = " << format_double(ledger.total_work()) << "\n"
      << "iterations = " << res.iterations << "\n"
      << "final_mesh_index = " << res.mesh.index() << "\n"
      << "termination = " << term << "\n"
      << "wall_seconds = " << format_double(report.wall_seconds) << "\n";
  return out.str();
}

namespace {

RunReport execute(const CampaignSettings& s, const fs::path& dir, const RunLedger* replay, bool staged,
                  bool replay_prefix = false) {
  s.check();
  const Configuration initial = initial_configuration(s);
  fs::create_directories(dir);

  const std::string suffix = staged ? ".partial" : "";
  const fs::path ledger_path = dir / ("ledger.csv" + suffix);
  const fs::path history_path = dir / ("histories.csv" + suffix);
  std::ofstream ledger_out(ledger_path, std::ios::binary | std::ios::trunc);
  std::ofstream history_out(history_path, std::ios::binary | std::ios::trunc);
  if (!ledger_out || !history_out) throw std::runtime_error("cannot write to output directory " + dir.string());
  write_ledger_header(ledger_out);
  write_history_header(history_out);
  ledger_out.flush();
  history_out.flush();

  auto blackbox = make_blackbox(s, dir / "trainer.log");
  CampaignOptions options = campaign_options(s);
  options.replay = replay;
  options.replay_prefix = replay_prefix;
  options.on_record = [&](const LedgerRecord& r) {
    write_history_rows(history_out, r);
    history_out.flush();
    write_ledger_row(ledger_out, r);
    ledger_out.flush();
  };

  const auto t0 = std::chrono::steady_clock::now();
  RunReport report;
  report.dir = dir;
  report.result = run_campaign(initial, s.budget, *blackbox, options);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ledger_out.close();
  history_out.close();

  if (replay && !replay_prefix && report.result.ledger.size() < replay->size())
    throw std::runtime_error("stored ledger extends beyond the requested budget");
  if (staged) {
    fs::rename(ledger_path, dir / "ledger.csv");
    fs::rename(history_path, dir / "histories.csv");
  }
  {
    std::ofstream out(dir / "settings.txt", std::ios::binary);
    out << settings_text(s);
  }
  {
    std::ofstream out(dir / "summary.txt", std::ios::binary);
    out << summary_text(report);
  }
  {
    std::ofstream out(dir / "convergence.csv", std::ios::binary);
    write_convergence(out, convergence_series(report.result.ledger));
  }
  return report;
}

}  // namespace

RunReport run_to_directory(const CampaignSettings& settings) {
  settings.check();
  const fs::path dir = settings.output_dir.empty() ? default_output_dir(settings) : fs::path(settings.output_dir);
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "settings.txt", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write to output directory " + dir.string());
    out << settings_text(settings);
  }
  return execute(settings, dir, nullptr, false);
}

RunReport resume_directory(const fs::path& dir, std::optional<int> budget, std::optional<std::uint64_t> seed) {
  CampaignSettings s;
  apply_settings_file(s, dir / "settings.txt");
  s.output_dir = dir.string();
  if (seed && *seed != s.seed)
    throw std::runtime_error("resume: seed " + std::to_string(*seed) + " differs from the stored seed " +
                             std::to_string(s.seed));
  const int stored_budget = s.budget;
  if (budget) {
    if (*budget < s.budget) throw std::runtime_error("resume: budget cannot shrink below the stored budget");
    s.budget = *budget;
  }
  const RunLedger stored = read_ledger(dir);
  if (!stored.empty() && stored.records.front().config != serialize(initial_configuration(s)))
    throw std::runtime_error("resume: ledger does not start at the configured initial point");
  // The last polls of the shorter run may have been cut by its budget.
  return execute(s, dir, &stored, true, s.budget > stored_budget);
}

}  // namespace hypermads
