#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hypermads/campaign_io.hpp"

namespace fs = std::filesystem;
using namespace hypermads;

namespace {

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("hypermads_io_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir.parent_path());
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

int cli(const std::string& args) {
  int status = std::system((std::string(HM_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

CampaignSettings small_run(const fs::path& dir, std::uint64_t seed = 3) {
  CampaignSettings s;
  s.budget = 40;
  s.seed = seed;
  s.output_dir = dir.string();
  return s;
}

LedgerRecord full(double score, double cumulative, int epochs = 10) {
  LedgerRecord r;
  r.kind = RecordKind::full_eval;
  r.score = score;
  r.charged_cost = 1.0;
  r.cumulative_cost = cumulative;
  r.epochs_used = epochs;
  r.work = epochs;
  return r;
}

// Copies a finished run and cuts its ledger after `keep` records, leaving a
// torn line behind as an interrupted write would.
fs::path interrupted_copy(const fs::path& from, const std::string& name, std::size_t keep) {
  fs::path to = scratch(name);
  fs::create_directories(to);
  fs::copy_file(from / "settings.txt", to / "settings.txt");
  auto ledger = lines_of(slurp(from / "ledger.csv"));
  std::ofstream lo(to / "ledger.csv", std::ios::binary);
  for (std::size_t i = 0; i <= keep; ++i) lo << ledger[i] << "\n";
  if (keep + 1 < ledger.size()) lo << ledger[keep + 1].substr(0, ledger[keep + 1].size() / 2);
  lo.close();
  // History rows are written before their ledger line.
  auto hist = lines_of(slurp(from / "histories.csv"));
  std::ofstream ho(to / "histories.csv", std::ios::binary);
  ho << hist[0] << "\n";
  for (std::size_t i = 1; i < hist.size(); ++i)
    if (std::stoul(hist[i].substr(0, hist[i].find(','))) <= keep) ho << hist[i] << "\n";
  return to;
}

}  // namespace

TEST_CASE("settings text and files") {
  CampaignSettings s;
  apply_settings_text(s, "# comment\nbudget = 50\n\nstop = last-success  # trailing\nrank = r2\nseed = 9\n");
  CHECK(s.budget == 50);
  CHECK(s.stop_mode == StopMode::last_success);
  CHECK(s.rank == "r2");
  CHECK(s.seed == 9);
  CHECK_THROWS_AS(apply_settings_text(s, "colour = blue\n"), std::invalid_argument);
  CHECK_THROWS_AS(apply_settings_text(s, "budget\n"), std::invalid_argument);
  CHECK_THROWS_AS(apply_settings_text(s, "budget = lots\n"), std::invalid_argument);

  CampaignSettings t;
  apply_settings_text(t, settings_text(s));
  CHECK(settings_text(t) == settings_text(s));

  s.budget = 0;
  CHECK_THROWS_AS(s.check(), std::invalid_argument);
  s.budget = 10;
  s.initial = "p9";
  CHECK_THROWS_AS(s.check(), std::invalid_argument);
  s.initial = "p3";
  s.backend = "external";
  CHECK_THROWS_AS(s.check(), std::invalid_argument);  // no command
}

TEST_CASE("initial point from a file") {
  auto dir = scratch("initial");
  fs::create_directories(dir);
  auto c = preset("p2");
  c.training.dropout = 0.125;
  std::ofstream(dir / "start.txt") << serialize(c) << "\n";
  CampaignSettings s;
  s.initial = (dir / "start.txt").string();
  CHECK(initial_configuration(s) == c);
  s.initial = "p3";
  CHECK(initial_configuration(s) == preset("p3"));
}

TEST_CASE("default output directory honours the root variable") {
  CampaignSettings s;
  s.seed = 4;
  ::setenv(kOutputRootVariable, "/tmp/hm_root", 1);
  auto dir = default_output_dir(s);
  CHECK(dir.string().rfind("/tmp/hm_root/", 0) == 0);
  ::unsetenv(kOutputRootVariable);
  CHECK(default_output_dir(s).parent_path() == fs::path("runs"));
}

TEST_CASE("convergence series") {
  RunLedger l;
  l.records = {full(0.5, 1), full(0.4, 2), full(0.6, 3)};
  auto s = convergence_series(l);
  REQUIRE(s.size() == 3);
  CHECK(s[0].best_so_far == 0.5);
  CHECK(s[1].best_so_far == 0.5);
  CHECK(s[2].best_so_far == 0.6);
  CHECK(s[2].cumulative_bbe == 3.0);
  CHECK(s[2].cumulative_epochs == 30);

  RunLedger one;
  one.records = {full(0.7, 1)};
  CHECK(convergence_series(one).size() == 1);
  std::ostringstream out;
  write_convergence(out, convergence_series(one));
  CHECK(out.str() == "evaluation,cumulative_bbe,cumulative_epochs,cumulative_work,score,best_so_far\n1,1,10,10,0.7,0.7\n");

  CHECK_THROWS_AS(convergence_series(RunLedger{}), std::invalid_argument);
}

TEST_CASE("ranking passes show up as fractional BBE") {
  RunLedger l;
  l.records.push_back(full(0.5, 1.0));
  for (int i = 0; i < 3; ++i) {
    LedgerRecord r;
    r.kind = RecordKind::surrogate_eval;
    r.cumulative_cost = 1.0;
    r.epochs_used = 200;
    r.work = 20;
    l.records.push_back(r);
  }
  LedgerRecord pass;
  pass.kind = RecordKind::ranking_pass;
  pass.charged_cost = 0.3;
  pass.cumulative_cost = 1.3;
  l.records.push_back(pass);
  l.records.push_back(full(0.6, 2.3));
  auto s = convergence_series(l);
  REQUIRE(s.size() == 2);
  CHECK(s[1].cumulative_bbe == doctest::Approx(2.3));
  CHECK(s[1].cumulative_bbe - s[0].cumulative_bbe == doctest::Approx(1.3));
  CHECK(s[1].cumulative_work == doctest::Approx(10 + 60 + 10));
  CHECK(best_within(l, 1.0) == 0.5);
  CHECK(best_within(l, 2.3) == 0.6);
}

TEST_CASE("best-so-far never decreases on a real run") {
  auto dir = scratch("monotone");
  auto report = run_to_directory(small_run(dir));
  auto series = convergence_series(report.result.ledger);
  for (std::size_t i = 1; i < series.size(); ++i) CHECK(series[i].best_so_far >= series[i - 1].best_so_far);
}

TEST_CASE("ledger files round trip") {
  auto dir = scratch("roundtrip");
  auto report = run_to_directory(small_run(dir));
  auto back = read_ledger(dir);
  CHECK(back == report.result.ledger);
  for (auto f : {"settings.txt", "ledger.csv", "histories.csv", "summary.txt", "convergence.csv"})
    CHECK(fs::exists(dir / f));
  CHECK(lines_of(slurp(dir / "ledger.csv"))[0] ==
        "record_index,kind,iteration,mesh_index,config,score,epochs_used,stop_reason,charged_cost,cumulative_cost,"
        "incumbent,work");
  auto summary = slurp(dir / "summary.txt");
  for (auto key : {"best_config = ", "best_score = ", "total_epochs = ", "total_charged_bbe = "})
    CHECK(summary.find(key) != std::string::npos);
}

TEST_CASE("unwritable output directory") {
  auto dir = scratch("blocked");
  std::ofstream(dir.string()) << "a file, not a directory";
  CHECK_THROWS(run_to_directory(small_run(dir / "inner")));
}

TEST_CASE("resume after interruption reproduces the uninterrupted run") {
  auto base = scratch("uninterrupted");
  CampaignSettings s = small_run(base, 5);
  s.budget = 60;
  auto report = run_to_directory(s);
  const auto& records = report.result.ledger.records;
  const std::string ledger = slurp(base / "ledger.csv");
  const std::string histories = slurp(base / "histories.csv");

  // Record at which 15 of 60 BBE have been charged, plus two other cuts.
  std::size_t quarter = 0;
  while (records[quarter].cumulative_cost < 15) ++quarter;
  for (std::size_t keep : {std::size_t{1}, quarter, records.size() - 2}) {
    CAPTURE(keep);
    auto dir = interrupted_copy(base, "cut" + std::to_string(keep), keep);
    resume_directory(dir);
    CHECK(slurp(dir / "ledger.csv") == ledger);
    CHECK(slurp(dir / "histories.csv") == histories);
    CHECK(slurp(dir / "convergence.csv") == slurp(base / "convergence.csv"));
  }
}

TEST_CASE("resume checks") {
  auto base = scratch("resume_checks");
  run_to_directory(small_run(base, 6));
  const std::string ledger = slurp(base / "ledger.csv");

  CHECK_THROWS_AS(resume_directory(base, std::nullopt, 7), std::runtime_error);
  CHECK_THROWS_AS(resume_directory(base, 10), std::runtime_error);

  resume_directory(base);  // completed run: nothing changes
  CHECK(slurp(base / "ledger.csv") == ledger);
  resume_directory(base, std::nullopt, 6);
  CHECK(slurp(base / "ledger.csv") == ledger);

  // A larger budget continues the same trajectory.
  auto longer = scratch("resume_longer");
  CampaignSettings s = small_run(longer, 6);
  s.budget = 55;
  run_to_directory(s);
  resume_directory(base, 55);
  CHECK(slurp(base / "ledger.csv") == slurp(longer / "ledger.csv"));

  // Ledger from a different campaign.
  auto other = scratch("resume_other");
  CampaignSettings p3 = small_run(other, 6);
  p3.initial = "p3";
  run_to_directory(p3);
  auto mixed = scratch("resume_mixed");
  fs::create_directories(mixed);
  fs::copy_file(base / "settings.txt", mixed / "settings.txt");
  fs::copy_file(other / "ledger.csv", mixed / "ledger.csv");
  fs::copy_file(other / "histories.csv", mixed / "histories.csv");
  CHECK_THROWS_AS(resume_directory(mixed), std::runtime_error);
}

TEST_CASE("command line") {
  auto root = scratch("cli");
  const std::string a = (root / "a").string(), b = (root / "b").string();
  const std::string flags = " --preset p1 --budget 30 --stop scheduler+baseline --rank r4 --seed 7 --backend simulated";
  CHECK(cli("run" + flags + " --out " + a) == 0);
  CHECK(cli("run" + flags + " --out " + b) == 0);
  CHECK(slurp(root / "a" / "ledger.csv") == slurp(root / "b" / "ledger.csv"));
  CHECK(!slurp(root / "a" / "ledger.csv").empty());

  CHECK(cli("run --preset p1 --budget 0 --out " + (root / "zero").string()) != 0);
  CHECK(!fs::exists(root / "zero" / "ledger.csv"));
  CHECK(cli("run --preset p7 --budget 5 --out " + (root / "bad").string()) != 0);
  CHECK(cli("run --stop sometimes --out " + (root / "bad").string()) != 0);
  CHECK(cli("resume " + a + " --seed 8") != 0);
  CHECK(cli("resume " + a + " --seed 7") == 0);
  CHECK(slurp(root / "a" / "ledger.csv") == slurp(root / "b" / "ledger.csv"));

  const std::string series = (root / "series.csv").string();
  CHECK(cli("export " + a + " -o " + series) == 0);
  CHECK(slurp(series) == slurp(root / "a" / "convergence.csv"));

  // Flags override the settings file.
  std::ofstream(root / "settings.cfg") << "budget = 12\nseed = 7\nrank = none\nout = " << (root / "file").string() << "\n";
  CHECK(cli("run --config " + (root / "settings.cfg").string() + " --budget 9") == 0);
  CampaignSettings stored;
  apply_settings_file(stored, root / "file" / "settings.txt");
  CHECK(stored.budget == 9);
  CHECK(stored.rank == "none");
  CHECK(read_ledger(root / "file").full_evaluations() == 9);
}
