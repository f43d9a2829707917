// hypermads: run, resume and export MADS hyperparameter campaigns.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "hypermads/campaign_io.hpp"
#include "hypermads/format.hpp"
#include "hypermads/kernels.hpp"

namespace fs = std::filesystem;
using namespace hypermads;

namespace {

struct RunFlags {
  std::string config_file;
  std::string preset;
  std::string initial;
  int budget = 0;
  std::string stop;
  std::string rank;
  std::uint64_t seed = 0;
  std::string backend;
  std::string command;
  std::string out;
  int max_epochs = 0;
  int min_mesh_index = 0;
};

void add_run_flags(CLI::App* app, RunFlags& f) {
  app->add_option("--config", f.config_file, "Settings file with key = value lines; flags override it")
      ->check(CLI::ExistingFile);
  app->add_option("--preset", f.preset, "Initial point: p1, p2 or p3");
  app->add_option("--initial", f.initial, "File holding a serialized initial configuration");
  app->add_option("--budget", f.budget, "Budget in full blackbox evaluations (> 0)");
  app->add_option("--stop", f.stop, "none|default|last-success|scheduler|scheduler+baseline");
  app->add_option("--rank", f.rank, "r1|r2|r3|r4|none|oracle|custom:<epochs>,<fraction>,<cost>");
  app->add_option("--seed", f.seed, "Campaign seed");
  app->add_option("--backend", f.backend, "simulated|external")->check(CLI::IsMember({"simulated", "external"}));
  app->add_option("--command", f.command, "Trainer launch command for the external backend");
  app->add_option("--out", f.out, "Output directory");
  app->add_option("--max-epochs", f.max_epochs, "Epoch budget of a full evaluation");
  app->add_option("--min-mesh-index", f.min_mesh_index, "Campaign stops below this mesh index");
}

CampaignSettings settings_from(const CLI::App* app, const RunFlags& f) {
  CampaignSettings s;
  if (!f.config_file.empty()) apply_settings_file(s, f.config_file);
  auto given = [&](const char* name) { return app->count(name) > 0; };
  if (given("--preset") && given("--initial")) throw std::invalid_argument("--preset and --initial are exclusive");
  if (given("--preset")) s.initial = f.preset;
  if (given("--initial")) s.initial = f.initial;
  if (given("--budget")) s.budget = f.budget;
  if (given("--stop")) s.stop_mode = parse_stop_mode(f.stop);
  if (given("--rank")) apply_setting(s, "rank", f.rank);
  if (given("--seed")) s.seed = f.seed;
  if (given("--backend")) s.backend = f.backend;
  if (given("--command")) s.command = f.command;
  if (given("--out")) s.output_dir = f.out;
  if (given("--max-epochs")) s.max_epochs = f.max_epochs;
  if (given("--min-mesh-index")) s.min_mesh_index = f.min_mesh_index;
  s.check();
  return s;
}

void print_report(const RunReport& report) {
  const auto& r = report.result;
  std::cout << "output: " << report.dir.string() << "\n"
            << "best score: " << format_double(r.incumbent_score) << "\n"
            << "best config: " << serialize(r.incumbent) << "\n"
            << "full evaluations: " << r.ledger.full_evaluations() << ", epochs: " << r.ledger.full_epochs()
            << ", charged BBE: " << format_double(r.ledger.total_cost()) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mesh adaptive direct search for hyperparameter optimization"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Run a campaign");
  add_run_flags(run, run_flags);

  std::string resume_dir;
  int resume_budget = 0;
  std::uint64_t resume_seed = 0;
  auto* resume = app.add_subcommand("resume", "Continue a stored campaign");
  resume->add_option("dir", resume_dir, "Campaign directory")->required()->check(CLI::ExistingDirectory);
  resume->add_option("--budget", resume_budget, "New (larger or equal) budget");
  resume->add_option("--seed", resume_seed, "Must match the stored seed");

  std::string export_dir;
  std::string export_out;
  auto* exp = app.add_subcommand("export", "Write the convergence series of a campaign");
  exp->add_option("dir", export_dir, "Campaign directory")->required()->check(CLI::ExistingDirectory);
  exp->add_option("-o,--output", export_out, "Output file (default: stdout)");

  std::uint64_t sweep_seed = 0;
  int sweep_epochs = 200;
  auto* sweep = app.add_subcommand("sweep", "Brute-force the coarse lattice on the simulated blackbox");
  sweep->add_option("--seed", sweep_seed, "Blackbox seed");
  sweep->add_option("--max-epochs", sweep_epochs, "Epochs per evaluation")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      CampaignSettings s;
      try {
        s = settings_from(run, run_flags);
      } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
      }
      print_report(run_to_directory(s));
    } else if (*resume) {
      std::optional<int> budget;
      std::optional<std::uint64_t> seed;
      if (resume->count("--budget")) budget = resume_budget;
      if (resume->count("--seed")) seed = resume_seed;
      print_report(resume_directory(resume_dir, budget, seed));
    } else if (*exp) {
      auto series = convergence_series(read_ledger(export_dir));
      if (export_out.empty()) {
        write_convergence(std::cout, series);
      } else {
        std::ofstream out(export_out, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + export_out);
        write_convergence(out, series);
      }
    } else if (*sweep) {
      SimulatedBlackbox box(default_bounds());
      const Lattice lattice = coarse_lattice(box.bounds());
      SweepResult r = lattice_sweep_parallel(lattice, box, sweep_seed, sweep_epochs);
      std::cout << "points: " << r.evaluated << "\n"
                << "best score: " << format_double(r.best_accuracy) << "\n"
                << "best config: " << serialize(r.best) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
