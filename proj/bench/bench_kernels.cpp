// Serial vs OpenMP timings for the batch estimate and the lattice sweep.

#include <chrono>
#include <cstdio>
#include <vector>

#include <omp.h>

#include "hypermads/kernels.hpp"
#include "hypermads/mads.hpp"

using namespace hypermads;

namespace {

template <class F>
double seconds(F&& f) {
  auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main() {
  SimulatedBlackbox box(default_bounds());
  std::printf("threads: %d\n", omp_get_max_threads());

  PollSet poll = generate_poll(preset("p3"), Mesh(box.bounds()), 1, box.bounds());
  std::vector<Configuration> configs;
  for (int rep = 0; rep < 20; ++rep)
    for (const auto& c : poll.candidates) configs.push_back(c.config);

  std::vector<double> a, b;
  double ts = seconds([&] { a = evaluate_batch_serial(configs, 200, 0.1, box, 7); });
  double tp = seconds([&] { b = evaluate_batch_parallel(configs, 200, 0.1, box, 7); });
  std::printf("estimate batch (%zu configs): serial %.3fs  parallel %.3fs  match %s\n", configs.size(), ts, tp,
              a == b ? "yes" : "NO");

  Lattice lattice = coarse_lattice(box.bounds());
  lattice.conv_counts = {2};
  lattice.optimizers = {0, 1};
  SweepResult rs, rp;
  ts = seconds([&] { rs = lattice_sweep_serial(lattice, box, 3); });
  tp = seconds([&] { rp = lattice_sweep_parallel(lattice, box, 3); });
  std::printf("lattice sweep (%zu points): serial %.3fs  parallel %.3fs  match %s\n", lattice_size(lattice), ts, tp,
              rs.best_index == rp.best_index && rs.best_accuracy == rp.best_accuracy ? "yes" : "NO");
  return 0;
}
