#pragma once

// Batch kernels with an OpenMP path and a serial reference. Both produce
// identical results for concurrency-safe blackboxes.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "hypermads/blackbox.hpp"
#include "hypermads/surrogates.hpp"

namespace hypermads {

// One request per configuration, fixed fidelity, no monitor.
// Failed evaluations give -inf.
std::vector<double> evaluate_batch_serial(std::span<const Configuration> configs, int epochs, double data_fraction,
                                          const Blackbox& blackbox, std::uint64_t seed);
std::vector<double> evaluate_batch_parallel(std::span<const Configuration> configs, int epochs,
                                            double data_fraction, const Blackbox& blackbox, std::uint64_t seed);
std::vector<double> evaluate_batch(std::span<const Configuration> configs, int epochs, double data_fraction,
                                   const Blackbox& blackbox, std::uint64_t seed, Execution execution);

// Coarse grid over the space. Conv layers share one level choice, as do the
// FC layers.
struct Lattice {
  std::vector<int> conv_counts;
  std::vector<int> fc_counts;
  std::vector<int> optimizers;
  std::array<std::vector<double>, kSlotKindCount> levels;
};

// Per-kind levels a practitioner would grid over (log-spaced widths and
// learning rates, a few regularization settings); epoch scale fixed at 1.
Lattice coarse_lattice(const SpaceBounds& bounds);

std::size_t lattice_size(const Lattice& lattice);
// Mixed-radix decode; index < lattice_size.
Configuration lattice_point(const Lattice& lattice, std::size_t index);

struct SweepResult {
  Configuration best;
  double best_accuracy = 0.0;
  std::size_t best_index = 0;  // lowest index among ties
  std::size_t evaluated = 0;
};

SweepResult lattice_sweep_serial(const Lattice& lattice, const Blackbox& blackbox, std::uint64_t seed,
                                 int max_epochs = 200);
SweepResult lattice_sweep_parallel(const Lattice& lattice, const Blackbox& blackbox, std::uint64_t seed,
                                   int max_epochs = 200);

}  // namespace hypermads
