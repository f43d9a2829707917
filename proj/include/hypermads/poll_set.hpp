#pragma once

#include <cstdint>
#include <vector>

#include "hypermads/hp_space.hpp"

namespace hypermads {

enum class PollOrigin : std::uint8_t { poll_direction, categorical_neighbor };

struct PollCandidate {
  Configuration config;
  PollOrigin origin = PollOrigin::poll_direction;
};

struct PollSet {
  std::vector<PollCandidate> candidates;
  // The 2n poll directions: the n basis columns, then their negations.
  std::vector<std::vector<double>> directions;

  std::size_t size() const { return candidates.size(); }
  bool empty() const { return candidates.empty(); }
};

}  // namespace hypermads
