#pragma once

#include <array>

#include "hypermads/hp_space.hpp"

namespace hypermads {

// Power-of-two mesh. Poll size per slot kind is base_delta · 2^index and the
// mesh size is base_delta · 4^index (floored at the slot granularity), so the
// mesh refines faster than the poll size as the index decreases.
class Mesh {
 public:
  Mesh() = default;
  explicit Mesh(const SpaceBounds& bounds, int min_index = -30, int index = 0);

  int index() const { return index_; }
  int min_index() const { return min_index_; }
  // Campaign stopping condition.
  bool exhausted() const { return index_ < min_index_; }

  double poll_size(SlotKind kind) const;
  double mesh_size(SlotKind kind) const;

  Mesh with_index(int index) const;

 private:
  struct KindScale {
    double base_delta = 1.0;
    double granularity = 1.0;
    bool integer = false;
  };
  std::array<KindScale, kSlotKindCount> scales_{};
  int index_ = 0;
  int min_index_ = -30;
};

}  // namespace hypermads
