#include "hypermads/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hypermads {

Mesh::Mesh(const SpaceBounds& bounds, int min_index, int index) : index_(index), min_index_(min_index) {
  if (index > 0) throw std::invalid_argument("Mesh: index must be <= 0");
  for (std::size_t i = 0; i < kSlotKindCount; ++i) {
    const auto& b = bounds.slots[i];
    if (!(b.base_delta > 0.0) || !(b.granularity > 0.0))
      throw std::invalid_argument("Mesh: base delta and granularity must be positive");
    scales_[i] = {b.base_delta, b.granularity, slot_kind_is_integer(static_cast<SlotKind>(i))};
  }
}

double Mesh::poll_size(SlotKind kind) const {
  return std::ldexp(scales_[static_cast<std::size_t>(kind)].base_delta, index_);
}

double Mesh::mesh_size(SlotKind kind) const {
  const auto& s = scales_[static_cast<std::size_t>(kind)];
  double fine = std::ldexp(s.base_delta, 2 * index_);
  if (s.integer) return s.granularity * std::max(1.0, std::floor(fine / s.granularity));
  return std::max(s.granularity, fine);
}

Mesh Mesh::with_index(int index) const {
  Mesh m = *this;
  m.index_ = index;
  return m;
}

}  // namespace hypermads
