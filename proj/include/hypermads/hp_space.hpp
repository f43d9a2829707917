#pragma once

// Mixed-variable hyperparameter space of a convolutional network and its
// training regime: configuration values, bounds, dimension, categorical
// neighborhood, serialization.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hypermads {

class Mesh;

struct ConvLayerHP {
  int out_channels = 0;
  int kernel_size = 0;
  int stride = 0;
  int padding = 0;
  int pooling = 1;  // 1 = no pooling

  bool operator==(const ConvLayerHP&) const = default;
};

// Training-regime scalars. Together with the optimizer choice they form the
// ten non-architecture hyperparameters.
struct TrainingHP {
  int batch_size = 128;
  double learning_rate = 0.01;
  double dropout = 0.0;
  double weight_decay = 0.0;
  double momentum = 0.0;
  double lr_decay = 1.0;
  double grad_clip = 1.0;
  double label_smoothing = 0.0;
  double epoch_scale = 1.0;

  bool operator==(const TrainingHP&) const = default;
};

struct Configuration {
  int n_conv = 0;
  std::vector<ConvLayerHP> conv_layers;
  int n_fc = 0;
  std::vector<int> fc_sizes;
  int optimizer_id = 0;
  TrainingHP training;

  bool operator==(const Configuration&) const = default;
};

// Every quantitative hyperparameter belongs to one of these kinds; bounds,
// granularity and base mesh size are declared per kind.
enum class SlotKind : std::uint8_t {
  out_channels,
  kernel_size,
  stride,
  padding,
  pooling,
  fc_size,
  batch_size,
  learning_rate,
  dropout,
  weight_decay,
  momentum,
  lr_decay,
  grad_clip,
  label_smoothing,
  epoch_scale,
};
inline constexpr std::size_t kSlotKindCount = 15;

std::string_view slot_kind_name(SlotKind kind);
bool slot_kind_is_integer(SlotKind kind);

struct SlotBounds {
  double lower = 0.0;
  double upper = 0.0;
  double granularity = 1.0;  // integer step, or smallest real mesh step
  double base_delta = 1.0;   // poll size at mesh index 0
};

struct SpaceBounds {
  std::array<SlotBounds, kSlotKindCount> slots{};
  int min_conv = 0;
  int max_conv = 8;
  int min_fc = 0;
  int max_fc = 4;
  std::vector<std::string> optimizers;

  const SlotBounds& operator[](SlotKind kind) const {
    return slots[static_cast<std::size_t>(kind)];
  }
  SlotBounds& operator[](SlotKind kind) {
    return slots[static_cast<std::size_t>(kind)];
  }

  // Throws std::invalid_argument if any slot has lower > upper or a
  // non-positive granularity/base delta, or the optimizer set is empty.
  void check() const;
};

SpaceBounds default_bounds();

// 5·n_conv + n_fc + 10. Throws std::invalid_argument on negative counts.
int dimension(int n_conv, int n_fc);
int dimension(const Configuration& config);

struct Violation {
  std::string slot;
  std::string message;
};

// Empty result means the configuration is valid.
std::vector<Violation> validate(const Configuration& config, const SpaceBounds& bounds);
bool is_valid(const Configuration& config, const SpaceBounds& bounds);

// Midpoint of the bounds, snapped to granularity.
ConvLayerHP default_conv_layer(const SpaceBounds& bounds);
int default_fc_size(const SpaceBounds& bounds);

enum class NeighborMove : std::uint8_t { add_conv, remove_conv, add_fc, remove_fc, next_optimizer };

struct Neighbor {
  NeighborMove move;
  Configuration config;
};

// Categorical neighborhood: +/- one conv layer, +/- one FC layer, next
// optimizer (cyclic). Moves that leave [min, max] layer counts are omitted.
// Throws std::invalid_argument for an invalid configuration.
std::vector<Neighbor> neighbors(const Configuration& config, const SpaceBounds& bounds);

// Flat view over the quantitative slots, in serialization order: conv layers
// (five fields each), FC sizes, batch size, then the eight real scalars.
struct SlotRef {
  SlotKind kind;
  int layer = -1;  // conv/fc layer index, -1 for training scalars

  std::string name() const;
};

std::vector<SlotRef> quantitative_slots(const Configuration& config);
std::vector<double> quantitative_values(const Configuration& config);
// Integer slots are rounded to the nearest integer.
Configuration with_quantitative_values(const Configuration& config, std::span<const double> values);

// Snap one value onto {anchor + k·step} ∪ {lower, upper}, within [lower, upper].
double snap_to_mesh(double value, double anchor, double step, double lower, double upper);

// Every quantitative slot snapped to the nearest point of the mesh anchored
// at zero and clipped into bounds; categorical slots untouched. Idempotent.
Configuration project_to_mesh(const Configuration& config, const Mesh& mesh, const SpaceBounds& bounds);
// Same, with the mesh anchored at `anchor` (same layout as `config`).
Configuration project_to_mesh(const Configuration& config, const Mesh& mesh, const SpaceBounds& bounds,
                              const Configuration& anchor);

// `name=value` tokens joined by ';'. Order: conv layers, FC sizes, optimizer,
// batch size, the eight real scalars. Reals use shortest round-trip form.
std::string serialize(const Configuration& config);
// Throws std::invalid_argument on malformed input.
Configuration parse_configuration(std::string_view text);

// Starting points: p1 = (1 conv, 2 FC), p2 = (2 conv, 2 FC), p3 = (5 conv, 1 FC).
Configuration preset(std::string_view name);

}  // namespace hypermads
