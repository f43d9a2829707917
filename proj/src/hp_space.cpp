#include "hypermads/hp_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "hypermads/format.hpp"
#include "hypermads/mesh.hpp"

namespace hypermads {

namespace {

constexpr std::array<std::string_view, kSlotKindCount> kKindNames = {
    "out_channels", "kernel_size", "stride",   "padding",   "pooling",
    "size",         "batch_size",  "learning_rate", "dropout", "weight_decay",
    "momentum",     "lr_decay",    "grad_clip", "label_smoothing", "epoch_scale",
};

constexpr std::array<SlotKind, 5> kConvKinds = {SlotKind::out_channels, SlotKind::kernel_size, SlotKind::stride,
                                                SlotKind::padding, SlotKind::pooling};

constexpr std::array<SlotKind, 8> kRealKinds = {SlotKind::learning_rate, SlotKind::dropout,  SlotKind::weight_decay,
                                                SlotKind::momentum,      SlotKind::lr_decay, SlotKind::grad_clip,
                                                SlotKind::label_smoothing, SlotKind::epoch_scale};

int& conv_field(ConvLayerHP& layer, SlotKind kind) {
  switch (kind) {
    case SlotKind::out_channels: return layer.out_channels;
    case SlotKind::kernel_size: return layer.kernel_size;
    case SlotKind::stride: return layer.stride;
    case SlotKind::padding: return layer.padding;
    case SlotKind::pooling: return layer.pooling;
    default: throw std::logic_error("not a conv field");
  }
}

int conv_field(const ConvLayerHP& layer, SlotKind kind) {
  return conv_field(const_cast<ConvLayerHP&>(layer), kind);
}

double& real_field(TrainingHP& t, SlotKind kind) {
  switch (kind) {
    case SlotKind::learning_rate: return t.learning_rate;
    case SlotKind::dropout: return t.dropout;
    case SlotKind::weight_decay: return t.weight_decay;
    case SlotKind::momentum: return t.momentum;
    case SlotKind::lr_decay: return t.lr_decay;
    case SlotKind::grad_clip: return t.grad_clip;
    case SlotKind::label_smoothing: return t.label_smoothing;
    case SlotKind::epoch_scale: return t.epoch_scale;
    default: throw std::logic_error("not a real training field");
  }
}

double real_field(const TrainingHP& t, SlotKind kind) { return real_field(const_cast<TrainingHP&>(t), kind); }

int snapped_midpoint(const SlotBounds& b) {
  double mid = 0.5 * (b.lower + b.upper);
  double k = std::floor((mid - b.lower) / b.granularity + 0.5);
  return static_cast<int>(std::clamp(b.lower + k * b.granularity, b.lower, b.upper));
}

void check_range(std::vector<Violation>& out, const std::string& slot, double value, const SlotBounds& b) {
  if (!(value >= b.lower && value <= b.upper)) {
    out.push_back({slot, "value " + format_double(value) + " outside [" + format_double(b.lower) + ", " +
                             format_double(b.upper) + "]"});
  }
}

}  // namespace

std::string_view slot_kind_name(SlotKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

bool slot_kind_is_integer(SlotKind kind) { return kind <= SlotKind::batch_size; }

void SpaceBounds::check() const {
  for (std::size_t i = 0; i < kSlotKindCount; ++i) {
    const auto& b = slots[i];
    auto name = std::string(kKindNames[i]);
    if (!(b.lower <= b.upper)) throw std::invalid_argument("bounds for " + name + ": lower > upper");
    if (!(b.granularity > 0.0)) throw std::invalid_argument("bounds for " + name + ": granularity must be > 0");
    if (!(b.base_delta > 0.0)) throw std::invalid_argument("bounds for " + name + ": base delta must be > 0");
  }
  if (min_conv < 0 || min_conv > max_conv) throw std::invalid_argument("bounds: invalid conv layer count range");
  if (min_fc < 0 || min_fc > max_fc) throw std::invalid_argument("bounds: invalid fc layer count range");
  if (optimizers.empty()) throw std::invalid_argument("bounds: optimizer set is empty");
}

SpaceBounds default_bounds() {
  SpaceBounds b;
  //                              lower   upper  granularity  base_delta
  b[SlotKind::out_channels] = {1, 256, 1, 64};
  b[SlotKind::kernel_size] = {1, 9, 1, 2};
  b[SlotKind::stride] = {1, 3, 1, 1};
  b[SlotKind::padding] = {0, 4, 1, 1};
  b[SlotKind::pooling] = {1, 3, 1, 1};
  b[SlotKind::fc_size] = {1, 1024, 1, 256};
  b[SlotKind::batch_size] = {16, 512, 1, 128};
  b[SlotKind::learning_rate] = {1e-4, 1.0, 1e-6, 0.25};
  b[SlotKind::dropout] = {0.0, 0.95, 1e-4, 0.25};
  b[SlotKind::weight_decay] = {0.0, 0.01, 1e-6, 2.5e-3};
  b[SlotKind::momentum] = {0.0, 0.99, 1e-4, 0.25};
  b[SlotKind::lr_decay] = {0.5, 1.0, 1e-4, 0.125};
  b[SlotKind::grad_clip] = {0.1, 10.0, 1e-3, 2.5};
  b[SlotKind::label_smoothing] = {0.0, 0.3, 1e-4, 0.075};
  b[SlotKind::epoch_scale] = {0.25, 1.0, 1e-3, 0.2};
  b.min_conv = 0;
  b.max_conv = 8;
  b.min_fc = 0;
  b.max_fc = 4;
  b.optimizers = {"sgd", "adam", "adagrad", "rmsprop"};
  return b;
}

int dimension(int n_conv, int n_fc) {
  if (n_conv < 0 || n_fc < 0) throw std::invalid_argument("dimension: layer counts must be non-negative");
  return 5 * n_conv + n_fc + 10;
}

int dimension(const Configuration& config) { return dimension(config.n_conv, config.n_fc); }

std::vector<Violation> validate(const Configuration& config, const SpaceBounds& bounds) {
  std::vector<Violation> out;
  if (config.n_conv < bounds.min_conv || config.n_conv > bounds.max_conv)
    out.push_back({"n_conv", "layer count " + std::to_string(config.n_conv) + " outside [" +
                                 std::to_string(bounds.min_conv) + ", " + std::to_string(bounds.max_conv) + "]"});
  if (static_cast<int>(config.conv_layers.size()) != config.n_conv)
    out.push_back({"conv_layers", "length " + std::to_string(config.conv_layers.size()) + " does not match n_conv=" +
                                      std::to_string(config.n_conv)});
  if (config.n_fc < bounds.min_fc || config.n_fc > bounds.max_fc)
    out.push_back({"n_fc", "layer count " + std::to_string(config.n_fc) + " outside [" +
                               std::to_string(bounds.min_fc) + ", " + std::to_string(bounds.max_fc) + "]"});
  if (static_cast<int>(config.fc_sizes.size()) != config.n_fc)
    out.push_back({"fc_sizes", "length " + std::to_string(config.fc_sizes.size()) + " does not match n_fc=" +
                                   std::to_string(config.n_fc)});
  if (config.optimizer_id < 0 || config.optimizer_id >= static_cast<int>(bounds.optimizers.size()))
    out.push_back({"optimizer", "id " + std::to_string(config.optimizer_id) + " not in optimizer set"});

  for (std::size_t i = 0; i < config.conv_layers.size(); ++i)
    for (auto kind : kConvKinds)
      check_range(out, SlotRef{kind, static_cast<int>(i)}.name(), conv_field(config.conv_layers[i], kind),
                  bounds[kind]);
  for (std::size_t i = 0; i < config.fc_sizes.size(); ++i)
    check_range(out, SlotRef{SlotKind::fc_size, static_cast<int>(i)}.name(), config.fc_sizes[i],
                bounds[SlotKind::fc_size]);
  check_range(out, "batch_size", config.training.batch_size, bounds[SlotKind::batch_size]);
  for (auto kind : kRealKinds) {
    double v = real_field(config.training, kind);
    if (!std::isfinite(v))
      out.push_back({std::string(slot_kind_name(kind)), "value is not finite"});
    else
      check_range(out, std::string(slot_kind_name(kind)), v, bounds[kind]);
  }
  return out;
}

bool is_valid(const Configuration& config, const SpaceBounds& bounds) { return validate(config, bounds).empty(); }

ConvLayerHP default_conv_layer(const SpaceBounds& bounds) {
  ConvLayerHP layer;
  for (auto kind : kConvKinds) conv_field(layer, kind) = snapped_midpoint(bounds[kind]);
  return layer;
}

int default_fc_size(const SpaceBounds& bounds) { return snapped_midpoint(bounds[SlotKind::fc_size]); }

std::vector<Neighbor> neighbors(const Configuration& config, const SpaceBounds& bounds) {
  if (auto v = validate(config, bounds); !v.empty())
    throw std::invalid_argument("neighbors: invalid configuration (" + v.front().slot + ": " + v.front().message + ")");

  std::vector<Neighbor> out;
  if (config.n_conv + 1 <= bounds.max_conv) {
    Configuration c = config;
    c.conv_layers.push_back(default_conv_layer(bounds));
    c.n_conv += 1;
    out.push_back({NeighborMove::add_conv, std::move(c)});
  }
  if (config.n_conv - 1 >= bounds.min_conv) {
    Configuration c = config;
    c.conv_layers.pop_back();
    c.n_conv -= 1;
    out.push_back({NeighborMove::remove_conv, std::move(c)});
  }
  if (config.n_fc + 1 <= bounds.max_fc) {
    Configuration c = config;
    c.fc_sizes.push_back(default_fc_size(bounds));
    c.n_fc += 1;
    out.push_back({NeighborMove::add_fc, std::move(c)});
  }
  if (config.n_fc - 1 >= bounds.min_fc) {
    Configuration c = config;
    c.fc_sizes.pop_back();
    c.n_fc -= 1;
    out.push_back({NeighborMove::remove_fc, std::move(c)});
  }
  if (bounds.optimizers.size() > 1) {
    Configuration c = config;
    c.optimizer_id = (config.optimizer_id + 1) % static_cast<int>(bounds.optimizers.size());
    out.push_back({NeighborMove::next_optimizer, std::move(c)});
  }
  return out;
}

std::string SlotRef::name() const {
  switch (kind) {
    case SlotKind::out_channels:
    case SlotKind::kernel_size:
    case SlotKind::stride:
    case SlotKind::padding:
    case SlotKind::pooling:
      return "conv" + std::to_string(layer) + "." + std::string(slot_kind_name(kind));
    case SlotKind::fc_size:
      return "fc" + std::to_string(layer) + ".size";
    default:
      return std::string(slot_kind_name(kind));
  }
}

std::vector<SlotRef> quantitative_slots(const Configuration& config) {
  std::vector<SlotRef> slots;
  slots.reserve(5 * config.conv_layers.size() + config.fc_sizes.size() + 9);
  for (std::size_t i = 0; i < config.conv_layers.size(); ++i)
    for (auto kind : kConvKinds) slots.push_back({kind, static_cast<int>(i)});
  for (std::size_t i = 0; i < config.fc_sizes.size(); ++i) slots.push_back({SlotKind::fc_size, static_cast<int>(i)});
  slots.push_back({SlotKind::batch_size, -1});
  for (auto kind : kRealKinds) slots.push_back({kind, -1});
  return slots;
}

std::vector<double> quantitative_values(const Configuration& config) {
  std::vector<double> values;
  values.reserve(5 * config.conv_layers.size() + config.fc_sizes.size() + 9);
  for (const auto& layer : config.conv_layers)
    for (auto kind : kConvKinds) values.push_back(conv_field(layer, kind));
  for (int size : config.fc_sizes) values.push_back(size);
  values.push_back(config.training.batch_size);
  for (auto kind : kRealKinds) values.push_back(real_field(config.training, kind));
  return values;
}

Configuration with_quantitative_values(const Configuration& config, std::span<const double> values) {
  const std::size_t expected = 5 * config.conv_layers.size() + config.fc_sizes.size() + 9;
  if (values.size() != expected)
    throw std::invalid_argument("with_quantitative_values: expected " + std::to_string(expected) + " values, got " +
                                std::to_string(values.size()));
  Configuration out = config;
  std::size_t i = 0;
  auto as_int = [](double v) { return static_cast<int>(std::lround(v)); };
  for (auto& layer : out.conv_layers)
    for (auto kind : kConvKinds) conv_field(layer, kind) = as_int(values[i++]);
  for (int& size : out.fc_sizes) size = as_int(values[i++]);
  out.training.batch_size = as_int(values[i++]);
  for (auto kind : kRealKinds) real_field(out.training, kind) = values[i++];
  return out;
}

double snap_to_mesh(double value, double anchor, double step, double lower, double upper) {
  auto clip = [&](double v) { return std::clamp(v, lower, upper); };
  if (!(step > 0.0)) return clip(value);
  double q = (value - anchor) / step;
  double nearest = std::nearbyint(q);
  if (std::abs(q - nearest) <= 1e-9 * std::max(1.0, std::abs(q))) q = nearest;
  double f = std::floor(q);
  double c = (q == f) ? f : f + 1.0;
  double below = clip(anchor + f * step);
  double above = clip(anchor + c * step);
  double target = clip(value);
  return std::abs(below - target) <= std::abs(above - target) ? below : above;
}

namespace {

Configuration project_impl(const Configuration& config, const Mesh& mesh, const SpaceBounds& bounds,
                           const std::vector<double>& anchors) {
  auto slots = quantitative_slots(config);
  auto values = quantitative_values(config);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto& b = bounds[slots[i].kind];
    values[i] = snap_to_mesh(values[i], anchors.empty() ? 0.0 : anchors[i], mesh.mesh_size(slots[i].kind), b.lower,
                             b.upper);
  }
  return with_quantitative_values(config, values);
}

}  // namespace

Configuration project_to_mesh(const Configuration& config, const Mesh& mesh, const SpaceBounds& bounds) {
  return project_impl(config, mesh, bounds, {});
}

Configuration project_to_mesh(const Configuration& config, const Mesh& mesh, const SpaceBounds& bounds,
                              const Configuration& anchor) {
  auto anchors = quantitative_values(anchor);
  if (anchors.size() != quantitative_slots(config).size())
    throw std::invalid_argument("project_to_mesh: anchor layout differs from configuration");
  return project_impl(config, mesh, bounds, anchors);
}

std::string serialize(const Configuration& config) {
  std::string out;
  auto emit = [&](const std::string& name, const std::string& value) {
    if (!out.empty()) out += ';';
    out += name;
    out += '=';
    out += value;
  };
  for (std::size_t i = 0; i < config.conv_layers.size(); ++i)
    for (auto kind : kConvKinds)
      emit(SlotRef{kind, static_cast<int>(i)}.name(), std::to_string(conv_field(config.conv_layers[i], kind)));
  for (std::size_t i = 0; i < config.fc_sizes.size(); ++i)
    emit(SlotRef{SlotKind::fc_size, static_cast<int>(i)}.name(), std::to_string(config.fc_sizes[i]));
  emit("optimizer", std::to_string(config.optimizer_id));
  emit("batch_size", std::to_string(config.training.batch_size));
  for (auto kind : kRealKinds) emit(std::string(slot_kind_name(kind)), format_double(real_field(config.training, kind)));
  return out;
}

Configuration parse_configuration(std::string_view text) {
  std::map<std::string, std::string, std::less<>> tokens;
  while (!text.empty()) {
    auto sep = text.find(';');
    auto token = text.substr(0, sep);
    text = sep == std::string_view::npos ? std::string_view{} : text.substr(sep + 1);
    if (token.empty()) continue;
    auto eq = token.find('=');
    if (eq == std::string_view::npos || eq == 0)
      throw std::invalid_argument("malformed configuration token '" + std::string(token) + "'");
    auto [it, inserted] = tokens.emplace(std::string(token.substr(0, eq)), std::string(token.substr(eq + 1)));
    if (!inserted) throw std::invalid_argument("duplicate configuration slot '" + it->first + "'");
  }

  auto take = [&](const std::string& name) {
    auto it = tokens.find(name);
    if (it == tokens.end()) throw std::invalid_argument("configuration is missing slot '" + name + "'");
    std::string value = std::move(it->second);
    tokens.erase(it);
    return value;
  };
  auto take_int = [&](const std::string& name) {
    auto v = parse_int(take(name));
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
      throw std::invalid_argument("slot '" + name + "' out of integer range");
    return static_cast<int>(v);
  };

  Configuration config;
  while (tokens.count(SlotRef{SlotKind::out_channels, config.n_conv}.name()) != 0) {
    ConvLayerHP layer;
    for (auto kind : kConvKinds) conv_field(layer, kind) = take_int(SlotRef{kind, config.n_conv}.name());
    config.conv_layers.push_back(layer);
    ++config.n_conv;
  }
  while (tokens.count(SlotRef{SlotKind::fc_size, config.n_fc}.name()) != 0) {
    config.fc_sizes.push_back(take_int(SlotRef{SlotKind::fc_size, config.n_fc}.name()));
    ++config.n_fc;
  }
  config.optimizer_id = take_int("optimizer");
  config.training.batch_size = take_int("batch_size");
  for (auto kind : kRealKinds) real_field(config.training, kind) = parse_double(take(std::string(slot_kind_name(kind))));
  if (!tokens.empty()) throw std::invalid_argument("unknown configuration slot '" + tokens.begin()->first + "'");
  return config;
}

Configuration preset(std::string_view name) {
  Configuration c;
  c.optimizer_id = 0;
  c.training = TrainingHP{.batch_size = 128,
                          .learning_rate = 0.1,
                          .dropout = 0.5,
                          .weight_decay = 0.0,
                          .momentum = 0.9,
                          .lr_decay = 1.0,
                          .grad_clip = 5.0,
                          .label_smoothing = 0.0,
                          .epoch_scale = 1.0};
  auto add_conv = [&](int channels) {
    c.conv_layers.push_back({.out_channels = channels, .kernel_size = 5, .stride = 1, .padding = 2, .pooling = 2});
    ++c.n_conv;
  };
  if (name == "p1") {
    add_conv(16);
    c.fc_sizes = {128, 64};
  } else if (name == "p2") {
    add_conv(16);
    add_conv(32);
    c.fc_sizes = {128, 64};
  } else if (name == "p3") {
    for (int ch : {16, 32, 32, 64, 64}) add_conv(ch);
    c.fc_sizes = {128};
  } else {
    throw std::invalid_argument("unknown preset '" + std::string(name) + "' (expected p1, p2 or p3)");
  }
  c.n_fc = static_cast<int>(c.fc_sizes.size());
  return c;
}

}  // namespace hypermads
