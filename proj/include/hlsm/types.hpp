#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hlsm/classes.hpp"
#include "hlsm/grid.hpp"

namespace hlsm {

// Compass heading. North = +y, East = +x. RotateLeft is the counter-clockwise
// step (North -> West), RotateRight the clockwise one.
enum class Yaw : int { North = 0, East = 1, South = 2, West = 3 };

inline const char* yaw_name(Yaw y) {
  switch (y) {
    case Yaw::North: return "North";
    case Yaw::East: return "East";
    case Yaw::South: return "South";
    case Yaw::West: return "West";
  }
  return "?";
}

inline std::optional<Yaw> yaw_from_name(const std::string& s) {
  for (int i = 0; i < 4; ++i)
    if (s == yaw_name(static_cast<Yaw>(i))) return static_cast<Yaw>(i);
  return std::nullopt;
}

inline Yaw rotate_left(Yaw y) { return static_cast<Yaw>((static_cast<int>(y) + 3) % 4); }
inline Yaw rotate_right(Yaw y) { return static_cast<Yaw>((static_cast<int>(y) + 1) % 4); }

// Unit step of a heading on the grid.
inline Cell heading_delta(Yaw y) {
  switch (y) {
    case Yaw::North: return {0, 1};
    case Yaw::East: return {1, 0};
    case Yaw::South: return {0, -1};
    case Yaw::West: return {-1, 0};
  }
  return {0, 0};
}

// Camera pitch is restricted to 30-degree stops; positive pitch looks down.
inline constexpr std::array<int, 4> kPitchValues = {-30, 0, 30, 60};
inline bool valid_pitch(int pitch) {
  for (int p : kPitchValues)
    if (p == pitch) return true;
  return false;
}

struct Pose {
  int x = 0;
  int y = 0;
  Yaw yaw = Yaw::North;
  int pitch = 0;

  Cell cell() const { return {x, y}; }
  friend bool operator==(const Pose&, const Pose&) = default;
};

// Shared spatial/semantic configuration: voxel grid shape and the class table.
struct GridConfig {
  int dims_x = 61;
  int dims_y = 61;
  int dims_z = 10;
  double voxel_size = 0.25;  // meters
  ClassTable classes;

  int num_classes() const { return classes.size(); }

  void validate() const {
    if (dims_x < 1 || dims_y < 1 || dims_z < 1) throw ConfigError("grid dims must be >= 1");
    if (voxel_size <= 0) throw ConfigError("voxel_size must be positive");
    if (classes.size() < 1) throw ConfigError("need at least one class");
  }

  bool pose_in_bounds(const Pose& p) const {
    return p.x >= 0 && p.x < dims_x && p.y >= 0 && p.y < dims_y && valid_pitch(p.pitch);
  }
};

// One-hot over classes; at most one entry set (single held object).
class InventoryVector {
 public:
  InventoryVector() = default;
  explicit InventoryVector(int num_classes) : v_(num_classes, 0) {}

  int size() const { return static_cast<int>(v_.size()); }
  uint8_t at(int c) const { return v_.at(c); }

  std::optional<int> held_class() const {
    for (int c = 0; c < size(); ++c)
      if (v_[c]) return c;
    return std::nullopt;
  }
  bool empty_hand() const { return !held_class().has_value(); }

  void set_held(std::optional<int> cls) {
    std::fill(v_.begin(), v_.end(), uint8_t{0});
    if (cls) v_.at(*cls) = 1;
  }

  const std::vector<uint8_t>& data() const { return v_; }
  friend bool operator==(const InventoryVector&, const InventoryVector&) = default;

 private:
  std::vector<uint8_t> v_;
};

// The agent's persistent world belief.
struct StateRepr {
  SemanticVoxelGrid semantic;
  ObservabilityGrid observed;
  InventoryVector inventory;
  Pose pose;

  static StateRepr empty(const GridConfig& cfg) {
    StateRepr s;
    s.semantic = SemanticVoxelGrid(cfg.dims_x, cfg.dims_y, cfg.dims_z, cfg.num_classes());
    s.observed = ObservabilityGrid(cfg.dims_x, cfg.dims_y, cfg.dims_z, 0);
    s.inventory = InventoryVector(cfg.num_classes());
    return s;
  }
};

enum class SubgoalType : int {
  PickUp = 0,
  Put = 1,
  ToggleOn = 2,
  ToggleOff = 3,
  Open = 4,
  Close = 5,
  Slice = 6,
  Stop = 7,
};
inline constexpr int kNumInteractionTypes = 7;  // every type except Stop

inline const char* subgoal_type_name(SubgoalType t) {
  switch (t) {
    case SubgoalType::PickUp: return "PickUp";
    case SubgoalType::Put: return "Put";
    case SubgoalType::ToggleOn: return "ToggleOn";
    case SubgoalType::ToggleOff: return "ToggleOff";
    case SubgoalType::Open: return "Open";
    case SubgoalType::Close: return "Close";
    case SubgoalType::Slice: return "Slice";
    case SubgoalType::Stop: return "Stop";
  }
  return "?";
}

// Argument-class sentinel for the Stop subgoal.
inline constexpr int kNoClass = -1;

// One intended environment interaction: (type, argument class, 3D mask).
struct Subgoal {
  SubgoalType stype = SubgoalType::Stop;
  int arg_class = kNoClass;
  Mask3D mask;

  bool is_stop() const { return stype == SubgoalType::Stop; }

  static Subgoal stop(const GridConfig& cfg) {
    Subgoal g;
    g.stype = SubgoalType::Stop;
    g.arg_class = kNoClass;
    g.mask = Mask3D(cfg.dims_x, cfg.dims_y, cfg.dims_z, 0.0);
    return g;
  }
};

// Top-down feature planes; channels 0..5 follow the Affordance order, channel
// 6 marks columns with at least one observed voxel.
using AffordanceMap = ChannelGrid2<uint8_t>;
inline constexpr int kAffordanceObservedChannel = kNumAffordances;
inline constexpr int kAffordanceChannels = kNumAffordances + 1;

// Integer counts of past interactions by type and 2D position.
using SubgoalHistoryTensor = ChannelGrid2<int>;

// Inventory concatenated with the per-class spatial max of the semantic grid.
using StateSummary = std::vector<double>;

using Mask2D = Grid2<uint8_t>;

// Primitive environment action: parameter-free navigation or a mask-carrying
// interaction.
struct EnvAction {
  enum class Kind { MoveAhead, RotateLeft, RotateRight, LookUp, LookDown, Interact };

  Kind kind = Kind::MoveAhead;
  SubgoalType interaction = SubgoalType::Stop;  // valid when kind == Interact
  Mask2D mask;                                  // valid when kind == Interact

  static EnvAction nav(Kind k) {
    EnvAction a;
    a.kind = k;
    return a;
  }
  static EnvAction interact(SubgoalType t, Mask2D m) {
    EnvAction a;
    a.kind = Kind::Interact;
    a.interaction = t;
    a.mask = std::move(m);
    return a;
  }

  std::string name() const {
    switch (kind) {
      case Kind::MoveAhead: return "MoveAhead";
      case Kind::RotateLeft: return "RotateLeft";
      case Kind::RotateRight: return "RotateRight";
      case Kind::LookUp: return "LookUp";
      case Kind::LookDown: return "LookDown";
      case Kind::Interact: return std::string("Interact:") + subgoal_type_name(interaction);
    }
    return "?";
  }
};

}  // namespace hlsm
