#pragma once

#include <stdexcept>

#include "hlsm/types.hpp"

namespace hlsm {

// Presence threshold shared by affordance features, VIN obstacle tagging and
// instance detection.
inline constexpr double kClassPresenceThreshold = 0.5;

// Column-wise affordance planes. Channel tau at (x,y) is set iff some voxel in
// the column carries a class with that affordance above the presence
// threshold; the observed channel is the column-wise OR of the observability
// grid.
inline AffordanceMap affordance_features(const StateRepr& state, const GridConfig& cfg) {
  AffordanceMap out(kAffordanceChannels, cfg.dims_x, cfg.dims_y, 0);
  const int nc = cfg.num_classes();
  for (int x = 0; x < cfg.dims_x; ++x) {
    for (int y = 0; y < cfg.dims_y; ++y) {
      uint8_t col_aff = 0;
      uint8_t col_obs = 0;
      for (int z = 0; z < cfg.dims_z; ++z) {
        if (state.observed.at(x, y, z)) col_obs = 1;
        for (int c = 0; c < nc; ++c) {
          if (state.semantic.at(x, y, z, c) > kClassPresenceThreshold)
            col_aff |= cfg.classes.info(c).affordances;
        }
      }
      for (int a = 0; a < kNumAffordances; ++a)
        out.at(a, x, y) = (col_aff >> a) & 1;
      out.at(kAffordanceObservedChannel, x, y) = col_obs;
    }
  }
  return out;
}

inline SubgoalHistoryTensor empty_history_tensor(const GridConfig& cfg) {
  return SubgoalHistoryTensor(kNumInteractionTypes, cfg.dims_x, cfg.dims_y, 0);
}

// True when some voxel of the mask still carries the class above threshold.
inline bool mask_has_support(const Mask3D& mask, const SemanticVoxelGrid& sem, int arg_class) {
  if (arg_class == kNoClass) return false;
  for (int x = 0; x < mask.nx(); ++x)
    for (int y = 0; y < mask.ny(); ++y)
      for (int z = 0; z < mask.nz(); ++z)
        if (mask.at(x, y, z) > kClassPresenceThreshold &&
            sem.at(x, y, z, arg_class) > kClassPresenceThreshold)
          return true;
  return false;
}

inline bool mask_is_empty(const Mask3D& mask) {
  for (double v : mask.data())
    if (v > kClassPresenceThreshold) return false;
  return true;
}

// Adds one executed subgoal to the interaction-count tensor: the count for the
// subgoal's type rises by the binarized column max of its 3D mask.
inline SubgoalHistoryTensor update_history_tensor(const SubgoalHistoryTensor& h, const Subgoal& g) {
  if (g.is_stop()) throw std::invalid_argument("Stop subgoal has no history-tensor entry");
  SubgoalHistoryTensor out = h;
  const int t = static_cast<int>(g.stype);
  for (int x = 0; x < g.mask.nx(); ++x) {
    for (int y = 0; y < g.mask.ny(); ++y) {
      int hit = 0;
      for (int z = 0; z < g.mask.nz(); ++z) {
        if (g.mask.at(x, y, z) > kClassPresenceThreshold) {
          hit = 1;
          break;
        }
      }
      out.at(t, x, y) += hit;
    }
  }
  return out;
}

// Inventory plus the spatial max-pool of every semantic channel; length 2C.
inline StateSummary state_summary(const StateRepr& state) {
  const int nc = state.semantic.num_classes();
  StateSummary out(static_cast<size_t>(2) * nc, 0.0);
  for (int c = 0; c < nc; ++c) out[c] = state.inventory.at(c);
  for (int x = 0; x < state.semantic.nx(); ++x)
    for (int y = 0; y < state.semantic.ny(); ++y)
      for (int z = 0; z < state.semantic.nz(); ++z)
        for (int c = 0; c < nc; ++c)
          out[nc + c] = std::max(out[nc + c], state.semantic.at(x, y, z, c));
  return out;
}

namespace detail {

// Rotates an ego-frame offset (canonical heading = North) into the world
// frame of the given yaw.
inline Cell rotate_offset(Cell d, Yaw yaw) {
  switch (yaw) {
    case Yaw::North: return d;
    case Yaw::East: return {d.y, -d.x};
    case Yaw::South: return {-d.x, -d.y};
    case Yaw::West: return {-d.y, d.x};
  }
  return d;
}

inline Cell rotate_offset_inverse(Cell d, Yaw yaw) {
  switch (yaw) {
    case Yaw::North: return d;
    case Yaw::East: return {-d.y, d.x};
    case Yaw::South: return {-d.x, -d.y};
    case Yaw::West: return {d.y, -d.x};
  }
  return d;
}

}  // namespace detail

// Re-expresses a K-channel top-down map in the agent's egocentric frame: the
// agent cell lands on the grid center and its heading points North. Cells
// pulled in from outside the source grid are zero.
template <typename T>
ChannelGrid2<T> ego_transform(const ChannelGrid2<T>& map, const Pose& pose) {
  ChannelGrid2<T> out(map.nk(), map.nx(), map.ny(), T{});
  const int cx = map.nx() / 2;
  const int cy = map.ny() / 2;
  for (int x = 0; x < map.nx(); ++x) {
    for (int y = 0; y < map.ny(); ++y) {
      const Cell w = detail::rotate_offset({x - cx, y - cy}, pose.yaw);
      const int sx = pose.x + w.x;
      const int sy = pose.y + w.y;
      if (sx < 0 || sx >= map.nx() || sy < 0 || sy >= map.ny()) continue;
      for (int k = 0; k < map.nk(); ++k) out.at(k, x, y) = map.at(k, sx, sy);
    }
  }
  return out;
}

// Inverse of ego_transform (up to cells that left the grid).
template <typename T>
ChannelGrid2<T> allo_transform(const ChannelGrid2<T>& map, const Pose& pose) {
  ChannelGrid2<T> out(map.nk(), map.nx(), map.ny(), T{});
  const int cx = map.nx() / 2;
  const int cy = map.ny() / 2;
  for (int x = 0; x < map.nx(); ++x) {
    for (int y = 0; y < map.ny(); ++y) {
      const Cell e = detail::rotate_offset_inverse({x - pose.x, y - pose.y}, pose.yaw);
      const int sx = cx + e.x;
      const int sy = cy + e.y;
      if (sx < 0 || sx >= map.nx() || sy < 0 || sy >= map.ny()) continue;
      for (int k = 0; k < map.nk(); ++k) out.at(k, x, y) = map.at(k, sx, sy);
    }
  }
  return out;
}

}  // namespace hlsm
