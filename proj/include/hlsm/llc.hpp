#pragma once

#include <cmath>
#include <deque>
#include <optional>
#include <set>
#include <vector>

#include "hlsm/hlc.hpp"
#include "hlsm/observation.hpp"
#include "hlsm/vin.hpp"

namespace hlsm {

struct LlcConfig {
  int exploration_budget = 8;   // exploration cycles per subgoal
  int reach_cells = 6;          // interaction reach, Chebyshev (1.5 m at 0.25 m voxels)
  int travel_pitch = 30;        // nominal camera pitch while navigating/scanning
  int max_blocked_moves = 3;    // consecutive rejected MoveAheads before aborting a route
  VinConfig vin;
};

// Unoccupied columns with believed floor (the ground set), and the frontier
// subset bordering fully unobserved columns.
struct GroundSets {
  std::vector<Cell> ground;
  std::vector<Cell> frontier;
};

inline GroundSets compute_ground_sets(const StateRepr& state, const VinConfig& vcfg,
                                      const GridConfig& gcfg) {
  GroundSets out;
  const int floor_cls = gcfg.classes.index_of("Floor").value_or(-2);
  const int rug_cls = gcfg.classes.index_of("Rug").value_or(-2);
  Grid2<uint8_t> is_ground(gcfg.dims_x, gcfg.dims_y, 0);
  for (int x = 0; x < gcfg.dims_x; ++x) {
    for (int y = 0; y < gcfg.dims_y; ++y) {
      if (column_has_obstacle(state, vcfg, gcfg, x, y)) continue;
      bool has_floor = false;
      for (int z = 0; z < gcfg.dims_z && !has_floor; ++z) {
        if (floor_cls >= 0 && state.semantic.at(x, y, z, floor_cls) > kClassPresenceThreshold)
          has_floor = true;
        if (rug_cls >= 0 && state.semantic.at(x, y, z, rug_cls) > kClassPresenceThreshold)
          has_floor = true;
      }
      if (has_floor) {
        is_ground.at(x, y) = 1;
        out.ground.push_back({x, y});
      }
    }
  }
  const auto column_unobserved = [&](int x, int y) {
    if (x < 0 || x >= gcfg.dims_x || y < 0 || y >= gcfg.dims_y) return false;
    for (int z = 0; z < gcfg.dims_z; ++z)
      if (state.observed.at(x, y, z)) return false;
    return true;
  };
  for (const Cell& c : out.ground) {
    if (column_unobserved(c.x + 1, c.y) || column_unobserved(c.x - 1, c.y) ||
        column_unobserved(c.x, c.y + 1) || column_unobserved(c.x, c.y - 1))
      out.frontier.push_back(c);
  }
  return out;
}

// Uniform sample from the frontier set, falling back to the ground set;
// nullopt when no ground is mapped at all (unmappable scene).
inline std::optional<Cell> sample_exploration_position(const StateRepr& state,
                                                       const VinConfig& vcfg,
                                                       const GridConfig& gcfg, Rng& rng) {
  const GroundSets sets = compute_ground_sets(state, vcfg, gcfg);
  const auto& pool = sets.frontier.empty() ? sets.ground : sets.frontier;
  if (pool.empty()) return std::nullopt;
  return pool[rng.next_below(pool.size())];
}

namespace detail {

inline int nearest_pitch_bucket(double angle_deg) {
  int best = kPitchValues[0];
  for (int p : kPitchValues) {
    const double d = std::abs(angle_deg - p);
    const double bd = std::abs(angle_deg - best);
    if (d < bd) best = p;  // ties keep the earlier (smaller) bucket
  }
  return best;
}

// Line of sight through the believed map: the segment from the camera to the
// mask centroid must not cross a believed obstacle voxel outside the mask.
inline bool centroid_visible(const StateRepr& state, const GridConfig& gcfg, const Mask3D& mask,
                             const Vec3& from, const Vec3& centroid) {
  const Vec3 d = centroid - from;
  const double len = d.norm();
  if (len < 1e-9) return true;
  bool blocked = false;
  traverse_voxels(from, d * (1.0 / len), gcfg.voxel_size, gcfg.dims_x, gcfg.dims_y, gcfg.dims_z,
                  [&](const Voxel& v, double t0, double) {
                    if (t0 >= len) return false;
                    if (mask.at(v) > kClassPresenceThreshold) return false;  // reached the target
                    for (int c = 0; c < gcfg.num_classes(); ++c) {
                      if (state.semantic.at(v.x, v.y, v.z, c) > kClassPresenceThreshold &&
                          gcfg.classes.has_affordance(c, Affordance::Obstacle)) {
                        blocked = true;
                        return false;
                      }
                    }
                    return true;
                  });
  return !blocked;
}

}  // namespace detail

// Samples a pose from which the interaction is likely to succeed: a ground
// cell within reach of the mask footprint, heading within 45 degrees of the
// mask centroid, line of sight clear, pitch at the nearest bucket of the
// centroid elevation angle.
inline std::optional<Pose> sample_interaction_pose(const StateRepr& state, const Subgoal& subgoal,
                                                   const CameraIntrinsics& intr,
                                                   const LlcConfig& cfg, const GridConfig& gcfg,
                                                   Rng& rng) {
  std::vector<Voxel> mask_voxels;
  for (int x = 0; x < gcfg.dims_x; ++x)
    for (int y = 0; y < gcfg.dims_y; ++y)
      for (int z = 0; z < gcfg.dims_z; ++z)
        if (subgoal.mask.at(x, y, z) > kClassPresenceThreshold) mask_voxels.push_back({x, y, z});
  if (mask_voxels.empty()) return std::nullopt;

  std::set<Cell> footprint;
  double cx = 0, cy = 0, cz = 0;
  for (const Voxel& v : mask_voxels) {
    footprint.insert({v.x, v.y});
    cx += v.x;
    cy += v.y;
    cz += v.z;
  }
  cx /= mask_voxels.size();
  cy /= mask_voxels.size();
  cz /= mask_voxels.size();
  const double vs = gcfg.voxel_size;
  const Vec3 centroid{(cx + 0.5) * vs, (cy + 0.5) * vs, (cz + 0.5) * vs};

  const GroundSets sets = compute_ground_sets(state, cfg.vin, gcfg);
  std::vector<Pose> candidates;
  for (const Cell& cell : sets.ground) {
    int cheb = std::numeric_limits<int>::max();
    for (const Cell& f : footprint)
      cheb = std::min(cheb, std::max(std::abs(f.x - cell.x), std::abs(f.y - cell.y)));
    if (cheb < 1 || cheb > cfg.reach_cells) continue;

    const Vec3 cam{(cell.x + 0.5) * vs, (cell.y + 0.5) * vs, intr.camera_height};
    if (!detail::centroid_visible(state, gcfg, subgoal.mask, cam, centroid)) continue;

    const double dx = centroid.x - cam.x;
    const double dy = centroid.y - cam.y;
    const double horiz = std::sqrt(dx * dx + dy * dy);
    const double pitch_angle = std::atan2(intr.camera_height - centroid.z, horiz) * 180.0 / 3.14159265358979323846;
    const int pitch = detail::nearest_pitch_bucket(pitch_angle);

    for (int yi = 0; yi < 4; ++yi) {
      const Yaw yaw = static_cast<Yaw>(yi);
      const Cell h = heading_delta(yaw);
      const double dot = h.x * dx + h.y * dy;
      const double cos45 = std::cos(45.0 * 3.14159265358979323846 / 180.0);
      if (horiz < 1e-9 || dot / horiz < cos45 - 1e-9) continue;
      candidates.push_back({cell.x, cell.y, yaw, pitch});
    }
  }
  if (candidates.empty()) return std::nullopt;
  return candidates[rng.next_below(candidates.size())];
}

// Drops interaction-mask pixels whose current sensed depth does not lie at
// the grounded component. A class-matching pixel whose ray merely passes
// through the mask voxels on its way to a surface much farther away belongs
// to a different instance; acting on it would grab the wrong object.
inline void apply_depth_gate(Mask2D& mask, const DepthImage& depth, const Mask3D& mask3,
                             const Pose& pose, const CameraIntrinsics& intr,
                             const GridConfig& gcfg, double slack = 0.15) {
  const CameraFrame cam(pose, intr, gcfg.voxel_size);
  for (int v = 0; v < mask.ny(); ++v) {
    for (int u = 0; u < mask.nx(); ++u) {
      if (!mask.at(u, v)) continue;
      double t_lo = std::numeric_limits<double>::infinity();
      double t_hi = -std::numeric_limits<double>::infinity();
      traverse_voxels(cam.origin(), cam.pixel_ray(u, v), gcfg.voxel_size, gcfg.dims_x,
                      gcfg.dims_y, gcfg.dims_z, [&](const Voxel& vox, double t0, double t1) {
                        if (mask3.at(vox) > kClassPresenceThreshold) {
                          t_lo = std::min(t_lo, t0);
                          t_hi = std::max(t_hi, t1);
                        }
                        return true;
                      });
      const double d = depth.expected_depth(u, v);
      if (!(d >= t_lo - slack && d <= t_hi + slack)) mask.at(u, v) = 0;
    }
  }
}

// First-person interaction mask: pixels whose segmentation matches the
// argument class and whose ray crosses the subgoal's 3D mask.
inline Mask2D interact_mask(const StateRepr& state, const SegImage& seg, const Subgoal& subgoal,
                            const CameraIntrinsics& intr, const GridConfig& gcfg) {
  Mask2D out(intr.width, intr.height, 0);
  if (subgoal.arg_class == kNoClass) return out;
  const CameraFrame cam(state.pose, intr, gcfg.voxel_size);
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      if (seg.at(u, v, subgoal.arg_class) <= kClassPresenceThreshold) continue;
      bool in_mask = false;
      traverse_voxels(cam.origin(), cam.pixel_ray(u, v), gcfg.voxel_size, gcfg.dims_x,
                      gcfg.dims_y, gcfg.dims_z, [&](const Voxel& vox, double, double) {
                        if (subgoal.mask.at(vox) > kClassPresenceThreshold) {
                          in_mask = true;
                          return false;
                        }
                        return true;
                      });
      out.at(u, v) = in_mask ? 1 : 0;
    }
  }
  return out;
}

// Multi-step executor for one subgoal: scan, explore until the argument class
// is believed present, move to a sampled interaction pose, emit the
// interaction, and report Pass/Fail from the environment's outcome.
class Llc {
 public:
  struct Output {
    enum class Kind { Action, Pass, Fail };
    Kind kind = Kind::Fail;
    EnvAction action;

    static Output act(EnvAction a) { return {Kind::Action, std::move(a)}; }
    static Output pass() { return {Kind::Pass, {}}; }
    static Output fail() { return {Kind::Fail, {}}; }
  };

  enum class Phase {
    ScanRotate,
    Explore,
    NavigateToExploration,
    NavigateToInteraction,
    FinalRotate,
    Interact,
    AwaitResult,
    Done,
  };

  Llc(const GridConfig& gcfg, CameraIntrinsics intr, LlcConfig cfg)
      : gcfg_(gcfg), intr_(intr), cfg_(cfg), cycles_left_(cfg.exploration_budget) {}

  Phase phase() const { return phase_; }

  Output step(const Subgoal& subgoal, const StateRepr& state, const Observation& obs,
              std::optional<bool> last_result, Rng& rng) {
    if (subgoal.is_stop()) throw std::invalid_argument("llc cannot execute a Stop subgoal");

    if (phase_ == Phase::AwaitResult) {
      phase_ = Phase::Done;
      return (last_result && *last_result) ? Output::pass() : Output::fail();
    }

    // Track rejected moves so the planner can route around unmapped blockers.
    if (last_move_target_ && last_result) {
      if (!*last_result) {
        bumped_.insert(*last_move_target_);
        ++blocked_streak_;
      } else {
        blocked_streak_ = 0;
      }
      last_move_target_.reset();
    }

    // A grounded mask whose voxels no longer carry the argument class was
    // based on since-corrected evidence (stale or mis-segmented); abandon the
    // attempt instead of completing a doomed approach. The re-drawn subgoal
    // re-grounds against the corrected map. Three consecutive unsupported
    // frames are required, since noisy depth makes thin objects' evidence
    // flicker between adjacent voxels for a frame at a time.
    if (target_pose_ && !mask_empty(subgoal)) {
      if (!mask_supported(subgoal, state)) {
        if (++support_missing_streak_ >= 3) return done_fail();
      } else {
        support_missing_streak_ = 0;
      }
    }

    if (!pending_.empty()) return emit_pending();

    for (int guard = 0; guard < 16; ++guard) {
      switch (phase_) {
        case Phase::ScanRotate: {
          queue_pitch_to(state.pose.pitch, cfg_.travel_pitch);
          for (int i = 0; i < 3; ++i) pending_.push_back(EnvAction::nav(EnvAction::Kind::RotateLeft));
          phase_ = Phase::Explore;  // decision happens when the queue drains
          return emit_pending();
        }
        case Phase::Explore: {
          if (class_visible(state, subgoal.arg_class)) {
            phase_ = Phase::NavigateToInteraction;
            continue;
          }
          if (cycles_left_ <= 0) return done_fail();
          --cycles_left_;
          const auto target = sample_exploration_position(state, cfg_.vin, gcfg_, rng);
          if (!target) return done_fail();
          nav_target_ = *target;
          blocked_streak_ = 0;
          phase_ = Phase::NavigateToExploration;
          continue;
        }
        case Phase::NavigateToExploration: {
          const auto out = nav_step(state);
          if (out) return *out;
          phase_ = Phase::ScanRotate;  // arrived (or gave up): scan from here
          continue;
        }
        case Phase::NavigateToInteraction: {
          if (!target_pose_) {
            if (mask_empty(subgoal)) return done_fail();  // found later than grounding
            const auto pose = sample_interaction_pose(state, subgoal, intr_, cfg_, gcfg_, rng);
            if (!pose) return done_fail();
            target_pose_ = *pose;
            nav_target_ = pose->cell();
            blocked_streak_ = 0;
          }
          const auto out = nav_step(state);
          if (out) return *out;
          if (state.pose.cell() != *nav_target_) {
            // Planner stopped short of the goal cell: re-sample once.
            if (pose_resampled_) return done_fail();
            pose_resampled_ = true;
            target_pose_.reset();
            continue;
          }
          phase_ = Phase::FinalRotate;
          continue;
        }
        case Phase::FinalRotate: {
          queue_yaw_to(state.pose.yaw, target_pose_->yaw);
          queue_pitch_to(state.pose.pitch, target_pose_->pitch);
          phase_ = Phase::Interact;
          if (!pending_.empty()) return emit_pending();
          continue;
        }
        case Phase::Interact: {
          if (!(state.pose == *target_pose_)) return done_fail();
          Mask2D mask = interact_mask(state, obs.seg, subgoal, intr_, gcfg_);
          apply_depth_gate(mask, obs.depth, subgoal.mask, state.pose, intr_, gcfg_);
          phase_ = Phase::AwaitResult;
          last_move_target_.reset();
          return Output::act(EnvAction::interact(subgoal.stype, std::move(mask)));
        }
        case Phase::AwaitResult:
        case Phase::Done:
          return done_fail();
      }
    }
    return done_fail();
  }

 private:
  static bool class_visible(const StateRepr& state, int cls) {
    if (cls == kNoClass) return false;
    for (int x = 0; x < state.semantic.nx(); ++x)
      for (int y = 0; y < state.semantic.ny(); ++y)
        for (int z = 0; z < state.semantic.nz(); ++z)
          if (state.semantic.at(x, y, z, cls) > kClassPresenceThreshold) return true;
    return false;
  }

  static bool mask_empty(const Subgoal& g) { return mask_is_empty(g.mask); }

  static bool mask_supported(const Subgoal& g, const StateRepr& state) {
    return mask_has_support(g.mask, state.semantic, g.arg_class);
  }

  Output done_fail() {
    phase_ = Phase::Done;
    pending_.clear();
    return Output::fail();
  }

  Output emit_pending() {
    EnvAction a = pending_.front();
    pending_.pop_front();
    return Output::act(std::move(a));
  }

  void queue_pitch_to(int from, int to) {
    for (int p = from; p < to; p += 30) pending_.push_back(EnvAction::nav(EnvAction::Kind::LookDown));
    for (int p = from; p > to; p -= 30) pending_.push_back(EnvAction::nav(EnvAction::Kind::LookUp));
  }

  void queue_yaw_to(Yaw from, Yaw to) {
    const int diff = (static_cast<int>(to) - static_cast<int>(from) + 4) % 4;
    if (diff == 1) {
      pending_.push_back(EnvAction::nav(EnvAction::Kind::RotateRight));
    } else if (diff == 3) {
      pending_.push_back(EnvAction::nav(EnvAction::Kind::RotateLeft));
    } else if (diff == 2) {
      pending_.push_back(EnvAction::nav(EnvAction::Kind::RotateLeft));
      pending_.push_back(EnvAction::nav(EnvAction::Kind::RotateLeft));
    }
  }

  // One navigation action toward nav_target_, or nullopt on arrival/abort.
  std::optional<Output> nav_step(const StateRepr& state) {
    if (state.pose.cell() == *nav_target_) return std::nullopt;
    if (blocked_streak_ > cfg_.max_blocked_moves) return std::nullopt;
    if (state.pose.pitch != cfg_.travel_pitch) {
      queue_pitch_to(state.pose.pitch, cfg_.travel_pitch);
      return emit_pending();
    }
    VinGrid grid = build_vin_grid(state, *nav_target_, cfg_.vin, gcfg_);
    grid.obstacle.at(state.pose.x, state.pose.y) = 0;  // the agent stands here
    for (const Cell& b : bumped_)
      if (grid.obstacle.in_bounds(b.x, b.y)) grid.obstacle.at(b.x, b.y) = 1;
    const QFunction q = value_iteration(grid, cfg_.vin);
    const VinAction a = greedy_action(q, state.pose.cell());
    if (a == VinAction::Stop) return std::nullopt;
    EnvAction env = map_action(state.pose.yaw, a);
    if (env.kind == EnvAction::Kind::MoveAhead) {
      const Cell d = heading_delta(state.pose.yaw);
      last_move_target_ = Cell{state.pose.x + d.x, state.pose.y + d.y};
    }
    return Output::act(std::move(env));
  }

  GridConfig gcfg_;
  CameraIntrinsics intr_;
  LlcConfig cfg_;

  Phase phase_ = Phase::ScanRotate;
  std::deque<EnvAction> pending_;
  std::optional<Pose> target_pose_;
  std::optional<Cell> nav_target_;
  int cycles_left_ = 0;
  bool pose_resampled_ = false;
  std::set<Cell> bumped_;
  int blocked_streak_ = 0;
  int support_missing_streak_ = 0;
  std::optional<Cell> last_move_target_;
};

}  // namespace hlsm
