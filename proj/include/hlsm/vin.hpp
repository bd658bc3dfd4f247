#pragma once

#include <stdexcept>
#include <vector>

#include "hlsm/core_ops.hpp"
#include "hlsm/types.hpp"

namespace hlsm {

// Parameter-free value-iteration grid planner for NavigateTo.
//
// Backup convention: synchronous finite-horizon sweeps from V = 0. Rewards
// are collected on the state an action is taken in; obstacle/goal states are
// terminal and yield their entry reward once, with zero continuation. The
// continuation value of a non-terminal successor is discounted, terminal
// entry rewards are not, so a cell adjacent to the goal scores exactly the
// goal reward for the approaching action while longer routes decay strictly
// with distance (undiscounted backups tie every goal-connected action at 1.0
// and the tie-broken greedy policy never makes progress).
struct VinConfig {
  int iterations = 122;
  double epsilon = 0.08;  // probability the intended move is replaced by a uniform neighbor step
  double discount = 0.99;
  double reward_obstacle = -0.9;
  double reward_goal = 1.0;
  double reward_unobserved = -0.02;
  double reward_stop = 0.001;
  double obstacle_height_min = 0.0;   // meters
  double obstacle_height_max = 1.75;  // meters

  void validate() const {
    if (iterations < 1) throw ConfigError("vin iterations must be >= 1");
    if (epsilon < 0 || epsilon >= 1) throw ConfigError("vin epsilon must be in [0, 1)");
  }
};

// Per-cell binary attributes of the navigation MDP.
struct VinGrid {
  Grid2<uint8_t> obstacle;
  Grid2<uint8_t> unobserved;
  Grid2<uint8_t> goal;

  int nx() const { return obstacle.nx(); }
  int ny() const { return obstacle.ny(); }

  static VinGrid zeros(int nx, int ny) {
    return {Grid2<uint8_t>(nx, ny, 0), Grid2<uint8_t>(nx, ny, 0), Grid2<uint8_t>(nx, ny, 0)};
  }
};

enum class VinAction : int { North = 0, East = 1, South = 2, West = 3, Stop = 4 };
inline constexpr int kNumVinActions = 5;

inline const char* vin_action_name(VinAction a) {
  switch (a) {
    case VinAction::North: return "North";
    case VinAction::East: return "East";
    case VinAction::South: return "South";
    case VinAction::West: return "West";
    case VinAction::Stop: return "Stop";
  }
  return "?";
}

// Action-value table over {North, East, South, West, Stop}.
class QFunction {
 public:
  QFunction() = default;
  QFunction(int nx, int ny) : nx_(nx), ny_(ny), v_(static_cast<size_t>(nx) * ny * kNumVinActions, 0.0) {}

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double& at(int x, int y, VinAction a) {
    return v_[(static_cast<size_t>(x) * ny_ + y) * kNumVinActions + static_cast<int>(a)];
  }
  double at(int x, int y, VinAction a) const {
    return v_[(static_cast<size_t>(x) * ny_ + y) * kNumVinActions + static_cast<int>(a)];
  }
  const std::vector<double>& data() const { return v_; }

 private:
  int nx_ = 0, ny_ = 0;
  std::vector<double> v_;
};

// Height slab used for obstacle tagging: voxel layers whose extent lies
// inside [min, max).
inline int obstacle_z_limit(const VinConfig& vcfg, const GridConfig& gcfg) {
  const int zmax = static_cast<int>(std::floor(vcfg.obstacle_height_max / gcfg.voxel_size + 1e-9));
  return std::min(zmax, gcfg.dims_z);
}

// True when the belief map shows an obstacle-class voxel above the presence
// threshold anywhere in the column's height slab.
inline bool column_has_obstacle(const StateRepr& state, const VinConfig& vcfg,
                                const GridConfig& gcfg, int x, int y) {
  const int zlim = obstacle_z_limit(vcfg, gcfg);
  for (int z = 0; z < zlim; ++z)
    for (int c = 0; c < gcfg.num_classes(); ++c)
      if (state.semantic.at(x, y, z, c) > kClassPresenceThreshold &&
          gcfg.classes.has_affordance(c, Affordance::Obstacle))
        return true;
  return false;
}

// Tags every cell of the planner MDP from the current belief map and goal.
inline VinGrid build_vin_grid(const StateRepr& state, Cell goal, const VinConfig& vcfg,
                              const GridConfig& gcfg) {
  if (goal.x < 0 || goal.x >= gcfg.dims_x || goal.y < 0 || goal.y >= gcfg.dims_y)
    throw std::out_of_range("vin goal out of bounds");
  VinGrid g = VinGrid::zeros(gcfg.dims_x, gcfg.dims_y);
  for (int x = 0; x < gcfg.dims_x; ++x) {
    for (int y = 0; y < gcfg.dims_y; ++y) {
      if (column_has_obstacle(state, vcfg, gcfg, x, y)) g.obstacle.at(x, y) = 1;
      bool any_observed = false;
      for (int z = 0; z < gcfg.dims_z && !any_observed; ++z)
        any_observed = state.observed.at(x, y, z) != 0;
      if (!any_observed) g.unobserved.at(x, y) = 1;
    }
  }
  g.goal.at(goal.x, goal.y) = 1;
  return g;
}

inline QFunction value_iteration(const VinGrid& grid, const VinConfig& cfg) {
  cfg.validate();
  const int nx = grid.nx(), ny = grid.ny();
  const size_t n = static_cast<size_t>(nx) * ny;
  const auto flat = [ny](int x, int y) { return static_cast<size_t>(x) * ny + y; };

  std::vector<uint8_t> terminal(n);
  std::vector<double> entry_reward(n);  // reward collected in a state per step / on entry
  for (int x = 0; x < nx; ++x) {
    for (int y = 0; y < ny; ++y) {
      const size_t i = flat(x, y);
      terminal[i] = grid.obstacle.at(x, y) || grid.goal.at(x, y);
      entry_reward[i] = cfg.reward_obstacle * grid.obstacle.at(x, y) +
                        cfg.reward_goal * grid.goal.at(x, y) +
                        cfg.reward_unobserved * grid.unobserved.at(x, y);
    }
  }

  // Successor index per move action; off-grid moves stay in place.
  std::vector<size_t> succ(n * 4);
  for (int x = 0; x < nx; ++x) {
    for (int y = 0; y < ny; ++y) {
      const size_t i = flat(x, y);
      const Cell deltas[4] = {{0, 1}, {1, 0}, {0, -1}, {-1, 0}};  // N, E, S, W
      for (int a = 0; a < 4; ++a) {
        const int tx = x + deltas[a].x;
        const int ty = y + deltas[a].y;
        succ[i * 4 + a] = (tx >= 0 && tx < nx && ty >= 0 && ty < ny) ? flat(tx, ty) : i;
      }
    }
  }

  // vcont holds the continuation value of landing in a state: the fixed entry
  // reward for terminals, the discounted best Q otherwise.
  std::vector<double> vcont(n), vcont_next(n);
  for (size_t i = 0; i < n; ++i) vcont[i] = terminal[i] ? entry_reward[i] : 0.0;

  QFunction q(nx, ny);
  for (int sweep = 0; sweep < cfg.iterations; ++sweep) {
    for (int x = 0; x < nx; ++x) {
      for (int y = 0; y < ny; ++y) {
        const size_t i = flat(x, y);
        if (terminal[i]) continue;
        const double base = entry_reward[i];
        double noise_sum = 0.0;
        for (int a = 0; a < 4; ++a) noise_sum += vcont[succ[i * 4 + a]];
        double best = base + cfg.reward_stop;  // Stop terminates with its bonus
        q.at(x, y, VinAction::Stop) = best;
        for (int a = 0; a < 4; ++a) {
          const double expected = (1.0 - cfg.epsilon) * vcont[succ[i * 4 + a]] +
                                  (cfg.epsilon / 4.0) * noise_sum;
          const double qa = base + expected;
          q.at(x, y, static_cast<VinAction>(a)) = qa;
          best = std::max(best, qa);
        }
        vcont_next[i] = cfg.discount * best;
      }
    }
    for (size_t i = 0; i < n; ++i)
      if (!terminal[i]) vcont[i] = vcont_next[i];
  }

  // Terminal states: the episode ends on entry, so every action shows the
  // entry reward; Stop additionally collects its bonus, making it the greedy
  // choice on goal/obstacle cells.
  for (int x = 0; x < nx; ++x) {
    for (int y = 0; y < ny; ++y) {
      const size_t i = flat(x, y);
      if (!terminal[i]) continue;
      for (int a = 0; a < 4; ++a) q.at(x, y, static_cast<VinAction>(a)) = entry_reward[i];
      q.at(x, y, VinAction::Stop) = entry_reward[i] + cfg.reward_stop;
    }
  }
  return q;
}

// Arg-max action; ties break in the order North, East, South, West, Stop.
inline VinAction greedy_action(const QFunction& q, Cell cell) {
  if (cell.x < 0 || cell.x >= q.nx() || cell.y < 0 || cell.y >= q.ny())
    throw std::out_of_range("greedy_action cell out of bounds");
  int best = 0;
  for (int a = 1; a < kNumVinActions; ++a)
    if (q.at(cell.x, cell.y, static_cast<VinAction>(a)) >
        q.at(cell.x, cell.y, static_cast<VinAction>(best)))
      best = a;
  return static_cast<VinAction>(best);
}

// Planner move -> environment action, given the agent heading: matching
// heading moves ahead, the left neighbor rotates left, everything else
// rotates right.
inline EnvAction map_action(Yaw heading, VinAction action) {
  if (action == VinAction::Stop) throw std::invalid_argument("Stop is handled by the caller");
  const int h = static_cast<int>(heading);
  const int a = static_cast<int>(action);
  if (a == h) return EnvAction::nav(EnvAction::Kind::MoveAhead);
  if (a == (h + 3) % 4) return EnvAction::nav(EnvAction::Kind::RotateLeft);
  return EnvAction::nav(EnvAction::Kind::RotateRight);
}

inline Cell vin_move(Cell c, VinAction a) {
  switch (a) {
    case VinAction::North: return {c.x, c.y + 1};
    case VinAction::East: return {c.x + 1, c.y};
    case VinAction::South: return {c.x, c.y - 1};
    case VinAction::West: return {c.x - 1, c.y};
    case VinAction::Stop: return c;
  }
  return c;
}

}  // namespace hlsm
