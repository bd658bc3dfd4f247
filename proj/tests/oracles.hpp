#pragma once

// Independent reference implementations used to derive expected test values.
// These deliberately share no code with the library paths they check.

#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <vector>

#include "hlsm/types.hpp"
#include "hlsm/vin.hpp"

namespace hlsm_test {

// Dijkstra over the 4-connected free-cell graph (unit edge weights).
inline std::optional<int> dijkstra_distance(const hlsm::Grid2<uint8_t>& obstacle,
                                            hlsm::Cell start, hlsm::Cell goal) {
  const int nx = obstacle.nx(), ny = obstacle.ny();
  if (obstacle.at(start.x, start.y) || obstacle.at(goal.x, goal.y)) return std::nullopt;
  std::vector<int> dist(static_cast<size_t>(nx) * ny, std::numeric_limits<int>::max());
  using Item = std::pair<int, std::pair<int, int>>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[start.x * ny + start.y] = 0;
  pq.push({0, {start.x, start.y}});
  while (!pq.empty()) {
    const auto [d, cell] = pq.top();
    pq.pop();
    const auto [x, y] = cell;
    if (d > dist[x * ny + y]) continue;
    if (x == goal.x && y == goal.y) return d;
    const int dx[4] = {0, 0, 1, -1};
    const int dy[4] = {1, -1, 0, 0};
    for (int i = 0; i < 4; ++i) {
      const int tx = x + dx[i], ty = y + dy[i];
      if (tx < 0 || tx >= nx || ty < 0 || ty >= ny || obstacle.at(tx, ty)) continue;
      if (d + 1 < dist[tx * ny + ty]) {
        dist[tx * ny + ty] = d + 1;
        pq.push({d + 1, {tx, ty}});
      }
    }
  }
  return std::nullopt;
}

// Dense finite-horizon value iteration over explicit transition lists.
// Same backup convention as the planner, written independently: rewards on
// the state acted in, obstacle/goal absorbing with undiscounted entry reward,
// non-terminal continuation discounted, Stop exempt from transition noise.
inline hlsm::QFunction oracle_value_iteration(const hlsm::VinGrid& grid,
                                              const hlsm::VinConfig& cfg) {
  const int nx = grid.nx(), ny = grid.ny();
  struct StateInfo {
    bool terminal;
    double reward;
  };
  std::vector<std::vector<StateInfo>> info(nx, std::vector<StateInfo>(ny));
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y)
      info[x][y] = {grid.obstacle.at(x, y) > 0 || grid.goal.at(x, y) > 0,
                    -0.9 * grid.obstacle.at(x, y) + 1.0 * grid.goal.at(x, y) -
                        0.02 * grid.unobserved.at(x, y)};

  const auto clamp_move = [&](int x, int y, int a) {
    static const int mdx[4] = {0, 1, 0, -1};
    static const int mdy[4] = {1, 0, -1, 0};
    const int tx = x + mdx[a], ty = y + mdy[a];
    if (tx < 0 || tx >= nx || ty < 0 || ty >= ny) return std::pair<int, int>{x, y};
    return std::pair<int, int>{tx, ty};
  };

  // Explicit per-(state, action) transition distributions, merged by target.
  std::vector<std::vector<std::array<std::map<std::pair<int, int>, double>, 4>>> trans(
      nx, std::vector<std::array<std::map<std::pair<int, int>, double>, 4>>(ny));
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y)
      for (int a = 0; a < 4; ++a) {
        auto& dist = trans[x][y][a];
        dist[clamp_move(x, y, a)] += 1.0 - cfg.epsilon;
        for (int n = 0; n < 4; ++n) dist[clamp_move(x, y, n)] += cfg.epsilon / 4.0;
      }

  std::vector<std::vector<double>> v(nx, std::vector<double>(ny, 0.0));
  hlsm::QFunction q(nx, ny);
  for (int sweep = 0; sweep < cfg.iterations; ++sweep) {
    std::vector<std::vector<double>> v_next = v;
    for (int x = 0; x < nx; ++x) {
      for (int y = 0; y < ny; ++y) {
        if (info[x][y].terminal) continue;
        const double base = info[x][y].reward;
        double best = base + cfg.reward_stop;
        q.at(x, y, hlsm::VinAction::Stop) = best;
        for (int a = 0; a < 4; ++a) {
          double expect = 0.0;
          for (const auto& [target, p] : trans[x][y][a]) {
            const auto& ti = info[target.first][target.second];
            expect += p * (ti.terminal ? ti.reward : cfg.discount * v[target.first][target.second]);
          }
          const double qa = base + expect;
          q.at(x, y, static_cast<hlsm::VinAction>(a)) = qa;
          best = std::max(best, qa);
        }
        v_next[x][y] = best;
      }
    }
    v = std::move(v_next);
  }
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y) {
      if (!info[x][y].terminal) continue;
      for (int a = 0; a < 4; ++a) q.at(x, y, static_cast<hlsm::VinAction>(a)) = info[x][y].reward;
      q.at(x, y, hlsm::VinAction::Stop) = info[x][y].reward + cfg.reward_stop;
    }
  return q;
}

// Direct recount of the interaction-history tensor from a subgoal list.
inline hlsm::SubgoalHistoryTensor brute_force_history(const std::vector<hlsm::Subgoal>& goals,
                                                      const hlsm::GridConfig& cfg) {
  hlsm::SubgoalHistoryTensor t(hlsm::kNumInteractionTypes, cfg.dims_x, cfg.dims_y, 0);
  for (const auto& g : goals) {
    for (int x = 0; x < cfg.dims_x; ++x) {
      for (int y = 0; y < cfg.dims_y; ++y) {
        double zmax = 0.0;
        for (int z = 0; z < cfg.dims_z; ++z) zmax = std::max(zmax, g.mask.at(x, y, z));
        if (zmax > 0.5) t.at(static_cast<int>(g.stype), x, y) += 1;
      }
    }
  }
  return t;
}

}  // namespace hlsm_test
