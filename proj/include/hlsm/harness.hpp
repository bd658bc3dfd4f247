#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hlsm/hlc.hpp"
#include "hlsm/llc.hpp"
#include "hlsm/observation.hpp"
#include "hlsm/sim.hpp"
#include "hlsm/snapshot.hpp"
#include "hlsm/world.hpp"

namespace hlsm {

struct EpisodeConfig {
  int t_max = 1000;
  uint64_t seed = 0;
  NoiseConfig noise;
  SimConfig sim;
  ObsConfig obs;
  HlcConfig hlc;
  LlcConfig llc;
  int redraw_guard = 20;           // consecutive non-executable draws before a forced stop
  std::string export_maps_dir;     // empty = no snapshots
  bool snapshot_at_boundaries = true;

  void validate() const {
    if (t_max < 1) throw ConfigError("t_max must be >= 1");
  }
};

struct StepRecord {
  int t = 0;
  std::string action;
  int subgoal_index = 0;  // completed-subgoal counter at the time of the step
  Pose pose;              // pose after the action
  bool ok = false;
};

struct SubgoalRecord {
  int index = 0;  // emission order
  std::string stype;
  std::string arg;
  std::string outcome;  // "pass", "fail" or "stop"
};

struct EpisodeMetrics {
  bool success = false;
  double goal_condition_rate = 0.0;
  int gc_satisfied = 0;
  int gc_total = 0;
  int steps = 0;
  std::vector<std::string> subgoal_outcomes;  // "<Type>(<Arg>):<pass|fail|stop>" per emission
};

struct EpisodeTrace {
  std::vector<StepRecord> steps;
  std::vector<SubgoalRecord> subgoals;
  EpisodeMetrics metrics;
  bool hit_horizon = false;

  // Line-delimited records; byte-stable for a fixed scene and seed.
  void serialize(std::ostream& out) const {
    for (const auto& s : steps) {
      nlohmann::json j{{"t", s.t},
                       {"action", s.action},
                       {"k", s.subgoal_index},
                       {"pose", {s.pose.x, s.pose.y, yaw_name(s.pose.yaw), s.pose.pitch}},
                       {"ok", s.ok}};
      out << j.dump() << "\n";
    }
    for (const auto& g : subgoals) {
      nlohmann::json j{{"subgoal", g.index}, {"type", g.stype}, {"arg", g.arg}, {"outcome", g.outcome}};
      out << j.dump() << "\n";
    }
    nlohmann::json j{{"success", metrics.success},
                     {"gc", metrics.goal_condition_rate},
                     {"gc_satisfied", metrics.gc_satisfied},
                     {"gc_total", metrics.gc_total},
                     {"steps", metrics.steps},
                     {"hit_horizon", hit_horizon}};
    out << j.dump() << "\n";
  }
};

// Top-level execution loop: observe each step, keep a subgoal active, let the
// low-level controller emit one executable action per step, count Pass
// outcomes, end on the Stop subgoal or the horizon.
inline EpisodeTrace run_episode(const WorldState& world0, SubgoalPolicy& policy,
                                const EpisodeConfig& cfg) {
  cfg.validate();
  WorldState world = world0;
  StateRepr state = StateRepr::empty(world.grid);
  state.pose = world.agent;

  Rng policy_rng(cfg.seed);
  Rng noise_rng = Rng(cfg.seed).split(1);

  std::optional<Subgoal> active;
  std::unique_ptr<Llc> llc;
  std::vector<SubgoalAttempt> history;
  std::optional<bool> last_result;
  int pass_count = 0;
  int snapshot_idx = 0;
  bool stopped = false;

  EpisodeTrace trace;
  const auto snapshot = [&](const std::string& tag) {
    if (cfg.export_maps_dir.empty()) return;
    std::filesystem::create_directories(cfg.export_maps_dir);
    export_map_file(state, world.grid,
                    (std::filesystem::path(cfg.export_maps_dir) / ("map_" + tag + ".txt")).string());
  };
  const auto arg_name = [&](const Subgoal& g) {
    return g.arg_class == kNoClass ? std::string("None") : world.grid.classes.name(g.arg_class);
  };

  Observation obs = render(world, cfg.sim, cfg.noise, &noise_rng);

  for (int t = 0; t < cfg.t_max && !stopped; ++t) {
    state = observe(state, obs, active ? &*active : nullptr, world.camera, world.grid, cfg.obs);

    EnvAction action;
    bool have_action = false;
    int draws = 0;
    while (!have_action && !stopped) {
      if (!active) {
        Subgoal g = policy.next(world.task, state, history, policy_rng);
        if (g.is_stop()) {
          trace.subgoals.push_back({static_cast<int>(history.size()), "Stop", "None", "stop"});
          stopped = true;
          break;
        }
        active = std::move(g);
        llc = std::make_unique<Llc>(world.grid, world.camera, cfg.llc);
        last_result.reset();
      }
      const Llc::Output out = llc->step(*active, state, obs, last_result, policy_rng);
      if (out.kind == Llc::Output::Kind::Action) {
        action = out.action;
        have_action = true;
      } else {
        const bool passed = out.kind == Llc::Output::Kind::Pass;
        trace.subgoals.push_back({static_cast<int>(history.size()),
                                  subgoal_type_name(active->stype), arg_name(*active),
                                  passed ? "pass" : "fail"});
        history.push_back({std::move(*active), passed});
        if (passed) ++pass_count;
        active.reset();
        llc.reset();
        if (cfg.snapshot_at_boundaries) {
          char tag[16];
          std::snprintf(tag, sizeof(tag), "%04d", snapshot_idx++);
          snapshot(tag);
        }
        if (++draws > cfg.redraw_guard) stopped = true;  // livelock guard
      }
    }
    if (!have_action) break;

    auto [next_world, ok] = transition(world, action, cfg.sim);
    world = std::move(next_world);
    last_result = ok;
    trace.steps.push_back({t, action.name(), pass_count, world.agent, ok});
    obs = render(world, cfg.sim, cfg.noise, &noise_rng);
  }

  trace.hit_horizon = !stopped;
  const auto [sat, total] = goal_conditions(world.task, world);
  trace.metrics.gc_satisfied = sat;
  trace.metrics.gc_total = total;
  trace.metrics.goal_condition_rate = total > 0 ? static_cast<double>(sat) / total : 1.0;
  trace.metrics.success = sat == total;
  trace.metrics.steps = static_cast<int>(trace.steps.size());
  for (const auto& g : trace.subgoals)
    trace.metrics.subgoal_outcomes.push_back(g.stype + "(" + g.arg + "):" + g.outcome);
  snapshot("final");
  return trace;
}

struct SceneResult {
  std::string scene;
  uint64_t seed = 0;
  bool loaded = false;
  std::string error;  // set when loading failed
  EpisodeMetrics metrics;
};

struct BatchSummary {
  std::vector<SceneResult> results;
  double success_rate = 0.0;        // SR over loadable scenes
  double goal_condition_rate = 0.0; // mean per-episode GC

  nlohmann::json to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : results) {
      nlohmann::json j{{"scene", r.scene}, {"seed", r.seed}};
      if (!r.loaded) {
        j["error"] = r.error;
      } else {
        j["success"] = r.metrics.success;
        j["gc"] = r.metrics.goal_condition_rate;
        j["steps"] = r.metrics.steps;
      }
      out.push_back(j);
    }
    return out;
  }
};

// Runs every scene independently; load failures become per-scene error
// records instead of aborting the batch.
inline BatchSummary eval_batch(const std::vector<std::string>& scene_paths,
                               const ClassTable& classes, const EpisodeConfig& cfg,
                               const TaskTemplates& templates = TaskTemplates::builtin()) {
  BatchSummary summary;
  int solved = 0, evaluated = 0;
  double gc_sum = 0.0;
  for (const std::string& path : scene_paths) {
    SceneResult r;
    r.scene = path;
    r.seed = cfg.seed;
    try {
      const WorldState world = load_scene_file(path, classes);
      TemplateSubgoalPolicy policy(world.grid, cfg.hlc, templates);
      r.metrics = run_episode(world, policy, cfg).metrics;
      r.loaded = true;
      ++evaluated;
      solved += r.metrics.success ? 1 : 0;
      gc_sum += r.metrics.goal_condition_rate;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    summary.results.push_back(std::move(r));
  }
  summary.success_rate = evaluated > 0 ? static_cast<double>(solved) / evaluated : 0.0;
  summary.goal_condition_rate = evaluated > 0 ? gc_sum / evaluated : 0.0;
  return summary;
}

}  // namespace hlsm
