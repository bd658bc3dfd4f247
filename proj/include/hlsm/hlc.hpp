#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <optional>
#include <vector>

#include "hlsm/core_ops.hpp"
#include "hlsm/instruction.hpp"
#include "hlsm/rng.hpp"
#include "hlsm/types.hpp"

namespace hlsm {

// One template entry: what to do and to which class. avoid_used marks steps
// that must ground to an instance not interacted with before (the second
// fetch of a pick-two task); other steps may legitimately revisit one.
struct SubgoalStep {
  SubgoalType stype;
  int arg_class;
  bool avoid_used = false;

  friend bool operator==(const SubgoalStep&, const SubgoalStep&) = default;
};

// A past emission and whether the low-level controller completed it.
struct SubgoalAttempt {
  Subgoal goal;
  bool passed = false;
};

// Subgoal templates, one step list per task type plus a prologue for sliced
// tasks. Steps name either a task slot (object/receptacle/intermediate) or a
// fixed class. The standard set is built in; the same table loads from a
// config file so templates can be tuned without a rebuild.
class TaskTemplates {
 public:
  struct Step {
    SubgoalType stype;
    std::string arg;  // "object", "receptacle", "intermediate", or a class name
    bool avoid_used = false;

    friend bool operator==(const Step&, const Step&) = default;
  };

  const std::vector<Step>& steps_for(TaskType t) const {
    auto it = templates_.find(task_type_name(t));
    if (it == templates_.end())
      throw ConfigError(std::string("no template for task type ") + task_type_name(t));
    return it->second;
  }
  const std::vector<Step>& sliced_prologue() const { return prologue_; }

  static TaskTemplates builtin() {
    TaskTemplates t;
    using S = SubgoalType;
    t.prologue_ = {{S::PickUp, "Knife"}, {S::Slice, "object"}, {S::Put, "Sink"}};
    t.templates_["PickAndPlace"] = {{S::PickUp, "object"}, {S::Put, "receptacle"}};
    t.templates_["PickTwoAndPlace"] = {{S::PickUp, "object"},
                                       {S::Put, "receptacle"},
                                       {S::PickUp, "object", /*avoid_used=*/true},
                                       {S::Put, "receptacle"}};
    t.templates_["Examine"] = {{S::PickUp, "object"}, {S::ToggleOn, "FloorLamp"}};
    t.templates_["CleanAndPlace"] = {{S::PickUp, "object"},    {S::Put, "Sink"},
                                     {S::ToggleOn, "Faucet"},  {S::ToggleOff, "Faucet"},
                                     {S::PickUp, "object"},    {S::Put, "receptacle"}};
    t.templates_["HeatAndPlace"] = {
        {S::PickUp, "object"},      {S::Open, "Microwave"},      {S::Put, "Microwave"},
        {S::Close, "Microwave"},    {S::ToggleOn, "Microwave"},  {S::ToggleOff, "Microwave"},
        {S::Open, "Microwave"},     {S::PickUp, "object"},       {S::Close, "Microwave"},
        {S::Put, "receptacle"}};
    t.templates_["CoolAndPlace"] = {{S::PickUp, "object"}, {S::Open, "Fridge"},
                                    {S::Put, "Fridge"},    {S::Close, "Fridge"},
                                    {S::Open, "Fridge"},   {S::PickUp, "object"},
                                    {S::Close, "Fridge"},  {S::Put, "receptacle"}};
    t.templates_["StackAndPlace"] = {{S::PickUp, "intermediate"},
                                     {S::Put, "object"},
                                     {S::PickUp, "object"},
                                     {S::Put, "receptacle"}};
    return t;
  }

  // Config format ('#' comments):
  //   HLSMTEMPLATES v1
  //   template <TaskType> <Type>:<slot-or-Class>[!fresh]...
  //   sliced_prologue <Type>:<slot-or-Class>...
  static TaskTemplates parse(std::istream& in) {
    TaskTemplates t;
    std::string line;
    int lineno = 0;
    bool header = false;
    const auto parse_step = [&](const std::string& tok) {
      Step s;
      std::string body = tok;
      if (body.size() > 6 && body.substr(body.size() - 6) == "!fresh") {
        s.avoid_used = true;
        body.resize(body.size() - 6);
      }
      const auto colon = body.find(':');
      if (colon == std::string::npos)
        throw ConfigError("line " + std::to_string(lineno) + ": step needs Type:Arg, got '" + tok + "'");
      const std::string type_name = body.substr(0, colon);
      s.arg = body.substr(colon + 1);
      bool found = false;
      for (int i = 0; i < kNumInteractionTypes; ++i) {
        if (type_name == subgoal_type_name(static_cast<SubgoalType>(i))) {
          s.stype = static_cast<SubgoalType>(i);
          found = true;
        }
      }
      if (!found || s.arg.empty())
        throw ConfigError("line " + std::to_string(lineno) + ": bad step '" + tok + "'");
      return s;
    };
    while (std::getline(in, line)) {
      ++lineno;
      std::vector<std::string> toks;
      std::string cur;
      for (char c : line) {
        if (c == '#') break;
        if (std::isspace(static_cast<unsigned char>(c))) {
          if (!cur.empty()) toks.push_back(std::move(cur)), cur.clear();
        } else {
          cur += c;
        }
      }
      if (!cur.empty()) toks.push_back(cur);
      if (toks.empty()) continue;
      if (!header) {
        if (toks.size() != 2 || toks[0] != "HLSMTEMPLATES" || toks[1] != "v1")
          throw ConfigError("line 1: expected header 'HLSMTEMPLATES v1'");
        header = true;
        continue;
      }
      if (toks[0] == "template") {
        if (toks.size() < 3)
          throw ConfigError("line " + std::to_string(lineno) + ": template <TaskType> steps...");
        if (!task_type_from_name(toks[1]))
          throw ConfigError("line " + std::to_string(lineno) + ": unknown task type '" + toks[1] + "'");
        std::vector<Step> steps;
        for (size_t i = 2; i < toks.size(); ++i) steps.push_back(parse_step(toks[i]));
        t.templates_[toks[1]] = std::move(steps);
      } else if (toks[0] == "sliced_prologue") {
        std::vector<Step> steps;
        for (size_t i = 1; i < toks.size(); ++i) steps.push_back(parse_step(toks[i]));
        t.prologue_ = std::move(steps);
      } else {
        throw ConfigError("line " + std::to_string(lineno) + ": unknown directive '" + toks[0] + "'");
      }
    }
    if (!header) throw ConfigError("empty templates config");
    return t;
  }

  static TaskTemplates load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open templates config: " + path);
    return parse(f);
  }

  friend bool operator==(const TaskTemplates&, const TaskTemplates&) = default;

 private:
  std::map<std::string, std::vector<Step>> templates_;
  std::vector<Step> prologue_;
};

// Resolves a task against the templates: slot names bind to the task's
// classes, everything else resolves through the class table, Stop terminates.
inline std::vector<SubgoalStep> plan_subgoals(const TaskSpec& task, const ClassTable& classes,
                                              const TaskTemplates& templates) {
  const auto resolve = [&](const std::string& arg) {
    if (arg == "object") return task.object_class;
    if (arg == "receptacle") return task.receptacle_class;
    if (arg == "intermediate") return task.intermediate_class;
    const auto c = classes.index_of(arg);
    if (!c) throw ConfigError("template references unknown class '" + arg + "'");
    return *c;
  };
  std::vector<SubgoalStep> steps;
  if (task.sliced)
    for (const auto& s : templates.sliced_prologue())
      steps.push_back({s.stype, resolve(s.arg), s.avoid_used});
  for (const auto& s : templates.steps_for(task.type))
    steps.push_back({s.stype, resolve(s.arg), s.avoid_used});
  steps.push_back({SubgoalType::Stop, kNoClass});
  return steps;
}

inline std::vector<SubgoalStep> plan_subgoals(const TaskSpec& task, const ClassTable& classes) {
  static const TaskTemplates kBuiltin = TaskTemplates::builtin();
  return plan_subgoals(task, classes, kBuiltin);
}

// Grounds an argument class to one object instance in the belief map:
// presence-thresholded voxels split into 6-connected components, components
// whose footprint was already interacted with are discarded (unless that
// discards everything, as when a template legitimately revisits the same
// receptacle), and the component whose centroid is nearest the agent wins.
// All-zero mask when the class is nowhere above threshold. The discard
// consults every interaction channel: a freshly placed object carries a Put
// count at its new footprint, which is what stops a repeat PickUp from
// grabbing it again in pick-two tasks.
//
// Plausibility ranking instead of hard filtering, since presence evidence
// can be polluted both ways (mis-segmented pixels plant ghost classes, depth
// quantization bleeds a surface's class into the voxel above it). A movable
// candidate resting on observed evidence outranks one floating in mid-air;
// a structural argument of a single stray voxel is never real furniture.
// Ranks only order the choice; a sole implausible candidate still grounds.
inline Mask3D select_instance_mask(const SemanticVoxelGrid& sem, const ObservabilityGrid& observed,
                                   int arg_class, const SubgoalHistoryTensor& history,
                                   SubgoalType stype, const Pose& pose, const ClassTable& classes,
                                   bool avoid_used = true) {
  (void)stype;
  const int nx = sem.nx(), ny = sem.ny(), nz = sem.nz();
  Mask3D out(nx, ny, nz, 0.0);
  if (arg_class == kNoClass) return out;

  const bool arg_structural = classes.has_affordance(arg_class, Affordance::Obstacle) ||
                              classes.has_affordance(arg_class, Affordance::Ground);
  const auto any_evidence = [&](int x, int y, int z) {
    for (int c = 0; c < classes.size(); ++c)
      if (sem.at(x, y, z, c) > kClassPresenceThreshold) return true;
    return false;
  };

  Grid3<int> comp(nx, ny, nz, -1);
  struct Component {
    std::vector<Voxel> voxels;
    Voxel min_voxel;
    double cx = 0, cy = 0;
    double strength = 0.0;
    bool used_before = false;
    bool plausible = true;
  };
  std::vector<Component> comps;

  for (int x = 0; x < nx; ++x) {
    for (int y = 0; y < ny; ++y) {
      for (int z = 0; z < nz; ++z) {
        if (sem.at(x, y, z, arg_class) <= kClassPresenceThreshold || comp.at(x, y, z) >= 0)
          continue;
        Component c;
        std::deque<Voxel> queue{{x, y, z}};
        comp.at(x, y, z) = static_cast<int>(comps.size());
        while (!queue.empty()) {
          const Voxel v = queue.front();
          queue.pop_front();
          c.voxels.push_back(v);
          const int d[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
          for (auto& dd : d) {
            const Voxel n{v.x + dd[0], v.y + dd[1], v.z + dd[2]};
            if (!comp.in_bounds(n) || comp.at(n) >= 0) continue;
            if (sem.at(n.x, n.y, n.z, arg_class) <= kClassPresenceThreshold) continue;
            comp.at(n) = static_cast<int>(comps.size());
            queue.push_back(n);
          }
        }
        std::sort(c.voxels.begin(), c.voxels.end());
        c.min_voxel = c.voxels.front();
        for (const Voxel& v : c.voxels) {
          c.cx += v.x;
          c.cy += v.y;
          c.strength = std::max(c.strength, sem.at(v.x, v.y, v.z, arg_class));
          for (int t = 0; t < kNumInteractionTypes; ++t)
            if (history.at(t, v.x, v.y) > 0) c.used_before = true;
        }
        c.cx /= c.voxels.size();
        c.cy /= c.voxels.size();
        if (arg_structural) {
          c.plausible = c.voxels.size() >= 2;
        } else {
          // nothing below contradicts support: the ground plane, mapped
          // evidence, or an unobserved voxel (an object occludes its own
          // support) all pass; observed empty air below marks a floater
          c.plausible = false;
          for (const Voxel& v : c.voxels) {
            if (v.z == 0 || any_evidence(v.x, v.y, v.z - 1) ||
                !observed.at(v.x, v.y, v.z - 1)) {
              c.plausible = true;
              break;
            }
          }
        }
        comps.push_back(std::move(c));
      }
    }
  }
  if (comps.empty()) return out;

  // lower rank wins: physically plausible, decisive evidence first; steps
  // that must not revisit an instance push used ones to the back
  const auto rank = [&](const Component& c) {
    return (avoid_used && c.used_before ? 4 : 0) + (c.plausible ? 0 : 2) +
           (c.strength >= 0.9 ? 0 : 1);
  };
  const auto dist = [&](const Component& k) {
    const double dx = k.cx - pose.x, dy = k.cy - pose.y;
    return dx * dx + dy * dy;
  };
  const Component* best = &comps.front();
  for (const auto& c : comps) {
    if (&c == best) continue;
    if (rank(c) != rank(*best)) {
      if (rank(c) < rank(*best)) best = &c;
      continue;
    }
    const double dc = dist(c), db = dist(*best);
    if (dc < db || (dc == db && c.min_voxel < best->min_voxel)) best = &c;
  }
  for (const Voxel& v : best->voxels) out.at(v) = 1.0;
  return out;
}

// Emits the next subgoal given the attempt history.
class SubgoalPolicy {
 public:
  virtual ~SubgoalPolicy() = default;
  virtual Subgoal next(const TaskSpec& task, const StateRepr& state,
                       const std::vector<SubgoalAttempt>& history, Rng& rng) = 0;
};

struct HlcConfig {
  int retry_budget = 3;         // counted re-emissions of a failed step before the alternate
  int uncounted_retry_cap = 12; // extra retries allowed for evaporated groundings
};

// Baseline policy: walks the task template, re-emitting a failed step up to
// the retry budget, then trying the argument's alternate class once, then
// giving up with Stop. Masks are grounded against the current belief; the
// history tensor counts only passed subgoals so retries can re-target the
// same instance.
//
// A failed attempt whose mask no longer has support in the current map was
// grounded on since-corrected evidence; such attempts do not count against
// the retry budget (up to a hard cap), so transient mis-segmentation cannot
// exhaust the step's real tries.
class TemplateSubgoalPolicy : public SubgoalPolicy {
 public:
  TemplateSubgoalPolicy(const GridConfig& cfg, HlcConfig hlc = {},
                        TaskTemplates templates = TaskTemplates::builtin())
      : cfg_(cfg), hlc_(hlc), templates_(std::move(templates)) {}

  Subgoal next(const TaskSpec& task, const StateRepr& state,
               const std::vector<SubgoalAttempt>& history, Rng&) override {
    const auto steps = plan_subgoals(task, cfg_.classes, templates_);
    size_t successes = 0;
    for (const auto& a : history) successes += a.passed ? 1 : 0;
    if (successes + 1 >= steps.size()) return Subgoal::stop(cfg_);  // template exhausted

    int trailing = 0, counted = 0;
    for (auto it = history.rbegin(); it != history.rend() && !it->passed; ++it) {
      ++trailing;
      if (mask_is_empty(it->goal.mask) ||
          mask_has_support(it->goal.mask, state.semantic, it->goal.arg_class))
        ++counted;
    }
    const int effective_fails =
        counted + std::max(0, trailing - counted - hlc_.uncounted_retry_cap);

    const SubgoalStep& step = steps[successes];
    int arg = step.arg_class;
    if (effective_fails > hlc_.retry_budget + 1) return Subgoal::stop(cfg_);
    if (effective_fails == hlc_.retry_budget + 1) {
      const auto alt = cfg_.classes.alternate_for(arg);
      if (!alt) return Subgoal::stop(cfg_);
      arg = *alt;
    }

    SubgoalHistoryTensor tensor = empty_history_tensor(cfg_);
    for (const auto& a : history)
      if (a.passed) tensor = update_history_tensor(tensor, a.goal);

    Subgoal g;
    g.stype = step.stype;
    g.arg_class = arg;
    g.mask = select_instance_mask(state.semantic, state.observed, arg, tensor, step.stype,
                                  state.pose, cfg_.classes, step.avoid_used);
    return g;
  }

 private:
  GridConfig cfg_;
  HlcConfig hlc_;
  TaskTemplates templates_;
};

}  // namespace hlsm
