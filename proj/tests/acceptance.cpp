// Acceptance suite: one criterion per function, one pass/fail line each.
// Run all criteria, `--only NAME` for one, `--list` to enumerate.

#include <chrono>
#include <cstring>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "hlsm/harness.hpp"
#include "hlsm/image_io.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace hlsm;
using hlsm_test::cls;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const std::vector<std::string>& reference_scenes() {
  static const std::vector<std::string> scenes = {
      "pick_and_place.scene", "pick_two.scene",       "examine.scene",
      "heat_and_place.scene", "cool_and_place.scene", "clean_and_place.scene",
      "stack_and_place.scene"};
  return scenes;
}

// --- criterion: vin-shortest-path ---------------------------------------
// 100 seeded random 61x61 grids, obstacle density 20-35%, reachable goals
// within the planner horizon: the epsilon=0 greedy policy path length equals
// the Dijkstra shortest path, 100/100, under 60 s.
Check vin_shortest_path() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  VinConfig cfg;
  cfg.epsilon = 0.0;
  Rng rng(20240901);
  int done = 0;
  while (done < 100) {
    const int n = 61;
    const double density = 0.20 + 0.15 * rng.next_double();
    VinGrid grid = VinGrid::zeros(n, n);
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) grid.obstacle.at(x, y) = rng.bernoulli(density) ? 1 : 0;
    const Cell start{static_cast<int>(rng.next_below(n)), static_cast<int>(rng.next_below(n))};
    const Cell goal{static_cast<int>(rng.next_below(n)), static_cast<int>(rng.next_below(n))};
    if (start == goal || grid.obstacle.at(start.x, start.y) || grid.obstacle.at(goal.x, goal.y))
      continue;
    const auto want = hlsm_test::dijkstra_distance(grid.obstacle, start, goal);
    if (!want || *want > 120) continue;  // unreachable or beyond the 122-sweep horizon
    grid.goal.at(goal.x, goal.y) = 1;

    const QFunction q = value_iteration(grid, cfg);
    Cell cur = start;
    int steps = 0;
    while (cur != goal && steps <= 4 * n * n) {
      const VinAction a = greedy_action(q, cur);
      if (a == VinAction::Stop) break;
      const Cell next = vin_move(cur, a);
      if (next == cur || grid.obstacle.at(next.x, next.y)) break;
      cur = next;
      ++steps;
    }
    c.expect(cur == goal && steps == *want,
             "grid " + std::to_string(done) + ": walked " + std::to_string(steps) + " vs dijkstra " +
                 std::to_string(*want));
    if (!c.ok) return c;
    ++done;
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 60.0, "suite took " + std::to_string(secs) + " s");
  if (c.ok) c.detail = "100/100 shortest, " + std::to_string(secs) + " s";
  return c;
}

// --- criterion: vin-numerical-oracle -------------------------------------
// 50 random grids up to 7x7 with epsilon = 0.08: Q matches an independent
// dense policy-evaluation oracle within 1e-9 per entry.
Check vin_numerical_oracle() {
  Check c;
  VinConfig cfg;
  cfg.epsilon = 0.08;
  Rng rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int nx = 2 + static_cast<int>(rng.next_below(6));  // 2..7
    const int ny = 2 + static_cast<int>(rng.next_below(6));
    VinGrid grid = VinGrid::zeros(nx, ny);
    for (int x = 0; x < nx; ++x)
      for (int y = 0; y < ny; ++y) {
        grid.obstacle.at(x, y) = rng.bernoulli(0.25) ? 1 : 0;
        grid.unobserved.at(x, y) = rng.bernoulli(0.25) ? 1 : 0;
      }
    grid.goal.at(rng.next_below(nx), rng.next_below(ny)) = 1;
    const QFunction got = value_iteration(grid, cfg);
    const QFunction want = hlsm_test::oracle_value_iteration(grid, cfg);
    for (size_t i = 0; i < got.data().size(); ++i)
      worst = std::max(worst, std::abs(got.data()[i] - want.data()[i]));
  }
  c.expect(worst <= 1e-9, "max |dQ| = " + std::to_string(worst));
  std::ostringstream d;
  d << "max |dQ| = " << worst;
  if (c.ok) c.detail = d.str();
  return c;
}

// --- criterion: mapping-roundtrip ----------------------------------------
// Oracle-rendered scans of every reference scene: the arg-max class of every
// observed voxel equals the simulator ground truth, and observability is
// pointwise monotone over the scan.
Check mapping_roundtrip() {
  Check c;
  for (const auto& scene : reference_scenes()) {
    const WorldState base =
        load_scene_file(hlsm_test::scene_path(scene.c_str()), hlsm_test::classes());
    StateRepr state = StateRepr::empty(base.grid);
    const ObsConfig ocfg;

    // scripted scan: a five-point tour of the room at every heading and two
    // pitches; poses on blocked cells are skipped
    std::vector<Cell> stops = {{6, 6}, {3, 3}, {3, 9}, {9, 3}, {9, 9}};
    for (const Cell& cell : stops) {
      if (base.column_blocked(cell.x, cell.y, 7)) continue;
      for (int yi = 0; yi < 4; ++yi) {
        for (int pitch : {30, 60}) {
          WorldState w = base;
          w.agent = {cell.x, cell.y, static_cast<Yaw>(yi), pitch};
          const Observation obs = render(w);
          const ObservabilityGrid before = state.observed;
          state = observe(state, obs, nullptr, w.camera, w.grid, ocfg);
          for (size_t i = 0; i < before.data().size(); ++i)
            c.expect(state.observed.data()[i] >= before.data()[i], scene + ": observability lost");
        }
      }
    }

    int observed = 0;
    for (int x = 0; x < base.grid.dims_x && c.ok; ++x)
      for (int y = 0; y < base.grid.dims_y && c.ok; ++y)
        for (int z = 0; z < base.grid.dims_z && c.ok; ++z) {
          if (!state.observed.at(x, y, z)) continue;
          ++observed;
          const int want = base.sensed_class(x, y, z);
          const int got = state.semantic.argmax_class(x, y, z);
          std::ostringstream msg;
          msg << scene << ": voxel (" << x << "," << y << "," << z << ") mapped "
              << base.grid.classes.name(got) << " vs gt " << base.grid.classes.name(want);
          c.expect(got == want, msg.str());
        }
    c.expect(observed > 1000, scene + ": scan observed too little");
    if (!c.ok) return c;
  }
  if (c.ok) c.detail = "7 scenes, 100% argmax match";
  return c;
}

// --- criterion: accumulation-algebra --------------------------------------
// >= 1000 random cases: the accumulation equation holds bit-exactly,
// observability is monotone, identical frames are idempotent.
Check accumulation_algebra() {
  Check c;
  Rng rng(4242);
  for (int trial = 0; trial < 1000 && c.ok; ++trial) {
    const int nx = 2 + static_cast<int>(rng.next_below(4));
    const int ny = 2 + static_cast<int>(rng.next_below(4));
    const int nz = 1 + static_cast<int>(rng.next_below(3));
    const int C = 1 + static_cast<int>(rng.next_below(4));
    SemanticVoxelGrid prev_sem(nx, ny, nz, C), new_sem(nx, ny, nz, C);
    ObservabilityGrid prev_obs(nx, ny, nz, 0), new_obs(nx, ny, nz, 0);
    for (auto& v : prev_sem.data()) v = rng.next_double();
    for (auto& v : new_sem.data()) v = rng.next_double();
    for (auto& v : prev_obs.data()) v = rng.bernoulli(0.5) ? 1 : 0;
    for (auto& v : new_obs.data()) v = rng.bernoulli(0.5) ? 1 : 0;

    const auto [sem, obs] = accumulate(prev_sem, prev_obs, new_sem, new_obs);
    for (int x = 0; x < nx; ++x)
      for (int y = 0; y < ny; ++y)
        for (int z = 0; z < nz; ++z) {
          const double o = new_obs.at(x, y, z);
          for (int ch = 0; ch < C; ++ch) {
            const double want = new_sem.at(x, y, z, ch) * o + prev_sem.at(x, y, z, ch) * (1.0 - o);
            c.expect(sem.at(x, y, z, ch) == want, "accumulation equation violated");
          }
          c.expect(obs.at(x, y, z) >= prev_obs.at(x, y, z), "observability not monotone");
        }
    const auto [sem2, obs2] = accumulate(sem, obs, new_sem, new_obs);
    c.expect(sem2 == sem && obs2 == obs, "identical frame not idempotent");
  }
  if (c.ok) c.detail = "1000 random cases";
  return c;
}

// --- criterion: end-to-end -------------------------------------------------
// Oracle perception, zero noise, template policy: all 7 reference scenes
// solve with SR = GC = 1.0 inside T_max = 1000, each under 30 s.
Check end_to_end() {
  Check c;
  for (const auto& scene : reference_scenes()) {
    const auto t0 = std::chrono::steady_clock::now();
    const WorldState w =
        load_scene_file(hlsm_test::scene_path(scene.c_str()), hlsm_test::classes());
    EpisodeConfig cfg;
    cfg.seed = 0;
    TemplateSubgoalPolicy policy(w.grid, cfg.hlc);
    const EpisodeTrace trace = run_episode(w, policy, cfg);
    const double secs = seconds_since(t0);
    std::ostringstream msg;
    msg << scene << ": success=" << trace.metrics.success
        << " gc=" << trace.metrics.goal_condition_rate << " steps=" << trace.metrics.steps << " ("
        << secs << " s)";
    c.expect(trace.metrics.success && trace.metrics.goal_condition_rate == 1.0, msg.str());
    c.expect(secs < 30.0, msg.str());
    if (!c.ok) return c;
  }
  if (c.ok) c.detail = "7/7 scenes solved";
  return c;
}

// --- criterion: end-to-end-perturbed ----------------------------------------
// Depth sigma 0.05 m and 2% segmentation label flips must keep SR >= 5/7,
// exercising the confidence mask and the retry paths.
Check end_to_end_perturbed() {
  Check c;
  int solved = 0;
  std::ostringstream detail;
  for (const auto& scene : reference_scenes()) {
    const WorldState w =
        load_scene_file(hlsm_test::scene_path(scene.c_str()), hlsm_test::classes());
    EpisodeConfig cfg;
    cfg.seed = 1;
    cfg.noise.depth_sigma = 0.05;
    cfg.noise.seg_flip_prob = 0.02;
    TemplateSubgoalPolicy policy(w.grid, cfg.hlc);
    const EpisodeTrace trace = run_episode(w, policy, cfg);
    solved += trace.metrics.success ? 1 : 0;
    detail << scene[0] << (trace.metrics.success ? "+" : "-");
  }
  c.expect(solved >= 5, "solved " + std::to_string(solved) + "/7 [" + detail.str() + "]");
  if (c.ok) c.detail = "solved " + std::to_string(solved) + "/7 under noise";
  return c;
}

// --- criterion: confidence-mask ---------------------------------------------
// 10,000 random pixels: the implementation equals direct evaluation of the
// two-clause formula with c1 = 0.3, c2 = 1.0.
Check confidence_mask_formula() {
  Check c;
  Rng rng(555);
  const ObsConfig ocfg;  // c1 = 0.3, c2 = 1.0
  const int C = 6;
  const int pixels = 10000;
  const int W = 100, H = 100;
  DepthImage depth(W, H, 50, 0.1);
  SegImage seg(W, H, C);
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) {
      // random sparse distribution over a random support
      const int spikes = 1 + static_cast<int>(rng.next_below(4));
      double total = 0.0;
      for (int s = 0; s < spikes; ++s) {
        const double m = rng.next_double();
        depth.at(u, v, rng.next_below(50)) += m;
        total += m;
      }
      for (int b = 0; b < 50; ++b) depth.at(u, v, b) /= total;
      const int argc = static_cast<int>(rng.next_below(C));
      seg.at(u, v, argc) = 0.4 + 0.6 * rng.next_double();
    }
  const int arg_class = 3;
  const ConfidenceMask got = confidence_mask(depth, seg, arg_class, ocfg);

  int checked = 0;
  for (int v = 0; v < H && c.ok; ++v)
    for (int u = 0; u < W && c.ok; ++u) {
      // direct evaluation: W90 by exhaustive interval search, E by summation
      double e = 0.0;
      for (int b = 0; b < 50; ++b) e += depth.at(u, v, b) * (b * 0.1);
      double w90 = 49 * 0.1;
      for (int i = 0; i < 50; ++i) {
        double mass = 0.0;
        for (int j = i; j < 50; ++j) {
          mass += depth.at(u, v, j);
          if (mass >= 0.9 - 1e-12) {
            w90 = std::min(w90, (j - i) * 0.1);
            break;
          }
        }
      }
      const bool want =
          (w90 < 0.3 * e) || ((w90 < 1.0 * e) && (seg.at(u, v, arg_class) > 0.5));
      c.expect(got.at(u, v) == (want ? 1 : 0), "pixel disagrees with the formula");
      ++checked;
    }
  c.expect(checked == pixels, "checked fewer pixels than promised");
  if (c.ok) c.detail = "10000 pixels match";
  return c;
}

// --- criterion: history-and-instance ----------------------------------------
// Brute-force recount of the interaction-history tensor on random subgoal
// streams, and the two-instance pick-two scene always picks the unused disc.
Check history_and_instance() {
  Check c;
  const auto cfg = hlsm_test::grid_config(11, 11, 5);
  Rng rng(808);
  for (int trial = 0; trial < 50 && c.ok; ++trial) {
    std::vector<Subgoal> goals;
    const int n = 1 + static_cast<int>(rng.next_below(20));
    for (int i = 0; i < n; ++i) {
      Subgoal g;
      g.stype = static_cast<SubgoalType>(rng.next_below(kNumInteractionTypes));
      g.arg_class = cls("CD");
      g.mask = Mask3D(11, 11, 5, 0.0);
      const int voxels = static_cast<int>(rng.next_below(6));
      for (int j = 0; j < voxels; ++j)
        g.mask.at(rng.next_below(11), rng.next_below(11), rng.next_below(5)) = rng.next_double();
      goals.push_back(std::move(g));
    }
    auto got = empty_history_tensor(cfg);
    for (const auto& g : goals) got = update_history_tensor(got, g);
    c.expect(got == hlsm_test::brute_force_history(goals, cfg), "tensor recount mismatch");
  }
  if (!c.ok) return c;

  const WorldState w =
      load_scene_file(hlsm_test::scene_path("pick_two.scene"), hlsm_test::classes());
  for (uint64_t seed = 0; seed < 10 && c.ok; ++seed) {
    EpisodeConfig ecfg;
    ecfg.seed = seed;
    TemplateSubgoalPolicy policy(w.grid, ecfg.hlc);
    const EpisodeTrace trace = run_episode(w, policy, ecfg);
    c.expect(trace.metrics.success,
             "pick-two seed " + std::to_string(seed) + " failed (gc " +
                 std::to_string(trace.metrics.goal_condition_rate) + ")");
  }
  if (c.ok) c.detail = "recounts match; 10/10 pick-two runs place both discs";
  return c;
}

// --- criterion: determinism --------------------------------------------------
// Identical scene + seed: byte-identical traces and map exports.
Check determinism() {
  Check c;
  const WorldState w =
      load_scene_file(hlsm_test::scene_path("pick_and_place.scene"), hlsm_test::classes());
  auto run_once = [&](const std::string& dir) {
    EpisodeConfig cfg;
    cfg.seed = 42;
    cfg.noise.depth_sigma = 0.05;  // include the stochastic paths
    cfg.noise.seg_flip_prob = 0.02;
    cfg.export_maps_dir = dir;
    TemplateSubgoalPolicy policy(w.grid, cfg.hlc);
    return run_episode(w, policy, cfg);
  };
  namespace fs = std::filesystem;
  const auto dir_a = fs::temp_directory_path() / "hlsm_det_a";
  const auto dir_b = fs::temp_directory_path() / "hlsm_det_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  const EpisodeTrace a = run_once(dir_a.string());
  const EpisodeTrace b = run_once(dir_b.string());

  std::ostringstream ba, bb;
  a.serialize(ba);
  b.serialize(bb);
  c.expect(ba.str() == bb.str(), "traces differ");

  std::vector<fs::path> files_a;
  for (const auto& e : fs::directory_iterator(dir_a)) files_a.push_back(e.path().filename());
  std::sort(files_a.begin(), files_a.end());
  c.expect(!files_a.empty(), "no map exports written");
  for (const auto& name : files_a) {
    std::ifstream fa(dir_a / name, std::ios::binary), fb(dir_b / name, std::ios::binary);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    c.expect(fb.good() && sa.str() == sb.str(), "map export differs: " + name.string());
  }
  if (c.ok) c.detail = "trace and " + std::to_string(files_a.size()) + " map exports byte-identical";
  return c;
}

// --- criterion: augment -------------------------------------------------------
// sigma = 0 is bit-identity under any coin flips; extreme sigma stays in
// [0,1]; classes outside the variable set are bit-unchanged.
Check augment_identity_clamp() {
  Check c;
  Rng img_rng(31337);
  RgbImage img(48, 32);
  for (auto& v : img.v) v = img_rng.next_double();
  SegImage seg(48, 32, 8);
  for (int v = 0; v < 32; ++v)
    for (int u = 0; u < 48; ++u) seg.set_delta(u, v, (u * 7 + v) % 8);
  const std::vector<int> variable = {1, 3, 5};

  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const RgbImage out = augment(img, seg, variable, AugmentParams{0.0, 0.0, 0.0}, rng);
    c.expect(out == img, "sigma-0 path is not the identity at seed " + std::to_string(seed));
  }
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const RgbImage out = augment(img, seg, variable, AugmentParams{1e6, 1e6, 1e6}, rng);
    for (double v : out.v) c.expect(v >= 0.0 && v <= 1.0, "extreme sigma out of bounds");
    for (int v = 0; v < 32; ++v)
      for (int u = 0; u < 48; ++u) {
        const int pixel_cls = (u * 7 + v) % 8;
        if (pixel_cls == 1 || pixel_cls == 3 || pixel_cls == 5) continue;
        for (int ch = 0; ch < 3; ++ch)
          c.expect(out.at(ch, u, v) == img.at(ch, u, v), "non-variable class pixel changed");
      }
  }
  if (c.ok) c.detail = "identity, clamp, and non-variable invariance hold over 20 seeds";
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
      {"vin-shortest-path", vin_shortest_path},
      {"vin-numerical-oracle", vin_numerical_oracle},
      {"mapping-roundtrip", mapping_roundtrip},
      {"accumulation-algebra", accumulation_algebra},
      {"end-to-end", end_to_end},
      {"end-to-end-perturbed", end_to_end_perturbed},
      {"confidence-mask", confidence_mask_formula},
      {"history-and-instance", history_and_instance},
      {"determinism", determinism},
      {"augment", augment_identity_clamp},
  };

  std::string only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = argv[++i];
    if (std::strcmp(argv[i], "--list") == 0) {
      for (const auto& [name, fn] : criteria) std::cout << name << "\n";
      return 0;
    }
  }

  int failures = 0, ran = 0;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && name != only) continue;
    ++ran;
    Check c;
    try {
      c = fn();
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail = std::string("exception: ") + e.what();
    }
    std::cout << (c.ok ? "[PASS] " : "[FAIL] ") << name;
    if (!c.detail.empty()) std::cout << " - " << c.detail;
    std::cout << "\n";
    failures += c.ok ? 0 : 1;
  }
  if (ran == 0) {
    std::cerr << "unknown criterion: " << only << "\n";
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
