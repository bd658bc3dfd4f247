// Command-line harness: run episodes, evaluate scene batches, export and
// visualize map snapshots, parse instructions, and apply the segmentation-
// aware color augmentation.

#include <filesystem>
#include <fnmatch.h>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hlsm/harness.hpp"
#include "hlsm/image_io.hpp"
#include "hlsm/snapshot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string default_classes_path() {
  for (const char* p : {"data/classes.cfg", "../data/classes.cfg"}) {
    if (fs::exists(p)) return p;
  }
  return "data/classes.cfg";
}

std::vector<std::string> expand_scene_glob(const std::string& pattern) {
  std::vector<std::string> out;
  if (fs::is_directory(pattern)) {
    for (const auto& e : fs::directory_iterator(pattern))
      if (e.path().extension() == ".scene") out.push_back(e.path().string());
  } else if (pattern.find('*') != std::string::npos || pattern.find('?') != std::string::npos) {
    const fs::path p(pattern);
    const fs::path dir = p.parent_path().empty() ? fs::path(".") : p.parent_path();
    const std::string name = p.filename().string();
    if (fs::is_directory(dir)) {
      for (const auto& e : fs::directory_iterator(dir))
        if (fnmatch(name.c_str(), e.path().filename().string().c_str(), 0) == 0)
          out.push_back(e.path().string());
    }
  } else {
    out.push_back(pattern);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hlsm: semantic voxel mapping, value-iteration navigation, and "
               "subgoal-driven task execution in a voxel household simulator"};
  app.require_subcommand(1);

  std::string classes_path = default_classes_path();
  std::string templates_path;
  app.add_option("--classes", classes_path, "class/affordance table")->capture_default_str();
  app.add_option("--templates", templates_path, "subgoal templates config (default: built-in)");

  // run
  auto* run = app.add_subcommand("run", "run one episode on a scene");
  std::string run_scene, run_trace_out, run_export_maps;
  uint64_t run_seed = 0;
  int run_tmax = 1000;
  int run_retry = hlsm::HlcConfig{}.retry_budget;
  int run_explore = hlsm::LlcConfig{}.exploration_budget;
  double run_depth_sigma = 0.0, run_seg_flip = 0.0;
  run->add_option("--scene", run_scene, "scene file")->required();
  run->add_option("--seed", run_seed, "episode seed");
  run->add_option("--t-max", run_tmax, "step horizon");
  run->add_option("--depth-sigma", run_depth_sigma, "depth noise sigma in meters");
  run->add_option("--seg-flip", run_seg_flip, "segmentation label-flip probability");
  run->add_option("--retry-budget", run_retry, "failed-subgoal retries before the alternate class");
  run->add_option("--exploration-budget", run_explore, "exploration cycles per subgoal");
  run->add_option("--export-maps", run_export_maps, "directory for map snapshots");
  run->add_option("--trace-out", run_trace_out, "write the step trace to a file");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a batch of scenes");
  std::string eval_scenes, eval_out;
  uint64_t eval_seed = 0;
  int eval_tmax = 1000;
  double eval_depth_sigma = 0.0, eval_seg_flip = 0.0;
  eval->add_option("--scenes", eval_scenes, "scene file, directory, or glob")->required();
  eval->add_option("--out", eval_out, "metrics records file (JSON lines)");
  eval->add_option("--seed", eval_seed, "episode seed");
  eval->add_option("--t-max", eval_tmax, "step horizon");
  eval->add_option("--depth-sigma", eval_depth_sigma, "depth noise sigma in meters");
  eval->add_option("--seg-flip", eval_seg_flip, "segmentation label-flip probability");

  // render-map
  auto* rmap = app.add_subcommand("render-map", "render a map snapshot to a top-down image");
  std::string rmap_snapshot, rmap_out;
  rmap->add_option("--snapshot", rmap_snapshot, "map snapshot file")->required();
  rmap->add_option("--out", rmap_out, "output PPM image")->required();

  // augment
  auto* aug = app.add_subcommand("augment", "apply color augmentation to an image");
  std::string aug_in, aug_seg, aug_out, aug_classes_list;
  double aug_sa = 0.1, aug_sg = 0.05, aug_sm = 0.3;
  uint64_t aug_seed = 0;
  aug->add_option("--in", aug_in, "input PPM image")->required();
  aug->add_option("--seg", aug_seg, "class-index PGM aligned with the image")->required();
  aug->add_option("--out", aug_out, "output PPM image")->required();
  aug->add_option("--variable-classes", aug_classes_list,
                  "comma-separated class names eligible for color change")
      ->required();
  aug->add_option("--sigma-a", aug_sa, "per-class additive offset sigma");
  aug->add_option("--sigma-g", aug_sg, "per-pixel noise sigma");
  aug->add_option("--sigma-m", aug_sm, "per-class multiplicative offset sigma");
  aug->add_option("--seed", aug_seed, "augmentation seed");

  // parse
  auto* parse = app.add_subcommand("parse", "parse an instruction into a task spec");
  std::string parse_instr;
  parse->add_option("--instruction", parse_instr, "instruction text")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const auto classes_for = [&]() { return hlsm::ClassTable::load(classes_path); };
    const auto templates_for = [&]() {
      return templates_path.empty() ? hlsm::TaskTemplates::builtin()
                                    : hlsm::TaskTemplates::load(templates_path);
    };

    if (run->parsed()) {
      const hlsm::ClassTable classes = classes_for();
      const hlsm::WorldState world = hlsm::load_scene_file(run_scene, classes);
      hlsm::EpisodeConfig cfg;
      cfg.seed = run_seed;
      cfg.t_max = run_tmax;
      cfg.noise.depth_sigma = run_depth_sigma;
      cfg.noise.seg_flip_prob = run_seg_flip;
      cfg.hlc.retry_budget = run_retry;
      cfg.llc.exploration_budget = run_explore;
      cfg.export_maps_dir = run_export_maps;
      hlsm::TemplateSubgoalPolicy policy(world.grid, cfg.hlc, templates_for());
      const hlsm::EpisodeTrace trace = hlsm::run_episode(world, policy, cfg);
      if (!run_trace_out.empty()) {
        std::ofstream f(run_trace_out, std::ios::binary);
        trace.serialize(f);
      }
      json j{{"scene", run_scene},
             {"seed", run_seed},
             {"success", trace.metrics.success},
             {"gc", trace.metrics.goal_condition_rate},
             {"steps", trace.metrics.steps}};
      std::cout << j.dump() << "\n";
      return trace.metrics.success ? 0 : 1;
    }

    if (eval->parsed()) {
      const hlsm::ClassTable classes = classes_for();
      const auto paths = expand_scene_glob(eval_scenes);
      if (paths.empty()) {
        std::cerr << "no scenes match: " << eval_scenes << "\n";
        return 2;
      }
      hlsm::EpisodeConfig cfg;
      cfg.seed = eval_seed;
      cfg.t_max = eval_tmax;
      cfg.noise.depth_sigma = eval_depth_sigma;
      cfg.noise.seg_flip_prob = eval_seg_flip;
      const hlsm::BatchSummary summary = hlsm::eval_batch(paths, classes, cfg, templates_for());
      if (!eval_out.empty()) {
        std::ofstream f(eval_out, std::ios::binary);
        for (const auto& rec : summary.to_json()) f << rec.dump() << "\n";
      }
      std::cout << "scene                                  success   gc      steps\n";
      for (const auto& r : summary.results) {
        std::string name = fs::path(r.scene).filename().string();
        name.resize(38, ' ');
        if (!r.loaded) {
          std::cout << name << " ERROR: " << r.error << "\n";
          continue;
        }
        char line[96];
        std::snprintf(line, sizeof(line), "%s %-9s %.4f  %d", name.c_str(),
                      r.metrics.success ? "yes" : "no", r.metrics.goal_condition_rate,
                      r.metrics.steps);
        std::cout << line << "\n";
      }
      char agg[64];
      std::snprintf(agg, sizeof(agg), "SR %.4f  GC %.4f", summary.success_rate,
                    summary.goal_condition_rate);
      std::cout << agg << "\n";
      return 0;
    }

    if (rmap->parsed()) {
      const hlsm::MapSnapshot snap = hlsm::import_map_file(rmap_snapshot);
      hlsm::RgbImage img(snap.dims_x, snap.dims_y);
      for (int x = 0; x < snap.dims_x; ++x) {
        for (int y = 0; y < snap.dims_y; ++y) {
          bool observed = false;
          int cls = 0;
          double best = 0.0;
          for (int z = 0; z < snap.dims_z; ++z) {
            observed = observed || snap.observed.at(x, y, z);
            for (int c = 1; c < snap.num_classes; ++c) {
              if (snap.semantic.at(x, y, z, c) > best) {
                best = snap.semantic.at(x, y, z, c);
                cls = c;
              }
            }
          }
          auto col = hlsm::palette_color(cls);
          if (!observed && cls == 0) col = {0.0, 0.0, 0.0};
          // image row 0 is the top: flip y so North is up
          for (int ch = 0; ch < 3; ++ch) img.at(ch, x, snap.dims_y - 1 - y) = col[ch];
        }
      }
      hlsm::write_ppm(img, rmap_out);
      std::cout << "wrote " << rmap_out << "\n";
      return 0;
    }

    if (aug->parsed()) {
      const hlsm::ClassTable classes = classes_for();
      const hlsm::RgbImage rgb = hlsm::read_ppm(aug_in);
      const hlsm::Grid2<uint8_t> seg_idx = hlsm::read_pgm(aug_seg);
      if (seg_idx.nx() != rgb.width || seg_idx.ny() != rgb.height) {
        std::cerr << "image/segmentation size mismatch\n";
        return 2;
      }
      hlsm::SegImage seg(rgb.width, rgb.height, classes.size());
      for (int v = 0; v < rgb.height; ++v)
        for (int u = 0; u < rgb.width; ++u)
          seg.set_delta(u, v, std::min<int>(seg_idx.at(u, v), classes.size() - 1));
      std::vector<int> variable;
      std::stringstream ss(aug_classes_list);
      std::string name;
      while (std::getline(ss, name, ',')) {
        const auto c = classes.index_of(name);
        if (!c) {
          std::cerr << "unknown class: " << name << "\n";
          return 2;
        }
        variable.push_back(*c);
      }
      hlsm::AugmentParams params{aug_sa, aug_sg, aug_sm};
      hlsm::Rng rng(aug_seed);
      hlsm::write_ppm(hlsm::augment(rgb, seg, variable, params, rng), aug_out);
      std::cout << "wrote " << aug_out << "\n";
      return 0;
    }

    if (parse->parsed()) {
      const hlsm::ClassTable classes = classes_for();
      const hlsm::TaskSpec spec = hlsm::parse_instruction(parse_instr, classes);
      json j{{"task_type", hlsm::task_type_name(spec.type)},
             {"object", classes.name(spec.object_class)},
             {"sliced", spec.sliced}};
      if (spec.receptacle_class != hlsm::kNoClass)
        j["receptacle"] = classes.name(spec.receptacle_class);
      if (spec.intermediate_class != hlsm::kNoClass)
        j["intermediate"] = classes.name(spec.intermediate_class);
      std::cout << j.dump() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
