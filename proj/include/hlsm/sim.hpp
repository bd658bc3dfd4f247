#pragma once

#include <cmath>
#include <map>
#include <set>
#include <utility>

#include "hlsm/observation.hpp"
#include "hlsm/rng.hpp"
#include "hlsm/world.hpp"

namespace hlsm {

struct NoiseConfig {
  double depth_sigma = 0.0;    // meters; 0 = oracle depth
  double seg_flip_prob = 0.0;  // per-pixel label flip probability
};

struct SimConfig {
  int depth_bins = 50;
  double depth_resolution = 0.1;  // meters per bin
  int reach_cells = 6;            // Chebyshev interaction reach (1.5 m at 0.25 m voxels)
  int receptacle_capacity = 3;
};

// Fixed per-class palette for the optional RGB channel (golden-angle hues).
inline std::array<double, 3> palette_color(int cls) {
  if (cls == 0) return {0.05, 0.05, 0.05};
  const double h = std::fmod(cls * 137.50776405003785, 360.0) / 60.0;
  const double s = 0.65, v = 0.95;
  const double c = v * s;
  const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
  const double m = v - c;
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h)) {
    case 0: r = c, g = x; break;
    case 1: r = x, g = c; break;
    case 2: g = c, b = x; break;
    case 3: g = x, b = c; break;
    case 4: r = x, b = c; break;
    default: r = c, b = x; break;
  }
  return {r + m, g + m, b + m};
}

// First-hit raycast of the full frame against ground-truth geometry,
// honoring held-object removal and closed-receptacle occlusion.
struct SceneRaycast {
  Grid2<int> hit_class;   // -1 = no hit in range of the grid
  Grid2<int> hit_object;  // object index, -1 = static or none
  Grid2<double> t_entry;
  Grid2<double> t_exit;
};

inline SceneRaycast raycast_scene(const WorldState& w) {
  const int W = w.camera.width, H = w.camera.height;
  SceneRaycast rc{Grid2<int>(W, H, -1), Grid2<int>(W, H, -1), Grid2<double>(W, H, 0.0),
                  Grid2<double>(W, H, 0.0)};

  Grid3<int> cell_class(w.grid.dims_x, w.grid.dims_y, w.grid.dims_z, -1);
  Grid3<int> cell_object(w.grid.dims_x, w.grid.dims_y, w.grid.dims_z, -1);
  for (int x = 0; x < w.grid.dims_x; ++x)
    for (int y = 0; y < w.grid.dims_y; ++y)
      for (int z = 0; z < w.grid.dims_z; ++z) cell_class.at(x, y, z) = w.static_class.at(x, y, z);
  for (size_t i = 0; i < w.objects.size(); ++i) {
    if (!w.visible(w.objects[i])) continue;
    for (const Voxel& v : w.objects[i].voxels) {
      cell_class.at(v) = w.objects[i].cls;
      cell_object.at(v) = static_cast<int>(i);
    }
  }

  const CameraFrame cam(w.agent, w.camera, w.grid.voxel_size);
  for (int v = 0; v < H; ++v) {
    for (int u = 0; u < W; ++u) {
      const Vec3 dir = cam.pixel_ray(u, v);
      traverse_voxels(cam.origin(), dir, w.grid.voxel_size, w.grid.dims_x, w.grid.dims_y,
                      w.grid.dims_z, [&](const Voxel& cell, double t0, double t1) {
                        const int cls = cell_class.at(cell);
                        if (cls < 0) return true;
                        rc.hit_class.at(u, v) = cls;
                        rc.hit_object.at(u, v) = cell_object.at(cell);
                        rc.t_entry.at(u, v) = t0;
                        rc.t_exit.at(u, v) = t1;
                        return false;
                      });
    }
  }
  return rc;
}

namespace detail {

// Standard normal CDF.
inline double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Spreads a depth reading over bins as a discretized Gaussian; the end bins
// absorb the tails so each pixel still sums to one.
inline void set_gaussian_depth(DepthImage& depth, int u, int v, double mean, double sigma) {
  const int B = depth.bins();
  const double dd = depth.delta_d();
  double cum_prev = 0.0;
  for (int i = 0; i < B; ++i) {
    const double hi = (i == B - 1) ? 1.0 : phi(((i + 0.5) * dd - mean) / sigma);
    depth.at(u, v, i) = hi - cum_prev;
    cum_prev = hi;
  }
}

}  // namespace detail

// Oracle sensor rendering. Depth is a delta at a bin whose reconstructed
// point lies inside the first-hit voxel; corner-clipping rays whose chord
// contains no such bin get a deliberately wide two-point distribution that
// the confidence mask rejects. Pixels with no hit (or a hit beyond the last
// bin) read background at the maximum depth.
inline Observation render(const WorldState& w, const SimConfig& sim = {},
                          const NoiseConfig& noise = {}, Rng* noise_rng = nullptr) {
  const int W = w.camera.width, H = w.camera.height;
  const int B = sim.depth_bins;
  const double dd = sim.depth_resolution;
  const int C = w.grid.num_classes();

  Observation o;
  o.depth = DepthImage(W, H, B, dd);
  o.seg = SegImage(W, H, C);
  o.rgb.assign(static_cast<size_t>(3) * H * W, 0.0);
  o.pose = w.agent;
  o.inventory = w.inventory();
  o.instruction = w.instruction;

  const SceneRaycast rc = raycast_scene(w);
  constexpr double kEdge = 1e-7;

  for (int v = 0; v < H; ++v) {
    for (int u = 0; u < W; ++u) {
      int cls = rc.hit_class.at(u, v);
      bool delta_pixel = false;
      double delta_depth = 0.0;

      if (cls < 0) {
        cls = 0;
        o.depth.set_delta(u, v, B - 1);
      } else {
        const double t0 = rc.t_entry.at(u, v);
        const double t1 = rc.t_exit.at(u, v);
        int klo = static_cast<int>(std::ceil((t0 + kEdge) / dd));
        int khi = static_cast<int>(std::floor((t1 - kEdge) / dd));
        klo = std::max(klo, 0);
        khi = std::min(khi, B - 1);
        if (klo > B - 1) {
          cls = 0;  // out of range
          o.depth.set_delta(u, v, B - 1);
        } else if (klo <= khi) {
          const int mid = static_cast<int>(std::lround(0.5 * (t0 + t1) / dd));
          const int k = std::clamp(mid, klo, khi);
          o.depth.set_delta(u, v, k);
          delta_pixel = true;
          delta_depth = k * dd;
        } else {
          // Chord too short for any bin: wide distribution, low expectation.
          const int kfar = std::max(1, std::min(B - 1, static_cast<int>(std::floor(t0 / dd))));
          o.depth.at(u, v, 0) = 0.55;
          o.depth.at(u, v, kfar) = 0.45;
        }
      }

      // A flipped pixel reads confidently wrong, not certain: the label moves
      // to a random class at 0.7 with the rest kept by the true class, the
      // way a real segmenter is miscalibrated rather than adversarial.
      if (noise.seg_flip_prob > 0.0 && noise_rng && noise_rng->bernoulli(noise.seg_flip_prob)) {
        const int wrong = static_cast<int>(noise_rng->next_below(static_cast<uint64_t>(C)));
        o.seg.set_delta(u, v, cls);
        o.seg.at(u, v, cls) = wrong == cls ? 1.0 : 0.3;
        o.seg.at(u, v, wrong) = wrong == cls ? 1.0 : 0.7;
      } else {
        o.seg.set_delta(u, v, cls);
      }

      if (delta_pixel && noise.depth_sigma > 0.0)
        detail::set_gaussian_depth(o.depth, u, v, delta_depth, noise.depth_sigma);

      const auto col = palette_color(cls);
      for (int ch = 0; ch < 3; ++ch)
        o.rgb[(static_cast<size_t>(ch) * H + v) * W + u] = col[ch];
    }
  }
  return o;
}

namespace detail {

inline int gt_obstacle_z_limit(const GridConfig& g) {
  return std::min(static_cast<int>(std::floor(1.75 / g.voxel_size + 1e-9)), g.dims_z);
}

inline Grid3<uint8_t> occupancy_of(const WorldState& w) {
  Grid3<uint8_t> occ(w.grid.dims_x, w.grid.dims_y, w.grid.dims_z, 0);
  for (int x = 0; x < w.grid.dims_x; ++x)
    for (int y = 0; y < w.grid.dims_y; ++y)
      for (int z = 0; z < w.grid.dims_z; ++z)
        if (w.static_class.at(x, y, z) >= 0) occ.at(x, y, z) = 1;
  for (const auto& obj : w.objects)
    for (const Voxel& v : obj.voxels) occ.at(v) = 1;
  return occ;
}

// Refreshes shape from the current voxel layout and strips the voxels (the
// object is being carried).
inline void lift_object(WorldState& w, ObjectInstance& obj) {
  if (!obj.voxels.empty()) {
    Voxel mn = obj.voxels.front();
    for (const Voxel& v : obj.voxels) {
      mn.x = std::min(mn.x, v.x);
      mn.y = std::min(mn.y, v.y);
      mn.z = std::min(mn.z, v.z);
    }
    obj.shape.clear();
    for (const Voxel& v : obj.voxels) obj.shape.push_back({v.x - mn.x, v.y - mn.y, v.z - mn.z});
  }
  obj.voxels.clear();
  for (const std::string& id : obj.contents) lift_object(w, *w.find(id));
}

// Tries to place obj's shape with its min corner at anchor; then stacks the
// contents above it. Returns false (world untouched by the caller's copy
// discipline) when anything does not fit.
inline bool place_object_at(WorldState& w, Grid3<uint8_t>& occ, ObjectInstance& obj,
                            const Voxel& anchor);

inline bool place_onto(WorldState& w, Grid3<uint8_t>& occ, ObjectInstance& obj,
                       const std::vector<Voxel>& base_voxels) {
  // Candidate anchors: one slot above the top of each base column, lex order.
  std::map<std::pair<int, int>, int> top;
  for (const Voxel& v : base_voxels) {
    auto [it, fresh] = top.insert({{v.x, v.y}, v.z});
    if (!fresh) it->second = std::max(it->second, v.z);
  }
  for (const auto& [xy, z] : top) {
    if (place_object_at(w, occ, obj, {xy.first, xy.second, z + 1})) return true;
  }
  return false;
}

inline bool place_object_at(WorldState& w, Grid3<uint8_t>& occ, ObjectInstance& obj,
                            const Voxel& anchor) {
  std::vector<Voxel> placed;
  placed.reserve(obj.shape.size());
  for (const Voxel& s : obj.shape) {
    const Voxel v{anchor.x + s.x, anchor.y + s.y, anchor.z + s.z};
    if (!occ.in_bounds(v) || occ.at(v)) return false;
    placed.push_back(v);
  }
  for (const Voxel& v : placed) occ.at(v) = 1;
  obj.voxels = std::move(placed);
  for (const std::string& id : obj.contents) {
    if (!place_onto(w, occ, *w.find(id), obj.voxels)) return false;
  }
  return true;
}

}  // namespace detail

// Deterministic environment dynamics. Failures never mutate: the returned
// world equals the input when success is false.
inline std::pair<WorldState, bool> transition(const WorldState& world, const EnvAction& action,
                                              const SimConfig& sim = {}) {
  WorldState w = world;
  switch (action.kind) {
    case EnvAction::Kind::RotateLeft:
      w.agent.yaw = rotate_left(w.agent.yaw);
      return {std::move(w), true};
    case EnvAction::Kind::RotateRight:
      w.agent.yaw = rotate_right(w.agent.yaw);
      return {std::move(w), true};
    case EnvAction::Kind::LookUp:
      if (w.agent.pitch - 30 < kPitchValues.front()) return {world, false};
      w.agent.pitch -= 30;
      return {std::move(w), true};
    case EnvAction::Kind::LookDown:
      if (w.agent.pitch + 30 > kPitchValues.back()) return {world, false};
      w.agent.pitch += 30;
      return {std::move(w), true};
    case EnvAction::Kind::MoveAhead: {
      const Cell d = heading_delta(w.agent.yaw);
      const int nx = w.agent.x + d.x, ny = w.agent.y + d.y;
      if (w.column_blocked(nx, ny, detail::gt_obstacle_z_limit(w.grid))) return {world, false};
      w.agent.x = nx;
      w.agent.y = ny;
      return {std::move(w), true};
    }
    case EnvAction::Kind::Interact:
      break;
  }

  // Resolve the mask to the visible instance with the dominant pixel overlap.
  const Mask2D& mask = action.mask;
  if (mask.nx() != w.camera.width || mask.ny() != w.camera.height) return {world, false};
  int mask_count = 0;
  for (const auto& m : mask.data()) mask_count += m ? 1 : 0;
  if (mask_count == 0) return {world, false};

  const SceneRaycast rc = raycast_scene(w);
  std::map<int, int> overlap;
  for (int u = 0; u < w.camera.width; ++u)
    for (int v = 0; v < w.camera.height; ++v)
      if (mask.at(u, v) && rc.hit_object.at(u, v) >= 0) overlap[rc.hit_object.at(u, v)] += 1;
  int target_idx = -1, best = 0;
  for (const auto& [idx, n] : overlap)
    if (n > best) best = n, target_idx = idx;
  if (target_idx < 0 || 2 * best <= mask_count) return {world, false};

  ObjectInstance& target = w.objects[target_idx];
  int cheb = std::numeric_limits<int>::max();
  for (const Voxel& v : target.voxels)
    cheb = std::min(cheb, std::max(std::abs(v.x - w.agent.x), std::abs(v.y - w.agent.y)));
  if (cheb > sim.reach_cells) return {world, false};

  const ClassTable& classes = w.grid.classes;
  const auto has = [&](const ObjectInstance& o, Affordance a) {
    return classes.has_affordance(o.cls, a);
  };

  switch (action.interaction) {
    case SubgoalType::PickUp: {
      if (w.held || !has(target, Affordance::Pickable)) return {world, false};
      if (target.contained_in) {
        ObjectInstance* container = w.find(*target.contained_in);
        auto& cc = container->contents;
        cc.erase(std::remove(cc.begin(), cc.end(), target.id), cc.end());
        target.contained_in.reset();
      }
      detail::lift_object(w, target);
      w.held = target.id;
      return {std::move(w), true};
    }
    case SubgoalType::Put: {
      if (!w.held || !has(target, Affordance::Receptacle)) return {world, false};
      if (has(target, Affordance::Openable) && !target.open) return {world, false};
      if (static_cast<int>(target.contents.size()) >= sim.receptacle_capacity)
        return {world, false};
      ObjectInstance& obj = *w.find(*w.held);
      Grid3<uint8_t> occ = detail::occupancy_of(w);
      if (!detail::place_onto(w, occ, obj, target.voxels)) return {world, false};
      obj.contained_in = target.id;
      target.contents.push_back(obj.id);
      w.held.reset();
      return {std::move(w), true};
    }
    case SubgoalType::Open: {
      if (!has(target, Affordance::Openable) || target.open) return {world, false};
      target.open = true;
      return {std::move(w), true};
    }
    case SubgoalType::Close: {
      if (!has(target, Affordance::Openable) || !target.open) return {world, false};
      target.open = false;
      if (target.cls == classes.index_of("Fridge").value_or(-2)) {
        for (const std::string& id : target.contents) {
          ObjectInstance* c = w.find(id);
          c->cold = true;
          c->hot = false;
        }
      }
      return {std::move(w), true};
    }
    case SubgoalType::ToggleOn: {
      if (!has(target, Affordance::Togglable) || target.toggled) return {world, false};
      if (has(target, Affordance::Openable) && target.open) return {world, false};
      target.toggled = true;
      if (target.cls == classes.index_of("Faucet").value_or(-2)) {
        const int sink = classes.index_of("Sink").value_or(-2);
        for (auto& recep : w.objects) {
          if (recep.cls != sink) continue;
          for (const std::string& id : recep.contents) w.find(id)->clean = true;
        }
      }
      return {std::move(w), true};
    }
    case SubgoalType::ToggleOff: {
      if (!has(target, Affordance::Togglable) || !target.toggled) return {world, false};
      target.toggled = false;
      if (target.cls == classes.index_of("Microwave").value_or(-2)) {
        for (const std::string& id : target.contents) {
          ObjectInstance* c = w.find(id);
          c->hot = true;
          c->cold = false;
        }
      }
      return {std::move(w), true};
    }
    case SubgoalType::Slice: {
      if (!w.held) return {world, false};
      if (w.find(*w.held)->cls != classes.index_of("Knife").value_or(-2)) return {world, false};
      if (!classes.sliceable(target.cls)) return {world, false};
      ObjectInstance part;
      part.id = target.id + "_sliced";
      part.cls = target.cls;
      part.voxels = target.voxels;
      part.shape = target.shape;
      part.sliced = true;
      part.clean = target.clean;
      part.hot = target.hot;
      part.cold = target.cold;
      part.contained_in = target.contained_in;
      part.contents = target.contents;
      if (w.object_index.count(part.id)) return {world, false};
      if (part.contained_in) {
        for (std::string& id : w.find(*part.contained_in)->contents)
          if (id == target.id) id = part.id;
      }
      for (const std::string& id : part.contents) w.find(id)->contained_in = part.id;
      w.object_index.erase(target.id);
      w.object_index[part.id] = target_idx;
      w.objects[target_idx] = std::move(part);
      return {std::move(w), true};
    }
    case SubgoalType::Stop:
      break;
  }
  return {world, false};
}

// Goal-condition checklist per task type.
inline std::pair<int, int> goal_conditions(const TaskSpec& task, const WorldState& w) {
  const ClassTable& classes = w.grid.classes;
  const auto placed_count = [&](int obj_cls, int recep_cls) {
    int n = 0;
    for (const auto& o : w.objects) {
      if (o.cls != obj_cls || !o.contained_in) continue;
      const ObjectInstance* r = w.find(*o.contained_in);
      if (r && r->cls == recep_cls) ++n;
    }
    return n;
  };
  const auto any_with = [&](int obj_cls, auto pred) {
    for (const auto& o : w.objects)
      if (o.cls == obj_cls && pred(o)) return true;
    return false;
  };

  std::vector<bool> conds;
  switch (task.type) {
    case TaskType::PickAndPlace:
      conds.push_back(placed_count(task.object_class, task.receptacle_class) >= 1);
      break;
    case TaskType::PickTwoAndPlace: {
      const int n = placed_count(task.object_class, task.receptacle_class);
      conds.push_back(n >= 1);
      conds.push_back(n >= 2);
      break;
    }
    case TaskType::HeatAndPlace:
      conds.push_back(placed_count(task.object_class, task.receptacle_class) >= 1);
      conds.push_back(any_with(task.object_class, [](const ObjectInstance& o) { return o.hot; }));
      break;
    case TaskType::CoolAndPlace:
      conds.push_back(placed_count(task.object_class, task.receptacle_class) >= 1);
      conds.push_back(any_with(task.object_class, [](const ObjectInstance& o) { return o.cold; }));
      break;
    case TaskType::CleanAndPlace:
      conds.push_back(placed_count(task.object_class, task.receptacle_class) >= 1);
      conds.push_back(any_with(task.object_class, [](const ObjectInstance& o) { return o.clean; }));
      break;
    case TaskType::Examine: {
      bool holding = false;
      if (w.held) holding = w.find(*w.held)->cls == task.object_class;
      conds.push_back(holding);
      bool lamp_on = false;
      for (const char* lamp : {"FloorLamp", "DeskLamp"}) {
        const int cls = classes.index_of(lamp).value_or(-2);
        lamp_on = lamp_on || any_with(cls, [](const ObjectInstance& o) { return o.toggled; });
      }
      conds.push_back(lamp_on);
      break;
    }
    case TaskType::StackAndPlace: {
      bool stacked = false;
      for (const auto& o : w.objects) {
        if (o.cls != task.object_class) continue;
        for (const std::string& id : o.contents)
          if (w.find(id)->cls == task.intermediate_class) stacked = true;
      }
      conds.push_back(stacked);
      conds.push_back(placed_count(task.object_class, task.receptacle_class) >= 1);
      break;
    }
  }
  if (task.sliced)
    conds.push_back(any_with(task.object_class, [](const ObjectInstance& o) { return o.sliced; }));

  int sat = 0;
  for (bool c : conds) sat += c ? 1 : 0;
  return {sat, static_cast<int>(conds.size())};
}

// --- Augment -----------------------------------------------------------

struct RgbImage {
  int width = 0, height = 0;
  std::vector<double> v;  // channel-major [3][H][W]

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), v(static_cast<size_t>(3) * w * h, 0.0) {}

  double& at(int ch, int u, int vv) { return v[(static_cast<size_t>(ch) * height + vv) * width + u]; }
  double at(int ch, int u, int vv) const {
    return v[(static_cast<size_t>(ch) * height + vv) * width + u];
  }
  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

struct AugmentParams {
  double sigma_additive = 0.1;  // per-class additive color offset
  double sigma_pixel = 0.05;    // per-pixel noise
  double sigma_mult = 0.3;      // per-class multiplicative offset
};

// Segmentation-aware color augmentation: per variable class, coin-flipped
// per-class additive offset, per-pixel noise, and multiplicative offset on
// the class's pixels, then a final clamp to [0,1]. All three perturbations
// vanish at sigma = 0 regardless of the coin flips.
inline RgbImage augment(const RgbImage& rgb, const SegImage& seg_truth,
                        const std::vector<int>& variable_classes, const AugmentParams& params,
                        Rng& rng) {
  RgbImage out = rgb;
  const int W = rgb.width, H = rgb.height;
  for (int cls : variable_classes) {
    if (rng.bernoulli(0.5)) {
      double a[3];
      for (double& ch : a) ch = rng.gaussian(0.0, params.sigma_additive);
      for (int v = 0; v < H; ++v)
        for (int u = 0; u < W; ++u)
          if (seg_truth.at(u, v, cls) > 0.5)
            for (int ch = 0; ch < 3; ++ch) out.at(ch, u, v) += a[ch];
    }
    if (rng.bernoulli(0.5)) {
      for (int v = 0; v < H; ++v)
        for (int u = 0; u < W; ++u) {
          if (seg_truth.at(u, v, cls) <= 0.5) continue;
          const double g = rng.gaussian(1.0, params.sigma_pixel);
          for (int ch = 0; ch < 3; ++ch) out.at(ch, u, v) += (g - 1.0);
        }
    }
    if (rng.bernoulli(0.5)) {
      double m[3];
      for (double& ch : m) ch = rng.gaussian(0.0, params.sigma_mult);
      for (int v = 0; v < H; ++v)
        for (int u = 0; u < W; ++u)
          if (seg_truth.at(u, v, cls) > 0.5)
            for (int ch = 0; ch < 3; ++ch) out.at(ch, u, v) *= (1.0 + m[ch]);
    }
  }
  for (double& x : out.v) x = std::clamp(x, 0.0, 1.0);
  return out;
}

}  // namespace hlsm
