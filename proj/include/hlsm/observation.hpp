#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "hlsm/camera.hpp"
#include "hlsm/core_ops.hpp"
#include "hlsm/types.hpp"

namespace hlsm {

// Per-pixel binned distribution over depths; bin b represents depth
// b * delta_d meters along the pixel ray.
class DepthImage {
 public:
  DepthImage() = default;
  DepthImage(int width, int height, int bins, double delta_d)
      : w_(width), h_(height), b_(bins), dd_(delta_d),
        p_(static_cast<size_t>(width) * height * bins, 0.0) {}

  int width() const { return w_; }
  int height() const { return h_; }
  int bins() const { return b_; }
  double delta_d() const { return dd_; }
  double max_depth() const { return (b_ - 1) * dd_; }

  double& at(int u, int v, int bin) { return p_[idx(u, v, bin)]; }
  double at(int u, int v, int bin) const { return p_[idx(u, v, bin)]; }

  void set_delta(int u, int v, int bin) {
    const size_t base = idx(u, v, 0);
    std::fill(p_.begin() + base, p_.begin() + base + b_, 0.0);
    p_[base + bin] = 1.0;
  }

  int argmax_bin(int u, int v) const {
    const size_t base = idx(u, v, 0);
    int best = 0;
    for (int i = 1; i < b_; ++i)
      if (p_[base + i] > p_[base + best]) best = i;
    return best;
  }

  double expected_depth(int u, int v) const {
    const size_t base = idx(u, v, 0);
    double e = 0.0;
    for (int i = 0; i < b_; ++i) e += p_[base + i] * (i * dd_);
    return e;
  }

  // Width of the smallest contiguous bin run holding >= 90% of the mass,
  // measured between the first and last member bins' depths; earliest run on
  // ties. A delta distribution has width zero.
  double w90(int u, int v) const {
    const size_t base = idx(u, v, 0);
    constexpr double kTarget = 0.9 - 1e-12;
    int best_len = b_;
    int j = 0;
    double mass = 0.0;
    for (int i = 0; i < b_; ++i) {
      if (j < i) {
        j = i;
        mass = 0.0;
      }
      while (j < b_ && mass < kTarget) mass += p_[base + j++];
      if (mass < kTarget) break;
      if (j - i < best_len) best_len = j - i;
      mass -= p_[base + i];
    }
    return (best_len - 1) * dd_;
  }

  const std::vector<double>& data() const { return p_; }

 private:
  size_t idx(int u, int v, int bin) const {
    return (static_cast<size_t>(v) * w_ + u) * b_ + bin;
  }
  int w_ = 0, h_ = 0, b_ = 0;
  double dd_ = 0.1;
  std::vector<double> p_;
};

// Per-pixel distribution over C semantic classes.
class SegImage {
 public:
  SegImage() = default;
  SegImage(int width, int height, int classes)
      : w_(width), h_(height), c_(classes), p_(static_cast<size_t>(width) * height * classes, 0.0) {}

  int width() const { return w_; }
  int height() const { return h_; }
  int num_classes() const { return c_; }

  double& at(int u, int v, int c) { return p_[idx(u, v, c)]; }
  double at(int u, int v, int c) const { return p_[idx(u, v, c)]; }

  void set_delta(int u, int v, int c) {
    const size_t base = idx(u, v, 0);
    std::fill(p_.begin() + base, p_.begin() + base + c_, 0.0);
    p_[base + c] = 1.0;
  }

  int argmax_class(int u, int v) const {
    const size_t base = idx(u, v, 0);
    int best = 0;
    for (int i = 1; i < c_; ++i)
      if (p_[base + i] > p_[base + best]) best = i;
    return best;
  }

  const std::vector<double>& data() const { return p_; }

 private:
  size_t idx(int u, int v, int c) const { return (static_cast<size_t>(v) * w_ + u) * c_ + c; }
  int w_ = 0, h_ = 0, c_ = 0;
  std::vector<double> p_;
};

using ConfidenceMask = Grid2<uint8_t>;  // indexed (u, v)

struct ObsConfig {
  double c1 = 0.3;
  double c2 = 1.0;
  double held_object_cull_distance = 0.7;  // meters
  double arg_seg_threshold = 0.5;

  void validate() const {
    if (!(c1 > 0.0) || c1 > c2) throw ConfigError("confidence coefficients need 0 < c1 <= c2");
  }
};

// Per-step sensor bundle.
struct Observation {
  DepthImage depth;
  SegImage seg;
  std::vector<double> rgb;  // channel-major [3][H][W], empty when not rendered
  Pose pose;
  InventoryVector inventory;
  std::string instruction;

  double rgb_at(int ch, int u, int v) const {
    return rgb[(static_cast<size_t>(ch) * depth.height() + v) * depth.width() + u];
  }
};

// Pixels with confident depth: the 90% interval is narrow relative to the
// expected depth, with extra slack on pixels the segmentation attributes to
// the current subgoal argument.
inline ConfidenceMask confidence_mask(const DepthImage& depth, const SegImage& seg,
                                      std::optional<int> arg_class, const ObsConfig& cfg) {
  cfg.validate();
  if (depth.width() != seg.width() || depth.height() != seg.height())
    throw std::invalid_argument("confidence_mask: depth/seg resolution mismatch");
  ConfidenceMask mask(depth.width(), depth.height(), 0);
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      const double w = depth.w90(u, v);
      const double e = depth.expected_depth(u, v);
      bool ok = w < cfg.c1 * e;
      if (!ok && arg_class)
        ok = w < cfg.c2 * e && seg.at(u, v, *arg_class) > cfg.arg_seg_threshold;
      mask.at(u, v) = ok ? 1 : 0;
    }
  }
  return mask;
}

// Extra slack on the observability ray test: a pixel must see strictly past a
// voxel's far side before the voxel counts as seen-through. Without it, a
// pixel ray that clips past a solid voxel and lands one voxel behind would
// mark the solid voxel observed with no semantic evidence.
inline double observed_depth_margin(const GridConfig& cfg) {
  return 0.5 * cfg.voxel_size * std::sqrt(3.0);
}

// Projects one frame into fresh semantic/observability grids: unmasked pixels
// become points at their arg-max depth, voxel values take the element-wise
// max over contributing pixels, and a voxel also counts as observed when some
// pixel's expected depth reaches past its centroid.
inline std::pair<SemanticVoxelGrid, ObservabilityGrid> project(
    const DepthImage& depth, const SegImage& seg, const ConfidenceMask& mask,
    const CameraIntrinsics& intr, const Pose& pose, const InventoryVector& inventory,
    const GridConfig& gcfg, const ObsConfig& ocfg) {
  if (depth.width() != intr.width || depth.height() != intr.height ||
      seg.width() != intr.width || seg.height() != intr.height)
    throw std::invalid_argument("project: image resolution does not match intrinsics");
  if (!gcfg.pose_in_bounds(pose)) throw std::invalid_argument("project: pose out of bounds");

  SemanticVoxelGrid sem(gcfg.dims_x, gcfg.dims_y, gcfg.dims_z, gcfg.num_classes());
  ObservabilityGrid obs(gcfg.dims_x, gcfg.dims_y, gcfg.dims_z, 0);
  const CameraFrame cam(pose, intr, gcfg.voxel_size);
  const bool holding = !inventory.empty_hand();
  const double vs = gcfg.voxel_size;

  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      if (!mask.at(u, v)) continue;
      const double d = depth.argmax_bin(u, v) * depth.delta_d();
      if (holding && d < ocfg.held_object_cull_distance) continue;
      const Vec3 p = cam.origin() + cam.pixel_ray(u, v) * d;
      const int x = static_cast<int>(std::floor(p.x / vs));
      const int y = static_cast<int>(std::floor(p.y / vs));
      const int z = static_cast<int>(std::floor(p.z / vs));
      if (!obs.in_bounds(x, y, z)) continue;
      obs.at(x, y, z) = 1;
      for (int c = 0; c < gcfg.num_classes(); ++c) {
        double& cell = sem.at(x, y, z, c);
        cell = std::max(cell, seg.at(u, v, c));
      }
    }
  }

  // Seen-through voxels: centroid in the frustum and the covering pixel's
  // expected depth reaching past it.
  const double margin = observed_depth_margin(gcfg);
  for (int x = 0; x < gcfg.dims_x; ++x) {
    for (int y = 0; y < gcfg.dims_y; ++y) {
      for (int z = 0; z < gcfg.dims_z; ++z) {
        if (obs.at(x, y, z)) continue;
        const Vec3 centroid{(x + 0.5) * vs, (y + 0.5) * vs, (z + 0.5) * vs};
        const auto proj = cam.project(centroid);
        if (!proj) continue;
        if (depth.expected_depth(proj->u, proj->v) > proj->distance + margin)
          obs.at(x, y, z) = 1;
      }
    }
  }
  return {std::move(sem), std::move(obs)};
}

// Persists one frame into the running belief: currently visible voxels take
// the new distribution, everything else keeps its previous value.
inline std::pair<SemanticVoxelGrid, ObservabilityGrid> accumulate(
    const SemanticVoxelGrid& prev_sem, const ObservabilityGrid& prev_obs,
    const SemanticVoxelGrid& new_sem, const ObservabilityGrid& new_obs) {
  if (prev_obs.nx() != new_obs.nx() || prev_obs.ny() != new_obs.ny() ||
      prev_obs.nz() != new_obs.nz() || prev_sem.num_classes() != new_sem.num_classes())
    throw std::invalid_argument("accumulate: shape mismatch");
  SemanticVoxelGrid sem = prev_sem;
  ObservabilityGrid obs = prev_obs;
  const int nc = prev_sem.num_classes();
  for (int x = 0; x < prev_obs.nx(); ++x) {
    for (int y = 0; y < prev_obs.ny(); ++y) {
      for (int z = 0; z < prev_obs.nz(); ++z) {
        if (new_obs.at(x, y, z)) {
          obs.at(x, y, z) = 1;
          for (int c = 0; c < nc; ++c) sem.at(x, y, z, c) = new_sem.at(x, y, z, c);
        }
      }
    }
  }
  return {std::move(sem), std::move(obs)};
}

// Full observation-model step: confidence mask, projection, accumulation;
// pose and inventory come straight from the observation.
inline StateRepr observe(const StateRepr& prev, const Observation& o,
                         const Subgoal* active_subgoal, const CameraIntrinsics& intr,
                         const GridConfig& gcfg, const ObsConfig& ocfg) {
  std::optional<int> arg;
  if (active_subgoal && !active_subgoal->is_stop() && active_subgoal->arg_class != kNoClass)
    arg = active_subgoal->arg_class;
  const ConfidenceMask mask = confidence_mask(o.depth, o.seg, arg, ocfg);
  auto [new_sem, new_obs] = project(o.depth, o.seg, mask, intr, o.pose, o.inventory, gcfg, ocfg);
  auto [sem, obs] = accumulate(prev.semantic, prev.observed, new_sem, new_obs);
  StateRepr out;
  out.semantic = std::move(sem);
  out.observed = std::move(obs);
  out.inventory = o.inventory;
  out.pose = o.pose;
  return out;
}

}  // namespace hlsm
