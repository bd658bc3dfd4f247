#pragma once

#include <cmath>
#include <limits>
#include <optional>

#include "hlsm/types.hpp"

namespace hlsm {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const {
    const double n = norm();
    return n > 0 ? Vec3{x / n, y / n, z / n} : Vec3{};
  }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
};

struct CameraIntrinsics {
  int width = 64;
  int height = 64;
  double horizontal_fov_deg = 90.0;
  double camera_height = 1.5;  // meters above the agent cell's floor

  void validate() const {
    if (width < 1 || height < 1) throw ConfigError("camera resolution must be >= 1");
    if (horizontal_fov_deg <= 0 || horizontal_fov_deg >= 180)
      throw ConfigError("horizontal fov must be in (0, 180)");
  }

  double focal_px() const {
    return (width / 2.0) / std::tan(horizontal_fov_deg * 3.14159265358979323846 / 360.0);
  }
};

// World-frame camera basis for a pose. Square pixels, principal point at the
// image center; pixel (u,v) covers [u,u+1) x [v,v+1) in continuous coords.
class CameraFrame {
 public:
  CameraFrame(const Pose& pose, const CameraIntrinsics& intr, double voxel_size)
      : intr_(intr), f_(intr.focal_px()) {
    origin_ = {(pose.x + 0.5) * voxel_size, (pose.y + 0.5) * voxel_size, intr.camera_height};
    const Cell fwd = heading_delta(pose.yaw);
    const Cell rgt = heading_delta(rotate_right(pose.yaw));
    const double phi = pose.pitch * 3.14159265358979323846 / 180.0;  // positive = down
    forward_ = {std::cos(phi) * fwd.x, std::cos(phi) * fwd.y, -std::sin(phi)};
    right_ = {static_cast<double>(rgt.x), static_cast<double>(rgt.y), 0.0};
    down_ = forward_.cross(right_);
  }

  const Vec3& origin() const { return origin_; }
  const CameraIntrinsics& intrinsics() const { return intr_; }

  // Unit direction through the center of pixel (u, v).
  Vec3 pixel_ray(int u, int v) const {
    const double xc = (u + 0.5 - intr_.width / 2.0) / f_;
    const double yc = (v + 0.5 - intr_.height / 2.0) / f_;
    return (forward_ + right_ * xc + down_ * yc).normalized();
  }

  struct Projection {
    int u = 0, v = 0;       // pixel containing the point
    double distance = 0.0;  // Euclidean camera-to-point distance
  };

  // Projects a world point; nullopt if behind the camera or outside the image.
  std::optional<Projection> project(const Vec3& p) const {
    const Vec3 d = p - origin_;
    const double fwd = d.dot(forward_);
    if (fwd <= 1e-9) return std::nullopt;
    const double uf = (d.dot(right_) / fwd) * f_ + intr_.width / 2.0;
    const double vf = (d.dot(down_) / fwd) * f_ + intr_.height / 2.0;
    const int u = static_cast<int>(std::floor(uf));
    const int v = static_cast<int>(std::floor(vf));
    if (u < 0 || u >= intr_.width || v < 0 || v >= intr_.height) return std::nullopt;
    return Projection{u, v, d.norm()};
  }

 private:
  CameraIntrinsics intr_;
  double f_;
  Vec3 origin_, forward_, right_, down_;
};

// Amanatides-Woo voxel traversal. Calls visit(voxel, t_entry, t_exit) for
// every grid cell the ray crosses, in order; stops when visit returns false.
// t is the ray parameter in meters (dir must be unit length).
template <typename Visit>
void traverse_voxels(const Vec3& origin, const Vec3& dir, double voxel_size, int nx, int ny,
                     int nz, Visit&& visit) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const double ext[3] = {nx * voxel_size, ny * voxel_size, nz * voxel_size};
  const double o[3] = {origin.x, origin.y, origin.z};
  const double d[3] = {dir.x, dir.y, dir.z};

  // Ray/box slab intersection to find the parameter window inside the grid.
  double t0 = 0.0, t1 = kInf;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-12) {
      if (o[a] < 0.0 || o[a] >= ext[a]) return;
      continue;
    }
    double ta = (0.0 - o[a]) / d[a];
    double tb = (ext[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 >= t1) return;

  // Nudge inside the boundary to pick a well-defined start cell.
  const double t_start = t0 + 1e-9;
  int cell[3];
  const int dims[3] = {nx, ny, nz};
  for (int a = 0; a < 3; ++a) {
    const double p = o[a] + d[a] * t_start;
    cell[a] = static_cast<int>(std::floor(p / voxel_size));
    if (cell[a] < 0) cell[a] = 0;
    if (cell[a] >= dims[a]) cell[a] = dims[a] - 1;
  }

  int step[3];
  double t_max[3], t_delta[3];
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-12) {
      step[a] = 0;
      t_max[a] = kInf;
      t_delta[a] = kInf;
    } else if (d[a] > 0) {
      step[a] = 1;
      t_max[a] = ((cell[a] + 1) * voxel_size - o[a]) / d[a];
      t_delta[a] = voxel_size / d[a];
    } else {
      step[a] = -1;
      t_max[a] = (cell[a] * voxel_size - o[a]) / d[a];
      t_delta[a] = voxel_size / -d[a];
    }
  }

  double t_entry = t0;
  while (t_entry < t1) {
    int axis = 0;
    if (t_max[1] < t_max[axis]) axis = 1;
    if (t_max[2] < t_max[axis]) axis = 2;
    const double t_exit = std::min(t_max[axis], t1);
    if (!visit(Voxel{cell[0], cell[1], cell[2]}, t_entry, t_exit)) return;
    t_entry = t_max[axis];
    cell[axis] += step[axis];
    if (cell[axis] < 0 || cell[axis] >= dims[axis]) return;
    t_max[axis] += t_delta[axis];
  }
}

}  // namespace hlsm
