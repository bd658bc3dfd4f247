#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <vector>

namespace hlsm {

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

struct Voxel {
  int x = 0;
  int y = 0;
  int z = 0;
  friend bool operator==(const Voxel&, const Voxel&) = default;
  friend auto operator<=>(const Voxel&, const Voxel&) = default;
};

// Dense 2D grid, x-major.
template <typename T>
class Grid2 {
 public:
  Grid2() = default;
  Grid2(int nx, int ny, T fill = T{}) : nx_(nx), ny_(ny), v_(static_cast<size_t>(nx) * ny, fill) {}

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  bool in_bounds(int x, int y) const { return x >= 0 && x < nx_ && y >= 0 && y < ny_; }

  T& at(int x, int y) { return v_[static_cast<size_t>(x) * ny_ + y]; }
  const T& at(int x, int y) const { return v_[static_cast<size_t>(x) * ny_ + y]; }

  std::vector<T>& data() { return v_; }
  const std::vector<T>& data() const { return v_; }

  friend bool operator==(const Grid2&, const Grid2&) = default;

 private:
  int nx_ = 0, ny_ = 0;
  std::vector<T> v_;
};

// Dense 3D grid, (x, y, z) with z fastest.
template <typename T>
class Grid3 {
 public:
  Grid3() = default;
  Grid3(int nx, int ny, int nz, T fill = T{})
      : nx_(nx), ny_(ny), nz_(nz), v_(static_cast<size_t>(nx) * ny * nz, fill) {}

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nz() const { return nz_; }
  bool in_bounds(int x, int y, int z) const {
    return x >= 0 && x < nx_ && y >= 0 && y < ny_ && z >= 0 && z < nz_;
  }
  bool in_bounds(const Voxel& v) const { return in_bounds(v.x, v.y, v.z); }

  T& at(int x, int y, int z) { return v_[idx(x, y, z)]; }
  const T& at(int x, int y, int z) const { return v_[idx(x, y, z)]; }
  T& at(const Voxel& v) { return at(v.x, v.y, v.z); }
  const T& at(const Voxel& v) const { return at(v.x, v.y, v.z); }

  std::vector<T>& data() { return v_; }
  const std::vector<T>& data() const { return v_; }

  friend bool operator==(const Grid3&, const Grid3&) = default;

 private:
  size_t idx(int x, int y, int z) const {
    return (static_cast<size_t>(x) * ny_ + y) * nz_ + z;
  }
  int nx_ = 0, ny_ = 0, nz_ = 0;
  std::vector<T> v_;
};

// Dense stack of K 2D channel planes: values[k][x][y].
template <typename T>
class ChannelGrid2 {
 public:
  ChannelGrid2() = default;
  ChannelGrid2(int nk, int nx, int ny, T fill = T{})
      : nk_(nk), nx_(nx), ny_(ny), v_(static_cast<size_t>(nk) * nx * ny, fill) {}

  int nk() const { return nk_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }

  T& at(int k, int x, int y) { return v_[(static_cast<size_t>(k) * nx_ + x) * ny_ + y]; }
  const T& at(int k, int x, int y) const { return v_[(static_cast<size_t>(k) * nx_ + x) * ny_ + y]; }

  std::vector<T>& data() { return v_; }
  const std::vector<T>& data() const { return v_; }

  friend bool operator==(const ChannelGrid2&, const ChannelGrid2&) = default;

 private:
  int nk_ = 0, nx_ = 0, ny_ = 0;
  std::vector<T> v_;
};

// Per-voxel distribution over C class channels: values[x][y][z][c].
class SemanticVoxelGrid {
 public:
  SemanticVoxelGrid() = default;
  SemanticVoxelGrid(int nx, int ny, int nz, int nc)
      : nx_(nx), ny_(ny), nz_(nz), nc_(nc), v_(static_cast<size_t>(nx) * ny * nz * nc, 0.0) {}

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nz() const { return nz_; }
  int num_classes() const { return nc_; }

  double& at(int x, int y, int z, int c) { return v_[idx(x, y, z, c)]; }
  double at(int x, int y, int z, int c) const { return v_[idx(x, y, z, c)]; }

  // Index of the strongest class at a voxel; all-zero voxels report class 0,
  // which the shipped class table reserves for Background.
  int argmax_class(int x, int y, int z) const {
    const size_t base = idx(x, y, z, 0);
    int best = 0;
    for (int c = 1; c < nc_; ++c)
      if (v_[base + c] > v_[base + best]) best = c;
    return best;
  }

  double max_over_classes(int x, int y, int z) const {
    const size_t base = idx(x, y, z, 0);
    double m = 0.0;
    for (int c = 0; c < nc_; ++c) m = std::max(m, v_[base + c]);
    return m;
  }

  std::vector<double>& data() { return v_; }
  const std::vector<double>& data() const { return v_; }

  friend bool operator==(const SemanticVoxelGrid&, const SemanticVoxelGrid&) = default;

 private:
  size_t idx(int x, int y, int z, int c) const {
    return ((static_cast<size_t>(x) * ny_ + y) * nz_ + z) * nc_ + c;
  }
  int nx_ = 0, ny_ = 0, nz_ = 0, nc_ = 0;
  std::vector<double> v_;
};

using ObservabilityGrid = Grid3<uint8_t>;
using Mask3D = Grid3<double>;

}  // namespace hlsm
