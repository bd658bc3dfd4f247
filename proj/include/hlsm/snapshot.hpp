#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "hlsm/types.hpp"

namespace hlsm {

class SnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MapSnapshot {
  int dims_x = 0, dims_y = 0, dims_z = 0, num_classes = 0;
  double voxel_size = 0.25;
  SemanticVoxelGrid semantic;
  ObservabilityGrid observed;
};

// Sparse text snapshot, bit-exact:
//   HLSMMAP v1
//   dims X Y Z C voxel_size
//   x y z c p        (sorted by (x,y,z,c); c = -1 carries observability)
// p prints to 4 decimals; semantic entries that round to 0 are omitted, so an
// export -> import -> export cycle is byte-stable.
inline void export_map(const SemanticVoxelGrid& sem, const ObservabilityGrid& obs,
                       double voxel_size, std::ostream& out) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "dims %d %d %d %d %.4f", sem.nx(), sem.ny(), sem.nz(),
                sem.num_classes(), voxel_size);
  out << "HLSMMAP v1\n" << buf << "\n";
  for (int x = 0; x < sem.nx(); ++x) {
    for (int y = 0; y < sem.ny(); ++y) {
      for (int z = 0; z < sem.nz(); ++z) {
        if (obs.at(x, y, z)) {
          std::snprintf(buf, sizeof(buf), "%d %d %d -1 1.0000", x, y, z);
          out << buf << "\n";
        }
        for (int c = 0; c < sem.num_classes(); ++c) {
          const double p = sem.at(x, y, z, c);
          if (std::lround(p * 10000.0) < 1) continue;
          std::snprintf(buf, sizeof(buf), "%d %d %d %d %.4f", x, y, z, c, p);
          out << buf << "\n";
        }
      }
    }
  }
}

inline void export_map(const StateRepr& state, const GridConfig& cfg, std::ostream& out) {
  export_map(state.semantic, state.observed, cfg.voxel_size, out);
}

inline void export_map_file(const StateRepr& state, const GridConfig& cfg,
                            const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw SnapshotError("cannot write map snapshot: " + path);
  export_map(state, cfg, f);
}

inline MapSnapshot import_map(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "HLSMMAP v1")
    throw SnapshotError("bad snapshot header");
  if (!std::getline(in, line)) throw SnapshotError("missing dims line");
  MapSnapshot snap;
  {
    std::istringstream ls(line);
    std::string kw;
    ls >> kw >> snap.dims_x >> snap.dims_y >> snap.dims_z >> snap.num_classes >> snap.voxel_size;
    if (kw != "dims" || !ls) throw SnapshotError("malformed dims line: " + line);
  }
  snap.semantic = SemanticVoxelGrid(snap.dims_x, snap.dims_y, snap.dims_z, snap.num_classes);
  snap.observed = ObservabilityGrid(snap.dims_x, snap.dims_y, snap.dims_z, 0);
  int lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    int x, y, z, c;
    double p;
    if (!(ls >> x >> y >> z >> c >> p))
      throw SnapshotError("line " + std::to_string(lineno) + ": malformed record");
    if (x < 0 || x >= snap.dims_x || y < 0 || y >= snap.dims_y || z < 0 || z >= snap.dims_z ||
        c < -1 || c >= snap.num_classes)
      throw SnapshotError("line " + std::to_string(lineno) + ": record out of bounds");
    if (c == -1)
      snap.observed.at(x, y, z) = p > 0.5 ? 1 : 0;
    else
      snap.semantic.at(x, y, z, c) = p;
  }
  return snap;
}

inline MapSnapshot import_map_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw SnapshotError("cannot open map snapshot: " + path);
  return import_map(f);
}

}  // namespace hlsm
