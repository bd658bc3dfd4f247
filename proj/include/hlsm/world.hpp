#pragma once

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hlsm/camera.hpp"
#include "hlsm/instruction.hpp"
#include "hlsm/types.hpp"

namespace hlsm {

class SceneError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ObjectInstance {
  std::string id;
  int cls = 0;
  std::vector<Voxel> voxels;  // empty while held (and while riding inside a held container)
  std::vector<Voxel> shape;   // canonical voxel layout, min corner at origin
  bool open = false;
  bool toggled = false;
  bool clean = false;
  bool hot = false;
  bool cold = false;
  bool sliced = false;
  std::optional<std::string> contained_in;
  std::vector<std::string> contents;  // insertion order
};

// Ground-truth world: static floor/wall voxels, object instances, agent.
struct WorldState {
  GridConfig grid;
  CameraIntrinsics camera;
  Grid3<int> static_class;  // -1 empty, else class id
  std::vector<ObjectInstance> objects;
  std::map<std::string, int> object_index;
  Pose agent;
  std::optional<std::string> held;
  TaskSpec task;
  std::string instruction;

  const ObjectInstance* find(const std::string& id) const {
    auto it = object_index.find(id);
    return it == object_index.end() ? nullptr : &objects[it->second];
  }
  ObjectInstance* find(const std::string& id) {
    auto it = object_index.find(id);
    return it == object_index.end() ? nullptr : &objects[it->second];
  }

  InventoryVector inventory() const {
    InventoryVector inv(grid.num_classes());
    if (held) inv.set_held(find(*held)->cls);
    return inv;
  }

  // True when every enclosing container up the chain is open.
  bool visible(const ObjectInstance& obj) const {
    const ObjectInstance* cur = &obj;
    while (cur->contained_in) {
      const ObjectInstance* container = find(*cur->contained_in);
      if (!container) return true;
      if (grid.classes.has_affordance(container->cls, Affordance::Openable) && !container->open)
        return false;
      cur = container;
    }
    return true;
  }

  // Class a noiseless sensor would report for the voxel: objects hidden in
  // closed receptacles read as background, like the renderer treats them.
  int sensed_class(int x, int y, int z) const {
    for (const auto& obj : objects) {
      if (!visible(obj)) continue;
      for (const Voxel& v : obj.voxels)
        if (v.x == x && v.y == y && v.z == z) return obj.cls;
    }
    const int s = static_class.at(x, y, z);
    return s >= 0 ? s : 0;
  }

  bool column_blocked(int x, int y, int z_limit) const {
    if (x < 0 || x >= grid.dims_x || y < 0 || y >= grid.dims_y) return true;
    for (int z = 0; z < z_limit; ++z) {
      const int s = static_class.at(x, y, z);
      if (s >= 0 && grid.classes.has_affordance(s, Affordance::Obstacle)) return true;
    }
    for (const auto& obj : objects) {
      if (!grid.classes.has_affordance(obj.cls, Affordance::Obstacle)) continue;
      for (const Voxel& v : obj.voxels)
        if (v.x == x && v.y == y && v.z < z_limit) return true;
    }
    return false;
  }
};

namespace detail {

inline std::vector<std::string> scene_tokens(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == '#') break;
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline int scene_int(const std::string& tok, int lineno) {
  try {
    size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (...) {
    throw SceneError("line " + std::to_string(lineno) + ": expected integer, got '" + tok + "'");
  }
}

inline double scene_double(const std::string& tok, int lineno) {
  try {
    size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (...) {
    throw SceneError("line " + std::to_string(lineno) + ": expected number, got '" + tok + "'");
  }
}

}  // namespace detail

// Scene schema (one record per line, '#' comments):
//   HLSMSCENE v1
//   dims X Y Z
//   voxel_size S
//   camera W H HFOV HEIGHT                (optional)
//   agent X Y <North|East|South|West> PITCH
//   floor X0 Y0 X1 Y1                      (Floor at z=0, inclusive rect)
//   rug X0 Y0 X1 Y1                        (Rug at z=0)
//   wall X0 Y0 X1 Y1 Z0 Z1                 (Wall box)
//   object ID CLASS {voxel X Y Z | box X0 Y0 Z0 X1 Y1 Z1}...
//          [open|toggled|clean|hot|cold|sliced]... [in=ID]
//   task TYPE OBJECT [RECEPTACLE] [INTERMEDIATE] [sliced]
//   instruction TEXT...
// Later static records paint over earlier ones. Exactly one of task /
// instruction is required.
inline WorldState load_scene(std::istream& in, const ClassTable& classes) {
  WorldState w;
  w.grid.classes = classes;
  w.grid.dims_x = 0;  // must come from the file before any geometry

  std::string line;
  int lineno = 0;
  bool header = false, have_agent = false, have_task = false;
  std::vector<std::pair<std::string, int>> containments;  // object id -> line, resolved at end

  auto require_dims = [&](int lineno_) {
    if (w.grid.dims_x == 0)
      throw SceneError("line " + std::to_string(lineno_) + ": dims must precede geometry");
  };
  auto static_class_id = [&](const char* name) {
    auto c = classes.index_of(name);
    if (!c) throw SceneError(std::string("class table is missing '") + name + "'");
    return *c;
  };

  while (std::getline(in, line)) {
    ++lineno;
    auto t = detail::scene_tokens(line);
    if (t.empty()) continue;
    if (!header) {
      if (t.size() != 2 || t[0] != "HLSMSCENE" || t[1] != "v1")
        throw SceneError("line 1: expected header 'HLSMSCENE v1'");
      header = true;
      continue;
    }
    const std::string& kind = t[0];
    if (kind == "dims") {
      if (t.size() != 4) throw SceneError("line " + std::to_string(lineno) + ": dims X Y Z");
      w.grid.dims_x = detail::scene_int(t[1], lineno);
      w.grid.dims_y = detail::scene_int(t[2], lineno);
      w.grid.dims_z = detail::scene_int(t[3], lineno);
      w.grid.validate();
      w.static_class = Grid3<int>(w.grid.dims_x, w.grid.dims_y, w.grid.dims_z, -1);
    } else if (kind == "voxel_size") {
      if (t.size() != 2) throw SceneError("line " + std::to_string(lineno) + ": voxel_size S");
      w.grid.voxel_size = detail::scene_double(t[1], lineno);
      if (w.grid.voxel_size <= 0)
        throw SceneError("line " + std::to_string(lineno) + ": voxel_size must be positive");
    } else if (kind == "camera") {
      if (t.size() != 5)
        throw SceneError("line " + std::to_string(lineno) + ": camera W H HFOV HEIGHT");
      w.camera.width = detail::scene_int(t[1], lineno);
      w.camera.height = detail::scene_int(t[2], lineno);
      w.camera.horizontal_fov_deg = detail::scene_double(t[3], lineno);
      w.camera.camera_height = detail::scene_double(t[4], lineno);
      w.camera.validate();
    } else if (kind == "agent") {
      if (t.size() != 5)
        throw SceneError("line " + std::to_string(lineno) + ": agent X Y YAW PITCH");
      require_dims(lineno);
      w.agent.x = detail::scene_int(t[1], lineno);
      w.agent.y = detail::scene_int(t[2], lineno);
      const auto yaw = yaw_from_name(t[3]);
      if (!yaw) throw SceneError("line " + std::to_string(lineno) + ": bad yaw '" + t[3] + "'");
      w.agent.yaw = *yaw;
      w.agent.pitch = detail::scene_int(t[4], lineno);
      if (!w.grid.pose_in_bounds(w.agent))
        throw SceneError("line " + std::to_string(lineno) + ": agent pose out of bounds");
      have_agent = true;
    } else if (kind == "floor" || kind == "rug" || kind == "wall") {
      require_dims(lineno);
      const bool is_wall = kind == "wall";
      const size_t want = is_wall ? 7 : 5;
      if (t.size() != want)
        throw SceneError("line " + std::to_string(lineno) + ": malformed " + kind + " record");
      const int x0 = detail::scene_int(t[1], lineno), y0 = detail::scene_int(t[2], lineno);
      const int x1 = detail::scene_int(t[3], lineno), y1 = detail::scene_int(t[4], lineno);
      const int z0 = is_wall ? detail::scene_int(t[5], lineno) : 0;
      const int z1 = is_wall ? detail::scene_int(t[6], lineno) : 0;
      const int cls = static_class_id(is_wall ? "Wall" : (kind == "rug" ? "Rug" : "Floor"));
      for (int x = x0; x <= x1; ++x)
        for (int y = y0; y <= y1; ++y)
          for (int z = z0; z <= z1; ++z) {
            if (!w.static_class.in_bounds(x, y, z))
              throw SceneError("line " + std::to_string(lineno) + ": " + kind + " out of bounds");
            w.static_class.at(x, y, z) = cls;
          }
    } else if (kind == "object") {
      require_dims(lineno);
      if (t.size() < 3)
        throw SceneError("line " + std::to_string(lineno) + ": object needs id and class");
      ObjectInstance obj;
      obj.id = t[1];
      if (w.object_index.count(obj.id))
        throw SceneError("line " + std::to_string(lineno) + ": duplicate object id '" + obj.id + "'");
      const auto cls = classes.index_of(t[2]);
      if (!cls)
        throw SceneError("line " + std::to_string(lineno) + ": unknown class '" + t[2] + "'");
      obj.cls = *cls;
      size_t i = 3;
      while (i < t.size()) {
        if (t[i] == "voxel") {
          if (i + 3 >= t.size())
            throw SceneError("line " + std::to_string(lineno) + ": voxel X Y Z");
          obj.voxels.push_back({detail::scene_int(t[i + 1], lineno),
                                detail::scene_int(t[i + 2], lineno),
                                detail::scene_int(t[i + 3], lineno)});
          i += 4;
        } else if (t[i] == "box") {
          if (i + 6 >= t.size())
            throw SceneError("line " + std::to_string(lineno) + ": box X0 Y0 Z0 X1 Y1 Z1");
          const int x0 = detail::scene_int(t[i + 1], lineno), y0 = detail::scene_int(t[i + 2], lineno);
          const int z0 = detail::scene_int(t[i + 3], lineno), x1 = detail::scene_int(t[i + 4], lineno);
          const int y1 = detail::scene_int(t[i + 5], lineno), z1 = detail::scene_int(t[i + 6], lineno);
          for (int x = x0; x <= x1; ++x)
            for (int y = y0; y <= y1; ++y)
              for (int z = z0; z <= z1; ++z) obj.voxels.push_back({x, y, z});
          i += 7;
        } else if (t[i] == "open") {
          obj.open = true;
          ++i;
        } else if (t[i] == "toggled") {
          obj.toggled = true;
          ++i;
        } else if (t[i] == "clean") {
          obj.clean = true;
          ++i;
        } else if (t[i] == "hot") {
          obj.hot = true;
          ++i;
        } else if (t[i] == "cold") {
          obj.cold = true;
          ++i;
        } else if (t[i] == "sliced") {
          obj.sliced = true;
          ++i;
        } else if (t[i].rfind("in=", 0) == 0) {
          obj.contained_in = t[i].substr(3);
          containments.push_back({obj.id, lineno});
          ++i;
        } else {
          throw SceneError("line " + std::to_string(lineno) + ": unknown object token '" + t[i] + "'");
        }
      }
      if (obj.voxels.empty())
        throw SceneError("line " + std::to_string(lineno) + ": object '" + obj.id + "' has no voxels");
      for (const Voxel& v : obj.voxels)
        if (!w.static_class.in_bounds(v))
          throw SceneError("line " + std::to_string(lineno) + ": object '" + obj.id +
                           "' voxel out of bounds");
      std::sort(obj.voxels.begin(), obj.voxels.end());
      obj.voxels.erase(std::unique(obj.voxels.begin(), obj.voxels.end()), obj.voxels.end());
      const Voxel m = obj.voxels.front();
      Voxel mn = m;
      for (const Voxel& v : obj.voxels) {
        mn.x = std::min(mn.x, v.x);
        mn.y = std::min(mn.y, v.y);
        mn.z = std::min(mn.z, v.z);
      }
      for (const Voxel& v : obj.voxels) obj.shape.push_back({v.x - mn.x, v.y - mn.y, v.z - mn.z});
      w.object_index[obj.id] = static_cast<int>(w.objects.size());
      w.objects.push_back(std::move(obj));
    } else if (kind == "task") {
      if (t.size() < 3) throw SceneError("line " + std::to_string(lineno) + ": task TYPE OBJECT ...");
      const auto type = task_type_from_name(t[1]);
      if (!type)
        throw SceneError("line " + std::to_string(lineno) + ": unknown task type '" + t[1] + "'");
      w.task.type = *type;
      std::vector<std::string> args;
      for (size_t i = 2; i < t.size(); ++i) {
        if (t[i] == "sliced")
          w.task.sliced = true;
        else
          args.push_back(t[i]);
      }
      auto resolve = [&](const std::string& name) {
        const auto c = classes.index_of(name);
        if (!c)
          throw SceneError("line " + std::to_string(lineno) + ": unknown class '" + name + "'");
        return *c;
      };
      w.task.object_class = resolve(args.at(0));
      if (w.task.type != TaskType::Examine) {
        if (args.size() < 2)
          throw SceneError("line " + std::to_string(lineno) + ": task needs a receptacle");
        w.task.receptacle_class = resolve(args[1]);
      }
      if (w.task.type == TaskType::StackAndPlace) {
        if (args.size() < 3)
          throw SceneError("line " + std::to_string(lineno) + ": StackAndPlace needs an intermediate");
        w.task.intermediate_class = resolve(args[2]);
      }
      w.instruction = render_instruction(w.task, classes);
      have_task = true;
    } else if (kind == "instruction") {
      const auto pos = line.find("instruction");
      w.instruction = line.substr(pos + 11);
      while (!w.instruction.empty() && std::isspace(static_cast<unsigned char>(w.instruction.front())))
        w.instruction.erase(w.instruction.begin());
      w.task = parse_instruction(w.instruction, classes);
      have_task = true;
    } else {
      throw SceneError("line " + std::to_string(lineno) + ": unknown record '" + kind + "'");
    }
  }

  if (!header) throw SceneError("empty scene file");
  if (w.grid.dims_x == 0) throw SceneError("scene has no dims record");
  if (!have_agent) throw SceneError("scene has no agent record");
  if (!have_task) throw SceneError("scene has no task or instruction record");

  // Containment targets exist and form a forest.
  for (const auto& [id, ln] : containments) {
    ObjectInstance* obj = w.find(id);
    ObjectInstance* container = w.find(*obj->contained_in);
    if (!container)
      throw SceneError("line " + std::to_string(ln) + ": container '" + *obj->contained_in +
                       "' of '" + id + "' does not exist");
    container->contents.push_back(id);
  }
  for (const auto& obj : w.objects) {
    const ObjectInstance* cur = &obj;
    int hops = 0;
    while (cur->contained_in) {
      cur = w.find(*cur->contained_in);
      if (++hops > static_cast<int>(w.objects.size()))
        throw SceneError("containment cycle involving '" + obj.id + "'");
    }
  }

  // No two solids in one voxel.
  Grid3<int> occupancy(w.grid.dims_x, w.grid.dims_y, w.grid.dims_z, -1);
  for (size_t i = 0; i < w.objects.size(); ++i) {
    for (const Voxel& v : w.objects[i].voxels) {
      if (w.static_class.at(v) >= 0)
        throw SceneError("object '" + w.objects[i].id + "' overlaps static geometry");
      if (occupancy.at(v) >= 0)
        throw SceneError("object '" + w.objects[i].id + "' overlaps '" +
                         w.objects[occupancy.at(v)].id + "'");
      occupancy.at(v) = static_cast<int>(i);
    }
  }
  const int zlim = std::min(static_cast<int>(std::floor(1.75 / w.grid.voxel_size + 1e-9)),
                            w.grid.dims_z);
  if (w.column_blocked(w.agent.x, w.agent.y, zlim))
    throw SceneError("agent cell is occupied by an obstacle");
  return w;
}

inline WorldState load_scene_file(const std::string& path, const ClassTable& classes) {
  std::ifstream f(path);
  if (!f) throw SceneError("cannot open scene: " + path);
  return load_scene(f, classes);
}

}  // namespace hlsm
