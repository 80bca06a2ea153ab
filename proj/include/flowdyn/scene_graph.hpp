#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "flowdyn/types.hpp"

namespace flowdyn {

using NodeId = std::int64_t;

struct NavNode {
  NodeId id = 0;
  Position3 position;
  bool alive = true;
};

struct PoseEvent {
  enum class Kind { AddNode, MoveNode, RemoveNode };
  double time = 0.0;
  Kind kind = Kind::AddNode;
  NodeId id = 0;
  Position3 position;  // target position for Add/Move
};

struct BindingNotification {
  enum class Kind { NodeAdded, NodeMoved, NodeRemoved };
  Kind kind = Kind::NodeAdded;
  NodeId id = 0;
  Position3 old_position;
  Position3 new_position;
};

// Minimal layered scene graph: a navigational layer of positioned nodes plus
// a dynamics layer whose members are managed by the binding module. Node ids
// are never reused; removed nodes stay recorded as dead.
class LayeredGraph {
 public:
  const std::map<NodeId, NavNode>& nav_nodes() const { return nodes_; }

  std::size_t alive_count() const {
    std::size_t n = 0;
    for (const auto& [id, node] : nodes_) {
      if (node.alive) ++n;
    }
    return n;
  }

  const NavNode* find(NodeId id) const {
    auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : &it->second;
  }

  std::optional<NodeId> nearest_alive(const Position3& p) const {
    std::optional<NodeId> best;
    double best_d = 0.0;
    for (const auto& [id, node] : nodes_) {
      if (!node.alive) continue;
      const double dx = node.position.x - p.x;
      const double dy = node.position.y - p.y;
      const double dz = node.position.z - p.z;
      const double d = dx * dx + dy * dy + dz * dz;
      if (!best || d < best_d) {
        best = id;
        best_d = d;
      }
    }
    return best;
  }

  std::vector<BindingNotification> apply_event(const PoseEvent& ev) {
    std::vector<BindingNotification> out;
    switch (ev.kind) {
      case PoseEvent::Kind::AddNode: {
        auto it = nodes_.find(ev.id);
        if (it != nodes_.end() && it->second.alive) {
          throw std::invalid_argument("apply_event: Add of existing id");
        }
        if (it != nodes_.end()) {
          throw std::invalid_argument("apply_event: node ids are never reused");
        }
        if (!is_finite(ev.position)) throw std::invalid_argument("apply_event: non-finite position");
        nodes_[ev.id] = NavNode{ev.id, ev.position, true};
        out.push_back({BindingNotification::Kind::NodeAdded, ev.id, ev.position, ev.position});
        break;
      }
      case PoseEvent::Kind::MoveNode: {
        auto it = nodes_.find(ev.id);
        if (it == nodes_.end() || !it->second.alive) {
          throw std::invalid_argument("apply_event: Move of unknown or dead id");
        }
        const Position3 old = it->second.position;
        it->second.position = ev.position;
        out.push_back({BindingNotification::Kind::NodeMoved, ev.id, old, ev.position});
        break;
      }
      case PoseEvent::Kind::RemoveNode: {
        auto it = nodes_.find(ev.id);
        if (it == nodes_.end() || !it->second.alive) {
          throw std::invalid_argument("apply_event: Remove of unknown or dead id");
        }
        it->second.alive = false;
        out.push_back({BindingNotification::Kind::NodeRemoved, ev.id, it->second.position,
                       it->second.position});
        break;
      }
    }
    return out;
  }

  // Reinsert a persisted node; used by snapshot loading only.
  void restore_node(const NavNode& node) {
    nodes_[node.id] = node;
    if (node.id >= next_id_) next_id_ = node.id + 1;
  }

  NodeId add_node(const Position3& p) {
    const NodeId id = next_id_++;
    apply_event({0.0, PoseEvent::Kind::AddNode, id, p});
    return id;
  }

 private:
  std::map<NodeId, NavNode> nodes_;
  NodeId next_id_ = 1;
};

struct Bounds2D {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  bool contains(double x, double y) const {
    return x >= min_x && x <= max_x && y >= min_y && y <= max_y;
  }
};

// Navigational nodes at the centers of a regular grid over the bounds.
inline LayeredGraph build_nav_layer(const Bounds2D& bounds, double node_spacing) {
  if (node_spacing <= 0.0) throw std::invalid_argument("build_nav_layer: spacing must be > 0");
  if (!(bounds.width() > 0.0) || !(bounds.height() > 0.0)) {
    throw std::invalid_argument("build_nav_layer: degenerate bounds");
  }
  LayeredGraph g;
  const int nx = static_cast<int>(std::ceil(bounds.width() / node_spacing));
  const int ny = static_cast<int>(std::ceil(bounds.height() / node_spacing));
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      g.add_node({bounds.min_x + (ix + 0.5) * node_spacing,
                  bounds.min_y + (iy + 0.5) * node_spacing, 0.0});
    }
  }
  return g;
}

// Pose-event stream: one event per line,
//   t=<sec> ADD <id> <x> <y> <z>
//   t=<sec> MOVE <id> <x> <y> <z>
//   t=<sec> REMOVE <id>
inline std::vector<PoseEvent> parse_pose_events(std::istream& in) {
  std::vector<PoseEvent> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tfield, op;
    ss >> tfield >> op;
    if (tfield.rfind("t=", 0) != 0 || !ss) {
      throw std::runtime_error("pose events: malformed line " + std::to_string(lineno));
    }
    PoseEvent ev;
    ev.time = std::stod(tfield.substr(2));
    if (op == "ADD" || op == "MOVE") {
      ev.kind = op == "ADD" ? PoseEvent::Kind::AddNode : PoseEvent::Kind::MoveNode;
      ss >> ev.id >> ev.position.x >> ev.position.y >> ev.position.z;
    } else if (op == "REMOVE") {
      ev.kind = PoseEvent::Kind::RemoveNode;
      ss >> ev.id;
    } else {
      throw std::runtime_error("pose events: unknown op at line " + std::to_string(lineno));
    }
    if (ss.fail()) {
      throw std::runtime_error("pose events: malformed line " + std::to_string(lineno));
    }
    if (!out.empty() && ev.time < out.back().time) {
      throw std::runtime_error("pose events: out-of-order timestamp at line " +
                               std::to_string(lineno));
    }
    out.push_back(ev);
  }
  return out;
}

inline std::vector<PoseEvent> load_pose_events(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pose event file: " + path);
  return parse_pose_events(in);
}

}  // namespace flowdyn
