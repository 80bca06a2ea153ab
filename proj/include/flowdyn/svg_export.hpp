#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowdyn/binding.hpp"
#include "flowdyn/scene_graph.hpp"

namespace flowdyn {

namespace detail {

// Component count to stroke color: K=1 red, K=2 green, K=3 yellow, K=4
// purple; higher orders render dark gray.
inline const char* color_for_order(int k) {
  switch (k) {
    case 1: return "#d62728";
    case 2: return "#2ca02c";
    case 3: return "#e6b800";
    case 4: return "#9467bd";
    default: return "#444444";
  }
}

inline void emit_arrows(std::ostream& out, const Position3& at, const SwGmm& model,
                        double scale) {
  const int k = static_cast<int>(model.components.size());
  const char* color = color_for_order(k);
  char buf[512];
  for (const auto& c : model.components) {
    const double len = std::max(c.mu_rho, 0.05) * scale;
    const double x0 = at.x * scale;
    const double y0 = -at.y * scale;  // SVG y grows downward
    const double x1 = x0 + len * std::cos(c.mu_theta);
    const double y1 = y0 - len * std::sin(c.mu_theta);
    const double width = 0.5 + 4.0 * c.weight;
    const double opacity = 0.25 + 0.75 * c.weight;
    std::snprintf(buf, sizeof(buf),
                  "  <line x1=\"%.3f\" y1=\"%.3f\" x2=\"%.3f\" y2=\"%.3f\" stroke=\"%s\" "
                  "stroke-width=\"%.3f\" stroke-opacity=\"%.3f\" "
                  "marker-end=\"url(#ah)\"/>\n",
                  x0, y0, x1, y1, color, width, opacity);
    out << buf;
  }
}

}  // namespace detail

// Flow-arrow map: one arrow per mixture component. Direction is the component
// mean angle, length is proportional to the mean speed, stroke width and
// opacity scale with the mixture weight, color encodes the component count.
inline void export_svg(const DynamicsMap& map, const LayeredGraph& graph, std::ostream& out,
                       double scale = 40.0) {
  std::size_t fitted = 0;
  for (const auto& [id, c] : map.node_cells()) {
    if (c.model) ++fitted;
  }
  for (const auto& [k, c] : map.hash_cells()) {
    if (c.model) ++fitted;
  }
  if (fitted == 0) throw std::runtime_error("export_svg: no fitted cells");

  double min_x = 1e18, min_y = 1e18, max_x = -1e18, max_y = -1e18;
  auto grow = [&](const Position3& p) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  };
  for (const auto& [id, node] : graph.nav_nodes()) grow(node.position);
  for (const auto& [k, c] : map.hash_cells()) grow(cell_center(k, map.resolution()));

  char buf[512];
  const double pad = 2.0 * scale;
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"%.3f %.3f %.3f %.3f\">\n",
                min_x * scale - pad, -max_y * scale - pad,
                (max_x - min_x) * scale + 2 * pad, (max_y - min_y) * scale + 2 * pad);
  out << buf;
  out << "  <defs><marker id=\"ah\" viewBox=\"0 0 10 10\" refX=\"8\" refY=\"5\" "
         "markerWidth=\"4\" markerHeight=\"4\" orient=\"auto-start-reverse\">"
         "<path d=\"M 0 0 L 10 5 L 0 10 z\" fill=\"context-stroke\"/></marker></defs>\n";

  // node-bound dynamics at node positions, sorted by id
  for (const auto& [id, cell] : map.node_cells()) {
    if (!cell.model) continue;
    const NavNode* node = graph.find(id);
    const Position3 at = node ? node->position : Position3{};
    detail::emit_arrows(out, at, *cell.model, scale);
  }
  // unbound hash cells with models at their box centers, sorted by key
  std::vector<CellKey> keys;
  for (const auto& [k, c] : map.hash_cells()) {
    if (c.model) keys.push_back(k);
  }
  std::sort(keys.begin(), keys.end());
  for (const CellKey& k : keys) {
    detail::emit_arrows(out, cell_center(k, map.resolution()),
                        *map.hash_cells().at(k).model, scale);
  }
  out << "</svg>\n";
}

inline void export_svg_file(const DynamicsMap& map, const LayeredGraph& graph,
                            const std::string& path, double scale = 40.0) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("export_svg: cannot write " + path);
  export_svg(map, graph, out, scale);
}

}  // namespace flowdyn
