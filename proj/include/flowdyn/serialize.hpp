#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowdyn/binding.hpp"
#include "flowdyn/pipeline.hpp"
#include "flowdyn/simulator.hpp"

namespace flowdyn {

using ordered_json = nlohmann::ordered_json;

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& known,
                                const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.contains(key)) {
      throw std::runtime_error(where + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace detail

// --- scenario files ---

inline FlowScenario scenario_from_json(const nlohmann::json& j) {
  detail::reject_unknown_keys(j,
                              {"version", "bounds", "corridors", "agents", "heading_noise",
                               "detection_rate", "duration"},
                              "scenario");
  if (j.value("version", 0) != 1) throw std::runtime_error("scenario: unsupported version");
  FlowScenario sc;
  const auto& b = j.at("bounds");
  detail::reject_unknown_keys(b, {"min_x", "min_y", "max_x", "max_y"}, "scenario.bounds");
  sc.bounds = {b.at("min_x"), b.at("min_y"), b.at("max_x"), b.at("max_y")};
  for (const auto& cj : j.at("corridors")) {
    detail::reject_unknown_keys(
        cj, {"points", "lateral_sigma", "speed_mean", "speed_sigma", "weight"},
        "scenario.corridor");
    Corridor c;
    for (const auto& pt : cj.at("points")) {
      c.points.emplace_back(pt.at(0).get<double>(), pt.at(1).get<double>());
    }
    c.lateral_sigma = cj.value("lateral_sigma", 0.3);
    c.speed_mean = cj.value("speed_mean", 1.0);
    c.speed_sigma = cj.value("speed_sigma", 0.15);
    c.weight = cj.value("weight", 1.0);
    sc.corridors.push_back(std::move(c));
  }
  sc.agents = j.value("agents", 7);
  sc.heading_noise = j.value("heading_noise", 0.2);
  sc.detection_rate = j.value("detection_rate", 5.0);
  sc.duration = j.value("duration", 300.0);
  return sc;
}

inline FlowScenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  nlohmann::json j;
  in >> j;
  return scenario_from_json(j);
}

// --- run configuration ---

inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  detail::reject_unknown_keys(
      j,
      {"version", "resolution", "nav_spacing", "reservoir_capacity", "bins",
       "update_interval", "bind_interval", "stabilization_tau", "significance_threshold",
       "k_max", "winding", "em_max_iters", "em_loglik_tol", "min_samples_per_component",
       "cov_floor", "cs_epsilon", "fitter", "parallelism"},
      "config");
  if (j.value("version", 0) != 1) throw std::runtime_error("config: unsupported version");
  PipelineConfig c;
  c.resolution = j.value("resolution", c.resolution);
  c.nav_spacing = j.value("nav_spacing", c.resolution);
  c.reservoir_capacity = j.value("reservoir_capacity", c.reservoir_capacity);
  c.bins = j.value("bins", c.bins);
  c.update_interval = j.value("update_interval", c.update_interval);
  c.bind_interval = j.value("bind_interval", c.bind_interval);
  c.tracker.tau = j.value("stabilization_tau", c.tracker.tau);
  c.tracker.significance_threshold =
      j.value("significance_threshold", c.tracker.significance_threshold);
  c.fit.k_max = j.value("k_max", c.fit.k_max);
  c.fit.winding = j.value("winding", c.fit.winding);
  c.fit.em_max_iters = j.value("em_max_iters", c.fit.em_max_iters);
  c.fit.em_loglik_tol = j.value("em_loglik_tol", c.fit.em_loglik_tol);
  c.fit.min_samples_per_component =
      j.value("min_samples_per_component", c.fit.min_samples_per_component);
  c.fit.cov_floor = j.value("cov_floor", c.fit.cov_floor);
  c.fit.cs_epsilon = j.value("cs_epsilon", c.fit.cs_epsilon);
  const std::string fitter = j.value("fitter", std::string("bic"));
  if (fitter == "bic") {
    c.fitter = FitterKind::BicSweep;
  } else if (fitter == "meanshift") {
    c.fitter = FitterKind::MeanShift;
  } else {
    throw std::runtime_error("config: fitter must be 'bic' or 'meanshift'");
  }
  c.parallelism = j.value("parallelism", 1u);
  return c;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  in >> j;
  return pipeline_config_from_json(j);
}

inline ordered_json pipeline_config_to_json(const PipelineConfig& c) {
  ordered_json j;
  j["version"] = 1;
  j["resolution"] = c.resolution;
  j["nav_spacing"] = c.nav_spacing;
  j["reservoir_capacity"] = c.reservoir_capacity;
  j["bins"] = c.bins;
  j["update_interval"] = c.update_interval;
  j["bind_interval"] = c.bind_interval;
  j["stabilization_tau"] = c.tracker.tau;
  j["significance_threshold"] = c.tracker.significance_threshold;
  j["k_max"] = c.fit.k_max;
  j["winding"] = c.fit.winding;
  j["em_max_iters"] = c.fit.em_max_iters;
  j["em_loglik_tol"] = c.fit.em_loglik_tol;
  j["min_samples_per_component"] = c.fit.min_samples_per_component;
  j["cov_floor"] = c.fit.cov_floor;
  j["cs_epsilon"] = c.fit.cs_epsilon;
  j["fitter"] = c.fitter == FitterKind::BicSweep ? "bic" : "meanshift";
  j["parallelism"] = c.parallelism;
  return j;
}

// --- model snapshot ---

namespace detail {

inline ordered_json model_to_json(const SwGmm& m) {
  ordered_json j;
  j["winding"] = m.winding;
  j["sample_count_at_fit"] = m.sample_count_at_fit;
  ordered_json comps = ordered_json::array();
  for (const auto& c : m.components) {
    comps.push_back({{"weight", c.weight},
                     {"mu_theta", c.mu_theta},
                     {"mu_rho", c.mu_rho},
                     {"sigma_tt", c.sigma_tt},
                     {"sigma_tr", c.sigma_tr},
                     {"sigma_rr", c.sigma_rr}});
  }
  j["components"] = comps;
  return j;
}

inline SwGmm model_from_json(const nlohmann::json& j) {
  SwGmm m;
  m.winding = j.at("winding");
  m.sample_count_at_fit = j.at("sample_count_at_fit");
  for (const auto& cj : j.at("components")) {
    SwComponent c;
    c.weight = cj.at("weight");
    c.mu_theta = cj.at("mu_theta");
    c.mu_rho = cj.at("mu_rho");
    c.sigma_tt = cj.at("sigma_tt");
    c.sigma_tr = cj.at("sigma_tr");
    c.sigma_rr = cj.at("sigma_rr");
    m.components.push_back(c);
  }
  return m;
}

inline ordered_json cell_to_json(const DynamicsCell& cell) {
  ordered_json j;
  ordered_json entries = ordered_json::array();
  for (const auto& z : cell.buffer.entries()) {
    entries.push_back({z.theta, z.rho, z.timestamp});
  }
  j["buffer"] = {{"capacity", cell.buffer.capacity()},
                 {"total_seen", cell.buffer.total_seen()},
                 {"entries", std::move(entries)}};
  j["histogram"] = {{"bins", cell.histogram.bins()},
                    {"counts", cell.histogram.counts()},
                    {"total", cell.histogram.total()}};
  if (cell.model) j["model"] = model_to_json(*cell.model);
  j["last_fit_time"] = cell.last_fit_time;
  return j;
}

inline DynamicsCell cell_from_json(const nlohmann::json& j) {
  const auto& bj = j.at("buffer");
  const auto& hj = j.at("histogram");
  DynamicsCell cell(bj.at("capacity").get<std::size_t>(), hj.at("bins").get<int>());
  std::vector<CylindricalSample> entries;
  for (const auto& ej : bj.at("entries")) {
    entries.emplace_back(ej.at(0).get<double>(), ej.at(1).get<double>(),
                         ej.at(2).get<double>());
  }
  cell.buffer = ReservoirBuffer::restore(bj.at("capacity").get<std::size_t>(),
                                         std::move(entries),
                                         bj.at("total_seen").get<std::uint64_t>());
  DirHistogram h(hj.at("bins").get<int>());
  h.set_counts(hj.at("counts").get<std::vector<std::uint64_t>>(),
               hj.at("total").get<std::uint64_t>());
  cell.histogram = std::move(h);
  if (j.contains("model")) cell.model = model_from_json(j.at("model"));
  cell.last_fit_time = j.value("last_fit_time", -1.0);
  return cell;
}

}  // namespace detail

struct Snapshot {
  PipelineConfig config;
  Bounds2D bounds;
  LayeredGraph graph;
  DynamicsMap map;

  Snapshot(PipelineConfig cfg, Bounds2D b, LayeredGraph g, DynamicsMap m)
      : config(std::move(cfg)), bounds(b), graph(std::move(g)), map(std::move(m)) {}
};

inline ordered_json snapshot_to_json(const PipelineConfig& cfg, const Bounds2D& bounds,
                                     const LayeredGraph& graph, const DynamicsMap& map) {
  ordered_json j;
  j["format"] = "flowdyn-snapshot v1";
  j["config"] = pipeline_config_to_json(cfg);
  j["bounds"] = {{"min_x", bounds.min_x},
                 {"min_y", bounds.min_y},
                 {"max_x", bounds.max_x},
                 {"max_y", bounds.max_y}};

  ordered_json nodes = ordered_json::array();
  for (const auto& [id, node] : graph.nav_nodes()) {
    nodes.push_back({{"id", id},
                     {"x", node.position.x},
                     {"y", node.position.y},
                     {"z", node.position.z},
                     {"alive", node.alive}});
  }
  j["nav_nodes"] = std::move(nodes);

  std::vector<CellKey> keys;
  for (const auto& [k, c] : map.hash_cells()) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  ordered_json hash_cells = ordered_json::array();
  for (const CellKey& k : keys) {
    ordered_json cj = detail::cell_to_json(map.hash_cells().at(k));
    cj["key"] = {k.ix, k.iy, k.iz};
    hash_cells.push_back(std::move(cj));
  }
  j["hash_cells"] = std::move(hash_cells);

  ordered_json node_cells = ordered_json::array();
  for (const auto& [id, cell] : map.node_cells()) {
    ordered_json cj = detail::cell_to_json(cell);
    cj["node"] = id;
    node_cells.push_back(std::move(cj));
  }
  j["node_cells"] = std::move(node_cells);

  std::vector<std::pair<CellKey, NodeId>> binds(map.cell_bindings().begin(),
                                                map.cell_bindings().end());
  std::sort(binds.begin(), binds.end());
  ordered_json bindings = ordered_json::array();
  for (const auto& [k, id] : binds) {
    bindings.push_back({k.ix, k.iy, k.iz, id});
  }
  j["bindings"] = std::move(bindings);
  return j;
}

inline void save_snapshot(const std::string& path, const PipelineConfig& cfg,
                          const Bounds2D& bounds, const LayeredGraph& graph,
                          const DynamicsMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write snapshot file: " + path);
  out << snapshot_to_json(cfg, bounds, graph, map).dump(1) << "\n";
}

inline Snapshot load_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open snapshot file: " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", std::string{}) != "flowdyn-snapshot v1") {
    throw std::runtime_error("snapshot: unsupported format");
  }
  PipelineConfig cfg = pipeline_config_from_json(j.at("config"));
  const auto& bj = j.at("bounds");
  Bounds2D bounds{bj.at("min_x"), bj.at("min_y"), bj.at("max_x"), bj.at("max_y")};

  LayeredGraph graph;
  for (const auto& nj : j.at("nav_nodes")) {
    graph.restore_node(NavNode{nj.at("id").get<NodeId>(),
                               {nj.at("x"), nj.at("y"), nj.at("z")},
                               nj.at("alive").get<bool>()});
  }

  DynamicsMap map(cfg.resolution, cfg.reservoir_capacity, cfg.bins, cfg.tracker);
  for (const auto& cj : j.at("hash_cells")) {
    const auto& kj = cj.at("key");
    map.restore_hash_cell(CellKey{kj.at(0), kj.at(1), kj.at(2)}, detail::cell_from_json(cj));
  }
  for (const auto& cj : j.at("node_cells")) {
    map.restore_node_cell(cj.at("node").get<NodeId>(), detail::cell_from_json(cj));
  }
  for (const auto& binding : j.at("bindings")) {
    map.restore_binding(CellKey{binding.at(0), binding.at(1), binding.at(2)},
                        binding.at(3).get<NodeId>());
  }
  return Snapshot(std::move(cfg), bounds, std::move(graph), std::move(map));
}

}  // namespace flowdyn
