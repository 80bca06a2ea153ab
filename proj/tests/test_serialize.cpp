#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "flowdyn/eval.hpp"
#include "flowdyn/serialize.hpp"

using namespace flowdyn;

namespace {

nlohmann::json minimal_scenario_json() {
  return nlohmann::json{
      {"version", 1},
      {"bounds", {{"min_x", 0.0}, {"min_y", 0.0}, {"max_x", 12.0}, {"max_y", 6.0}}},
      {"corridors",
       {{{"points", {{1.0, 3.0}, {11.0, 3.0}}}, {"speed_mean", 1.2}}}},
      {"agents", 5},
      {"duration", 60.0}};
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/flowdyn_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(ScenarioJson, ParsesWithDefaults) {
  const auto sc = scenario_from_json(minimal_scenario_json());
  EXPECT_DOUBLE_EQ(sc.bounds.max_x, 12.0);
  ASSERT_EQ(sc.corridors.size(), 1u);
  EXPECT_DOUBLE_EQ(sc.corridors[0].speed_mean, 1.2);
  EXPECT_DOUBLE_EQ(sc.corridors[0].lateral_sigma, 0.3);  // default
  EXPECT_EQ(sc.agents, 5);
  EXPECT_DOUBLE_EQ(sc.detection_rate, 5.0);  // default
}

TEST(ScenarioJson, RejectsUnknownKeysAndBadVersion) {
  auto j = minimal_scenario_json();
  j["spee_mean"] = 2.0;  // typo must fail fast, not be ignored
  EXPECT_THROW(scenario_from_json(j), std::runtime_error);
  auto v = minimal_scenario_json();
  v["version"] = 2;
  EXPECT_THROW(scenario_from_json(v), std::runtime_error);
}

TEST(ConfigJson, RoundTripPreservesEveryField) {
  PipelineConfig c;
  c.resolution = 0.25;
  c.nav_spacing = 0.75;
  c.reservoir_capacity = 123;
  c.bins = 16;
  c.update_interval = 7.0;
  c.tracker.tau = 4.5;
  c.fit.k_max = 4;
  c.fit.winding = 2;
  c.fit.cov_floor = 1e-3;
  c.fitter = FitterKind::MeanShift;
  c.parallelism = 3;
  const auto j = pipeline_config_to_json(c);
  const auto back = pipeline_config_from_json(j);
  EXPECT_DOUBLE_EQ(back.resolution, c.resolution);
  EXPECT_DOUBLE_EQ(back.nav_spacing, c.nav_spacing);
  EXPECT_EQ(back.reservoir_capacity, c.reservoir_capacity);
  EXPECT_EQ(back.bins, c.bins);
  EXPECT_DOUBLE_EQ(back.update_interval, c.update_interval);
  EXPECT_DOUBLE_EQ(back.tracker.tau, c.tracker.tau);
  EXPECT_EQ(back.fit.k_max, c.fit.k_max);
  EXPECT_EQ(back.fit.winding, c.fit.winding);
  EXPECT_DOUBLE_EQ(back.fit.cov_floor, c.fit.cov_floor);
  EXPECT_EQ(back.fitter, FitterKind::MeanShift);
  EXPECT_EQ(back.parallelism, 3u);
}

TEST(ConfigJson, RejectsUnknownKeysAndBadFitter) {
  nlohmann::json j{{"version", 1}, {"resolutoin", 0.5}};
  EXPECT_THROW(pipeline_config_from_json(j), std::runtime_error);
  nlohmann::json bad_fitter{{"version", 1}, {"fitter", "gradient"}};
  EXPECT_THROW(pipeline_config_from_json(bad_fitter), std::runtime_error);
  nlohmann::json no_version{{"resolution", 0.5}};
  EXPECT_THROW(pipeline_config_from_json(no_version), std::runtime_error);
}

TEST(Snapshot, RoundTripPreservesMapState) {
  FlowScenario sc;
  sc.bounds = {0.0, 0.0, 12.0, 6.0};
  Corridor c;
  c.points = {{1.0, 3.0}, {11.0, 3.0}};
  sc.corridors.push_back(c);
  sc.agents = 5;
  sc.duration = 60.0;
  const auto train = generate(sc, 5);
  PipelineConfig cfg;
  cfg.fit.rng_seed = 3;
  Pipeline p = run_pipeline(train, {}, sc.bounds, cfg, 17);

  TempFile f("snapshot.json");
  save_snapshot(f.path, cfg, sc.bounds, p.graph, p.map);
  const Snapshot s = load_snapshot(f.path);

  EXPECT_EQ(s.map.total_observations(), p.map.total_observations());
  EXPECT_EQ(s.map.hash_cells().size(), p.map.hash_cells().size());
  EXPECT_EQ(s.map.node_cells().size(), p.map.node_cells().size());
  EXPECT_EQ(s.map.cell_bindings().size(), p.map.cell_bindings().size());
  EXPECT_EQ(s.graph.alive_count(), p.graph.alive_count());

  for (const auto& [id, cell] : p.map.node_cells()) {
    const auto& other = s.map.node_cells().at(id);
    EXPECT_EQ(other.buffer.total_seen(), cell.buffer.total_seen());
    EXPECT_EQ(other.histogram.counts(), cell.histogram.counts());
    ASSERT_EQ(other.model.has_value(), cell.model.has_value());
    if (!cell.model) continue;
    ASSERT_EQ(other.model->components.size(), cell.model->components.size());
    for (std::size_t i = 0; i < cell.model->components.size(); ++i) {
      EXPECT_EQ(other.model->components[i].mu_theta, cell.model->components[i].mu_theta);
      EXPECT_EQ(other.model->components[i].sigma_tt, cell.model->components[i].sigma_tt);
    }
  }

  // a reloaded snapshot answers queries identically
  for (std::size_t i = 0; i < train.size(); i += 97) {
    const DynamicsCell* a = p.map.lookup(train[i].position);
    const DynamicsCell* b = s.map.lookup(train[i].position);
    ASSERT_EQ(a == nullptr, b == nullptr);
    if (a && a->model && b->model) {
      EXPECT_EQ(marginal_direction_density(train[i].theta, *a->model),
                marginal_direction_density(train[i].theta, *b->model));
    }
  }
}

TEST(Snapshot, SerializationIsByteStable) {
  FlowScenario sc;
  sc.bounds = {0.0, 0.0, 6.0, 6.0};
  Corridor c;
  c.points = {{1.0, 3.0}, {5.0, 3.0}};
  sc.corridors.push_back(c);
  sc.agents = 3;
  sc.duration = 30.0;
  const auto train = generate(sc, 8);
  PipelineConfig cfg;
  Pipeline p = run_pipeline(train, {}, sc.bounds, cfg, 2);

  TempFile a("snap_a.json"), b("snap_b.json");
  save_snapshot(a.path, cfg, sc.bounds, p.graph, p.map);
  save_snapshot(b.path, cfg, sc.bounds, p.graph, p.map);
  const std::string sa = slurp(a.path);
  EXPECT_FALSE(sa.empty());
  EXPECT_EQ(sa, slurp(b.path));

  // save -> load -> save is also stable
  const Snapshot s = load_snapshot(a.path);
  TempFile c2("snap_c.json");
  save_snapshot(c2.path, s.config, s.bounds, s.graph, s.map);
  EXPECT_EQ(slurp(c2.path), sa);
}

TEST(Snapshot, RejectsUnknownFormat) {
  TempFile f("bad_snapshot.json");
  std::ofstream(f.path) << "{\"format\": \"something-else\"}\n";
  EXPECT_THROW(load_snapshot(f.path), std::runtime_error);
  EXPECT_THROW(load_snapshot("/nonexistent/path.json"), std::runtime_error);
}
