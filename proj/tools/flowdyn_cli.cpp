// Command-line frontend: simulation, model fitting, evaluation, resolution
// sweep, ablation, and SVG export. Every command is a pure function of its
// input files, flags, and seeds.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flowdyn/flowdyn.hpp"

namespace {

using namespace flowdyn;

Bounds2D bounds_of(const std::vector<Detection>& dets, double margin = 0.5) {
  Bounds2D b{1e18, 1e18, -1e18, -1e18};
  for (const auto& d : dets) {
    b.min_x = std::min(b.min_x, d.position.x);
    b.min_y = std::min(b.min_y, d.position.y);
    b.max_x = std::max(b.max_x, d.position.x);
    b.max_y = std::max(b.max_y, d.position.y);
  }
  if (dets.empty()) b = {0.0, 0.0, 1.0, 1.0};
  b.min_x -= margin;
  b.min_y -= margin;
  b.max_x += margin;
  b.max_y += margin;
  return b;
}

struct CommonFitFlags {
  std::string config_path;
  double resolution = -1.0;  // <= 0 means "use config/default"
  std::uint64_t seed = 0;
  unsigned parallelism = 1;

  PipelineConfig make() const {
    PipelineConfig cfg;
    if (!config_path.empty()) cfg = load_pipeline_config(config_path);
    if (resolution > 0.0) {
      cfg.resolution = resolution;
      cfg.nav_spacing = resolution;
    }
    cfg.fit.rng_seed = seed;
    cfg.parallelism = parallelism;
    return cfg;
  }
};

int cmd_simulate(const std::string& scenario_path, std::uint64_t seed,
                 const std::string& out_path) {
  const FlowScenario sc = load_scenario(scenario_path);
  save_detections(out_path, generate(sc, seed));
  return 0;
}

int cmd_fit(const std::string& det_path, const std::string& events_path,
            const CommonFitFlags& flags, const std::string& bounds_arg,
            const std::string& out_path) {
  const auto dets = load_detections(det_path);
  std::vector<PoseEvent> events;
  if (!events_path.empty()) events = load_pose_events(events_path);

  Bounds2D bounds;
  if (!bounds_arg.empty()) {
    if (std::sscanf(bounds_arg.c_str(), "%lf,%lf,%lf,%lf", &bounds.min_x, &bounds.min_y,
                    &bounds.max_x, &bounds.max_y) != 4) {
      throw std::runtime_error("fit: --bounds expects min_x,min_y,max_x,max_y");
    }
  } else {
    bounds = bounds_of(dets);
  }

  const PipelineConfig cfg = flags.make();
  Pipeline p = run_pipeline(dets, events, bounds, cfg, flags.seed);
  save_snapshot(out_path, cfg, bounds, p.graph, p.map);
  return 0;
}

int cmd_eval(const std::string& snapshot_path, const std::string& test_path,
             const std::string& train_path, const std::string& out_prefix) {
  Snapshot snap = load_snapshot(snapshot_path);
  const auto test = load_detections(test_path);
  // the reference MoD needs the training stream; fall back to the test
  // stream when none is given (reference becomes an on-test upper bound)
  const auto train = train_path.empty() ? test : load_detections(train_path);
  const EvalReport r = evaluate_map(snap.map, train, test, snap.config.bins);

  std::ofstream txt(out_prefix + ".txt", std::ios::binary);
  if (!txt) throw std::runtime_error("eval: cannot write " + out_prefix + ".txt");
  write_report(txt, r);
  std::ofstream csv(out_prefix + ".csv", std::ios::binary);
  write_report_csv(csv, {r});
  return 0;
}

int cmd_sweep(const std::string& train_path, const std::string& test_path,
              std::vector<double> resolutions, const CommonFitFlags& flags,
              const std::string& out_prefix) {
  const auto train = load_detections(train_path);
  const auto test = load_detections(test_path);
  if (resolutions.empty()) resolutions = {0.2, 0.3, 0.5, 1.0};
  PipelineConfig cfg = flags.make();
  const Bounds2D bounds = bounds_of(train);
  const auto reports = resolution_sweep(train, test, resolutions, bounds, cfg, flags.seed);

  std::ofstream txt(out_prefix + ".txt", std::ios::binary);
  if (!txt) throw std::runtime_error("sweep: cannot write " + out_prefix + ".txt");
  for (const auto& r : reports) write_report(txt, r);
  std::ofstream csv(out_prefix + ".csv", std::ios::binary);
  write_report_csv(csv, reports);
  return 0;
}

int cmd_ablate(const std::string& train_path, const std::string& test_path,
               const CommonFitFlags& flags, const std::string& out_prefix) {
  const auto train = load_detections(train_path);
  const auto test = load_detections(test_path);
  PipelineConfig cfg = flags.make();
  const Bounds2D bounds = bounds_of(train);
  const AblationReport rep = ablation(train, test, bounds, cfg, flags.seed,
                                      flags.resolution > 0.0 ? flags.resolution : 0.5);

  std::ofstream txt(out_prefix + ".txt", std::ios::binary);
  if (!txt) throw std::runtime_error("ablate: cannot write " + out_prefix + ".txt");
  char buf[256];
  std::snprintf(buf, sizeof(buf), "[ablation resolution %.3f]\n", rep.resolution);
  txt << buf;
  std::snprintf(buf, sizeof(buf), "mean_k: bic=%.4f meanshift=%.4f\n", rep.mean_k_bic,
                rep.mean_k_meanshift);
  txt << buf;
  auto dump_k = [&](const char* name, const std::map<int, int>& h) {
    txt << name << ":";
    for (const auto& [k, count] : h) txt << " K=" << k << ":" << count;
    txt << "\n";
  };
  dump_k("k_distribution_bic", rep.k_histogram_bic);
  dump_k("k_distribution_meanshift", rep.k_histogram_meanshift);
  txt << "--- bic ---\n";
  write_report(txt, rep.bic);
  txt << "--- meanshift ---\n";
  write_report(txt, rep.meanshift);
  std::snprintf(buf, sizeof(buf), "fit_seconds: bic=%.3f meanshift=%.3f\n",
                rep.fit_seconds_bic, rep.fit_seconds_meanshift);
  txt << buf;
  return 0;
}

int cmd_export(const std::string& snapshot_path, const std::string& out_path) {
  Snapshot snap = load_snapshot(snapshot_path);
  export_svg_file(snap.map, snap.graph, out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowdyn: sparse maps of directional dynamics"};
  app.require_subcommand(1);

  std::string scenario_path, det_path, events_path, test_path, train_path, snapshot_path;
  std::string out_path, bounds_arg;
  std::vector<double> resolutions;
  CommonFitFlags flags;

  auto* sim = app.add_subcommand("simulate", "generate a detection stream from a scenario");
  sim->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  sim->add_option("--seed", flags.seed, "simulation seed")->required();
  sim->add_option("--out", out_path, "output detections file")->required();

  auto* fit = app.add_subcommand("fit", "replay detections and fit models");
  fit->add_option("--detections", det_path, "detections file")->required();
  fit->add_option("--events", events_path, "pose-event stream file");
  fit->add_option("--config", flags.config_path, "run config JSON");
  fit->add_option("--resolution", flags.resolution, "cell size and nav spacing [m]");
  fit->add_option("--bounds", bounds_arg, "min_x,min_y,max_x,max_y");
  fit->add_option("--seed", flags.seed, "fitting seed")->required();
  fit->add_option("--parallelism", flags.parallelism, "refit worker threads");
  fit->add_option("--out", out_path, "output snapshot file")->required();

  auto* ev = app.add_subcommand("eval", "evaluate a snapshot on a test stream");
  ev->add_option("--snapshot", snapshot_path, "snapshot file")->required();
  ev->add_option("--test", test_path, "test detections file")->required();
  ev->add_option("--train", train_path, "training detections (for the reference MoD)");
  ev->add_option("--out", out_path, "output report prefix")->required();

  auto* sw = app.add_subcommand("sweep", "resolution sweep over train/test streams");
  sw->add_option("--train", train_path, "training detections")->required();
  sw->add_option("--test", test_path, "test detections")->required();
  sw->add_option("--resolutions", resolutions, "cell sizes [m]");
  sw->add_option("--config", flags.config_path, "run config JSON");
  sw->add_option("--seed", flags.seed, "fitting seed")->required();
  sw->add_option("--parallelism", flags.parallelism, "refit worker threads");
  sw->add_option("--out", out_path, "output report prefix")->required();

  auto* ab = app.add_subcommand("ablate", "BIC sweep vs mean-shift initialization");
  ab->add_option("--train", train_path, "training detections")->required();
  ab->add_option("--test", test_path, "test detections")->required();
  ab->add_option("--resolution", flags.resolution, "cell size [m]");
  ab->add_option("--config", flags.config_path, "run config JSON");
  ab->add_option("--seed", flags.seed, "fitting seed")->required();
  ab->add_option("--parallelism", flags.parallelism, "refit worker threads");
  ab->add_option("--out", out_path, "output report prefix")->required();

  auto* ex = app.add_subcommand("export", "render a snapshot as an SVG flow map");
  ex->add_option("--snapshot", snapshot_path, "snapshot file")->required();
  ex->add_option("--out", out_path, "output SVG file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(scenario_path, flags.seed, out_path);
    if (fit->parsed()) return cmd_fit(det_path, events_path, flags, bounds_arg, out_path);
    if (ev->parsed()) return cmd_eval(snapshot_path, test_path, train_path, out_path);
    if (sw->parsed()) return cmd_sweep(train_path, test_path, resolutions, flags, out_path);
    if (ab->parsed()) return cmd_ablate(train_path, test_path, flags, out_path);
    if (ex->parsed()) return cmd_export(snapshot_path, out_path);
  } catch (const flowdyn::FitError& e) {
    std::cerr << "error:fit-failure: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error:invalid-argument: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error:io-or-parse: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
