#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "flowdyn/binding.hpp"
#include "flowdyn/scene_graph.hpp"
#include "flowdyn/simulator.hpp"

namespace flowdyn {

struct PipelineConfig {
  double resolution = 0.5;        // [m] spatial hash cell size
  double nav_spacing = 0.5;       // [m] navigational grid spacing
  std::size_t reservoir_capacity = 200;
  int bins = 8;
  double update_interval = 10.0;  // [s] between scheduled model refits
  double bind_interval = 1.0;     // [s] between bind attempts during replay
  StabilityTracker tracker{};
  FitConfig fit{};
  FitterKind fitter = FitterKind::BicSweep;
  unsigned parallelism = 1;
};

struct Pipeline {
  LayeredGraph graph;
  DynamicsMap map;
};

// Replays detections and pose events in time order: observations land in the
// spatial hash, binding runs once the graph stabilizes, and scheduled model
// updates refit dirty cells. A final bind-and-fit pass runs after the stream
// ends so every cell with enough data carries a model.
inline Pipeline run_pipeline(const std::vector<Detection>& detections,
                             const std::vector<PoseEvent>& events, const Bounds2D& bounds,
                             const PipelineConfig& cfg, std::uint64_t stream_seed) {
  Pipeline p{build_nav_layer(bounds, cfg.nav_spacing),
             DynamicsMap(cfg.resolution, cfg.reservoir_capacity, cfg.bins, cfg.tracker)};
  std::mt19937_64 rng(stream_seed);

  std::size_t di = 0, ei = 0;
  double now = 0.0;
  double next_bind = cfg.bind_interval;
  double next_update = cfg.update_interval;

  auto advance_schedules = [&](double t) {
    while (next_bind <= t) {
      p.map.try_bind(p.graph, next_bind, rng);
      next_bind += cfg.bind_interval;
    }
    while (next_update <= t) {
      p.map.update_models(cfg.fitter, cfg.fit, cfg.update_interval, next_update,
                          cfg.parallelism);
      next_update += cfg.update_interval;
    }
  };

  while (di < detections.size() || ei < events.size()) {
    const bool take_event =
        ei < events.size() &&
        (di >= detections.size() || events[ei].time <= detections[di].time);
    if (take_event) {
      const PoseEvent& ev = events[ei++];
      advance_schedules(ev.time);
      now = ev.time;
      const auto notes = p.graph.apply_event(ev);
      p.map.handle_notifications(notes, ev.time, rng);
    } else {
      const Detection& d = detections[di++];
      advance_schedules(d.time);
      now = d.time;
      p.map.observe(d.position, CylindricalSample(d.theta, d.rho, d.time), rng);
    }
  }

  // final stabilized bind and fit
  const double end = now + p.map.tracker().tau;
  p.map.try_bind(p.graph, end, rng);
  p.map.update_models(cfg.fitter, cfg.fit, 0.0, end, cfg.parallelism);
  return p;
}

// Refit every cell from its current buffer, regardless of dirty state.
inline std::size_t refit_all(DynamicsMap& map, FitterKind fitter, const FitConfig& cfg,
                             unsigned parallelism = 1) {
  map.mark_all_dirty();
  return map.update_models(fitter, cfg, 0.0, 0.0, parallelism);
}

}  // namespace flowdyn
