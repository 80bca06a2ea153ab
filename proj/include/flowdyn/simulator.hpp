#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <utility>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowdyn/scene_graph.hpp"
#include "flowdyn/swgmm.hpp"
#include "flowdyn/types.hpp"

namespace flowdyn {

// A directed polyline path agents travel along, looping back to the start.
struct Corridor {
  std::vector<std::pair<double, double>> points;  // [m]
  double lateral_sigma = 0.3;                     // [m]
  double speed_mean = 1.0;                        // [m/s]
  double speed_sigma = 0.15;                      // [m/s]
  double weight = 1.0;                            // relative traversal frequency
};

struct FlowScenario {
  Bounds2D bounds{0.0, 0.0, 18.0, 10.0};
  std::vector<Corridor> corridors;
  int agents = 7;
  double heading_noise = 0.2;   // [rad]
  double detection_rate = 5.0;  // [Hz]
  double duration = 300.0;      // [s]
};

struct Detection {
  double time = 0.0;
  int agent_id = 0;
  Position3 position;  // z = 0
  double theta = 0.0;
  double rho = 0.0;
};

namespace detail {

struct PathPoint {
  double x, y;
  double tangent;  // [rad]
};

inline double corridor_length(const Corridor& c) {
  double len = 0.0;
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    const double dx = c.points[i].first - c.points[i - 1].first;
    const double dy = c.points[i].second - c.points[i - 1].second;
    len += std::sqrt(dx * dx + dy * dy);
  }
  return len;
}

inline PathPoint point_at(const Corridor& c, double s) {
  double acc = 0.0;
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    const double dx = c.points[i].first - c.points[i - 1].first;
    const double dy = c.points[i].second - c.points[i - 1].second;
    const double seg = std::sqrt(dx * dx + dy * dy);
    if (s <= acc + seg || i + 1 == c.points.size()) {
      const double f = seg > 0.0 ? std::clamp((s - acc) / seg, 0.0, 1.0) : 0.0;
      return {c.points[i - 1].first + f * dx, c.points[i - 1].second + f * dy,
              std::atan2(dy, dx)};
    }
    acc += seg;
  }
  return {c.points.front().first, c.points.front().second, 0.0};
}

}  // namespace detail

// Generate the time-ordered detection stream. Each agent follows its assigned
// corridor with lateral Gaussian offset and noisy heading; the stream is a
// pure function of the scenario and seed.
inline std::vector<Detection> generate(const FlowScenario& sc, std::uint64_t seed) {
  if (sc.corridors.empty()) throw std::invalid_argument("generate: empty corridor list");
  for (const auto& c : sc.corridors) {
    if (c.points.size() < 2) throw std::invalid_argument("generate: corridor needs >= 2 points");
    if (c.lateral_sigma <= 0.0 || c.speed_sigma <= 0.0) {
      throw std::invalid_argument("generate: corridor sigmas must be > 0");
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // weighted corridor assignment, round-robin over cumulative weights
  std::vector<double> cum;
  double total_w = 0.0;
  for (const auto& c : sc.corridors) {
    total_w += c.weight;
    cum.push_back(total_w);
  }

  struct Agent {
    int corridor;
    double s;        // arc length along corridor
    double length;
  };
  std::vector<Agent> agents;
  for (int a = 0; a < sc.agents; ++a) {
    const double target = total_w * (a + 0.5) / sc.agents;
    int ci = 0;
    while (ci + 1 < static_cast<int>(cum.size()) && cum[ci] < target) ++ci;
    const double len = detail::corridor_length(sc.corridors[ci]);
    agents.push_back({ci, uni(rng) * len, len});
  }

  std::vector<Detection> out;
  const double dt = 1.0 / sc.detection_rate;
  const std::size_t steps = static_cast<std::size_t>(sc.duration * sc.detection_rate);
  for (std::size_t step = 0; step < steps; ++step) {
    const double t = step * dt;
    for (int a = 0; a < sc.agents; ++a) {
      Agent& ag = agents[a];
      const Corridor& c = sc.corridors[ag.corridor];
      double speed = c.speed_mean + c.speed_sigma * gauss(rng);
      if (speed < 0.0) speed = 0.0;
      ag.s += speed * dt;
      if (ag.s >= ag.length) ag.s -= ag.length;  // loop back to the start
      const auto pp = detail::point_at(c, ag.s);
      const double lateral = c.lateral_sigma * gauss(rng);
      const double nx = -std::sin(pp.tangent);
      const double ny = std::cos(pp.tangent);
      Detection d;
      d.time = t;
      d.agent_id = a;
      d.position = {pp.x + lateral * nx, pp.y + lateral * ny, 0.0};
      d.theta = wrap_angle(pp.tangent + sc.heading_noise * gauss(rng));
      d.rho = speed;
      out.push_back(d);
    }
  }
  return out;
}

// Analytic per-bin direction probabilities at a position: wrapped-Gaussian
// densities of the corridors passing within 3 lateral sigma, weighted by
// traversal frequency and lateral proximity. Uniform when no corridor is near.
inline std::vector<double> ground_truth_marginal(const FlowScenario& sc, const Position3& p,
                                                 int bins) {
  struct Mode {
    double weight, mean;
  };
  std::vector<Mode> modes;
  double wsum = 0.0;
  for (const auto& c : sc.corridors) {
    // nearest point on the polyline
    double best_d = std::numeric_limits<double>::infinity();
    double best_tangent = 0.0;
    const int probes = 400;
    const double len = detail::corridor_length(c);
    for (int i = 0; i <= probes; ++i) {
      const auto pp = detail::point_at(c, len * i / probes);
      const double dx = pp.x - p.x;
      const double dy = pp.y - p.y;
      const double d = std::sqrt(dx * dx + dy * dy);
      if (d < best_d) {
        best_d = d;
        best_tangent = pp.tangent;
      }
    }
    if (best_d > 3.0 * c.lateral_sigma) continue;
    const double w =
        c.weight * std::exp(-0.5 * best_d * best_d / (c.lateral_sigma * c.lateral_sigma));
    modes.push_back({w, best_tangent});
    wsum += w;
  }
  std::vector<double> out(bins, 1.0 / bins);
  if (modes.empty() || wsum <= 0.0) return out;

  const double sigma = std::max(sc.heading_noise, 1e-6);
  for (int b = 0; b < bins; ++b) {
    const double lo = -kPi + b * kTwoPi / bins;
    const double hi = lo + kTwoPi / bins;
    double mass = 0.0;
    for (const auto& m : modes) {
      for (int w = -1; w <= 1; ++w) {
        const double shift = kTwoPi * w - m.mean;
        mass += (m.weight / wsum) * (detail::normal_cdf((hi + shift) / sigma) -
                                     detail::normal_cdf((lo + shift) / sigma));
      }
    }
    out[b] = mass;
  }
  return out;
}

// --- Detection stream file: `# flowdyn-detections v1`, then CSV rows
//     time,agent_id,x,y,z,theta,rho with fixed 9-digit decimals. ---

inline constexpr const char* kDetectionsHeader = "# flowdyn-detections v1";

inline void write_detections(std::ostream& out, const std::vector<Detection>& dets) {
  out << kDetectionsHeader << "\n";
  char buf[256];
  for (const auto& d : dets) {
    std::snprintf(buf, sizeof(buf), "%.9f,%d,%.9f,%.9f,%.9f,%.9f,%.9f\n", d.time, d.agent_id,
                  d.position.x, d.position.y, d.position.z, d.theta, d.rho);
    out << buf;
  }
}

inline void save_detections(const std::string& path, const std::vector<Detection>& dets) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write detections file: " + path);
  write_detections(out, dets);
}

inline std::vector<Detection> read_detections(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kDetectionsHeader) {
    throw std::runtime_error("detections: missing header line");
  }
  std::vector<Detection> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Detection d;
    if (std::sscanf(line.c_str(), "%lf,%d,%lf,%lf,%lf,%lf,%lf", &d.time, &d.agent_id,
                    &d.position.x, &d.position.y, &d.position.z, &d.theta, &d.rho) != 7) {
      throw std::runtime_error("detections: malformed row at line " + std::to_string(lineno));
    }
    out.push_back(d);
  }
  return out;
}

inline std::vector<Detection> load_detections(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open detections file: " + path);
  return read_detections(in);
}

}  // namespace flowdyn
