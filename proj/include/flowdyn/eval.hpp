#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "flowdyn/binding.hpp"
#include "flowdyn/histogram.hpp"
#include "flowdyn/pipeline.hpp"
#include "flowdyn/simulator.hpp"
#include "flowdyn/spatial_hash.hpp"
#include "flowdyn/swgmm.hpp"

namespace flowdyn {

struct UndefinedMetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kUniformDirectionDensity = 1.0 / kTwoPi;
inline constexpr double kContinuousDensityFloor = 1e-300;

// Fine-grid histogram model built from the full training stream; the
// empirical upper bound for the evaluated models.
struct ReferenceMoD {
  double resolution = 0.1;
  int bins = 8;
  std::unordered_map<CellKey, DirHistogram, CellKeyHash> grid;

  const DirHistogram* cell_at(const Position3& p) const {
    auto it = grid.find(key_of(p, resolution));
    return it == grid.end() ? nullptr : &it->second;
  }
};

inline ReferenceMoD build_reference(const std::vector<Detection>& train, int bins,
                                    double resolution = 0.1) {
  if (train.empty()) throw std::invalid_argument("build_reference: empty stream");
  ReferenceMoD ref;
  ref.resolution = resolution;
  ref.bins = bins;
  for (const auto& d : train) {
    auto [it, inserted] = ref.grid.try_emplace(key_of(d.position, resolution), bins);
    it->second.observe(d.theta);
  }
  return ref;
}

// Directional density lookup: nullopt means the position is uncovered.
using DensityFn = std::function<std::optional<double>(const Position3&, double theta)>;
// Bin-mass lookup for MPP.
using BinMassFn = std::function<std::optional<double>(const Position3&, int bin)>;

// Mean log predictive density over a test stream. Uncovered points use the
// uniform density 1/(2 pi) when uniform_fallback is set, otherwise they are
// excluded (covered-only variant).
inline double mlpd(const std::vector<Detection>& test, const DensityFn& lookup,
                   bool uniform_fallback) {
  if (test.empty()) throw std::invalid_argument("mlpd: empty test set");
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& d : test) {
    const auto dens = lookup(d.position, d.theta);
    if (dens) {
      acc += std::log(std::max(*dens, kContinuousDensityFloor));
      ++n;
    } else if (uniform_fallback) {
      acc += std::log(kUniformDirectionDensity);
      ++n;
    }
  }
  if (n == 0) throw UndefinedMetricError("mlpd: no covered test points");
  return acc / n;
}

// Mean predictive probability: average mass assigned to the observed bin.
// Uncovered points contribute 1/B in overall mode.
inline double mpp(const std::vector<Detection>& test, const BinMassFn& lookup, int bins,
                  bool uniform_fallback) {
  if (test.empty()) throw std::invalid_argument("mpp: empty test set");
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& d : test) {
    const auto mass = lookup(d.position, direction_bin_of(d.theta, bins));
    if (mass) {
      acc += *mass;
      ++n;
    } else if (uniform_fallback) {
      acc += 1.0 / bins;
      ++n;
    }
  }
  if (n == 0) throw UndefinedMetricError("mpp: no covered test points");
  return acc / n;
}

struct MethodEval {
  double mlpd_overall = 0.0;
  double mlpd_covered = 0.0;
  double mpp_overall = 0.0;
  double mpp_covered = 0.0;
  double coverage_fraction = 0.0;
};

enum class EvalMethod { SwGmmModel, HistogramModel };

inline DensityFn density_lookup(const DynamicsMap& map, EvalMethod method) {
  return [&map, method](const Position3& p, double theta) -> std::optional<double> {
    const DynamicsCell* cell = map.lookup(p);
    if (!cell) return std::nullopt;
    if (method == EvalMethod::SwGmmModel) {
      if (!cell->model) return std::nullopt;
      return marginal_direction_density(theta, *cell->model);
    }
    if (cell->histogram.total() == 0) return std::nullopt;
    return cell->histogram.density(theta);
  };
}

inline BinMassFn bin_mass_lookup(const DynamicsMap& map, EvalMethod method, int bins) {
  return [&map, method, bins](const Position3& p, int bin) -> std::optional<double> {
    const DynamicsCell* cell = map.lookup(p);
    if (!cell) return std::nullopt;
    if (method == EvalMethod::SwGmmModel) {
      if (!cell->model) return std::nullopt;
      return direction_bin_mass(bin, bins, *cell->model);
    }
    if (cell->histogram.total() == 0) return std::nullopt;
    return cell->histogram.bin_prob(bin);
  };
}

inline MethodEval evaluate_method(const DynamicsMap& map, EvalMethod method,
                                  const std::vector<Detection>& test, int bins) {
  MethodEval e;
  const auto dens = density_lookup(map, method);
  const auto mass = bin_mass_lookup(map, method, bins);
  std::size_t covered = 0;
  for (const auto& d : test) {
    if (dens(d.position, d.theta)) ++covered;
  }
  e.coverage_fraction = test.empty() ? 0.0 : static_cast<double>(covered) / test.size();
  e.mlpd_overall = mlpd(test, dens, true);
  e.mpp_overall = mpp(test, mass, bins, true);
  if (covered > 0) {
    e.mlpd_covered = mlpd(test, dens, false);
    e.mpp_covered = mpp(test, mass, bins, false);
  } else {
    e.mlpd_covered = std::log(kUniformDirectionDensity);
    e.mpp_covered = 1.0 / bins;
  }
  return e;
}

struct EvalReport {
  double resolution = 0.0;
  int bins = 8;
  MethodEval swgmm;
  MethodEval histogram;
  double baseline_uniform_mlpd = 0.0;
  double baseline_uniform_mpp = 0.0;
  double reference_mpp = 0.0;   // reference MoD on its own training data
  double reference_mlpd = 0.0;
};

inline double uniform_mlpd() { return std::log(kUniformDirectionDensity); }
inline double uniform_mpp(int bins) { return 1.0 / bins; }

inline EvalReport evaluate_map(const DynamicsMap& map, const std::vector<Detection>& train,
                               const std::vector<Detection>& test, int bins) {
  EvalReport r;
  r.resolution = map.resolution();
  r.bins = bins;
  r.swgmm = evaluate_method(map, EvalMethod::SwGmmModel, test, bins);
  r.histogram = evaluate_method(map, EvalMethod::HistogramModel, test, bins);
  r.baseline_uniform_mlpd = uniform_mlpd();
  r.baseline_uniform_mpp = uniform_mpp(bins);

  const ReferenceMoD ref = build_reference(train, bins);
  const DensityFn ref_dens = [&ref](const Position3& p, double theta) -> std::optional<double> {
    const DirHistogram* h = ref.cell_at(p);
    if (!h || h->total() == 0) return std::nullopt;
    return h->density(theta);
  };
  const BinMassFn ref_mass = [&ref](const Position3& p, int bin) -> std::optional<double> {
    const DirHistogram* h = ref.cell_at(p);
    if (!h || h->total() == 0) return std::nullopt;
    return h->bin_prob(bin);
  };
  r.reference_mpp = mpp(train, ref_mass, bins, true);
  r.reference_mlpd = mlpd(train, ref_dens, true);
  return r;
}

// Full resolution sweep: for each delta, build a grid navigational layer at
// that spacing, ingest the training stream, bind, fit, and evaluate on the
// test stream.
inline std::vector<EvalReport> resolution_sweep(const std::vector<Detection>& train,
                                                const std::vector<Detection>& test,
                                                const std::vector<double>& resolutions,
                                                const Bounds2D& bounds,
                                                const PipelineConfig& base_cfg,
                                                std::uint64_t stream_seed) {
  std::vector<EvalReport> out;
  for (double delta : resolutions) {
    PipelineConfig cfg = base_cfg;
    cfg.resolution = delta;
    cfg.nav_spacing = delta;
    Pipeline p = run_pipeline(train, {}, bounds, cfg, stream_seed);
    out.push_back(evaluate_map(p.map, train, test, cfg.bins));
  }
  return out;
}

struct AblationReport {
  double resolution = 0.5;
  EvalReport bic;
  EvalReport meanshift;
  double mean_k_bic = 0.0;
  double mean_k_meanshift = 0.0;
  std::map<int, int> k_histogram_bic;
  std::map<int, int> k_histogram_meanshift;
  double fit_seconds_bic = 0.0;
  double fit_seconds_meanshift = 0.0;
};

inline std::pair<double, std::map<int, int>> model_order_stats(const DynamicsMap& map) {
  double acc = 0.0;
  std::size_t n = 0;
  std::map<int, int> hist;
  auto tally = [&](const DynamicsCell& c) {
    if (!c.model) return;
    const int k = static_cast<int>(c.model->components.size());
    acc += k;
    ++hist[k];
    ++n;
  };
  for (const auto& [k, c] : map.hash_cells()) tally(c);
  for (const auto& [id, c] : map.node_cells()) tally(c);
  return {n ? acc / n : 0.0, hist};
}

// BIC sweep vs. mean-shift initialization with identical buffers and seeds:
// the pipeline is run once, then the same cell buffers are refitted by each
// model order selection method.
inline AblationReport ablation(const std::vector<Detection>& train,
                               const std::vector<Detection>& test, const Bounds2D& bounds,
                               const PipelineConfig& base_cfg, std::uint64_t stream_seed,
                               double delta = 0.5) {
  PipelineConfig cfg = base_cfg;
  cfg.resolution = delta;
  cfg.nav_spacing = delta;
  cfg.fitter = FitterKind::BicSweep;
  Pipeline p = run_pipeline(train, {}, bounds, cfg, stream_seed);

  AblationReport rep;
  rep.resolution = delta;

  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  refit_all(p.map, FitterKind::BicSweep, cfg.fit, cfg.parallelism);
  rep.fit_seconds_bic = std::chrono::duration<double>(clock::now() - t0).count();
  rep.bic = evaluate_map(p.map, train, test, cfg.bins);
  std::tie(rep.mean_k_bic, rep.k_histogram_bic) = model_order_stats(p.map);

  t0 = clock::now();
  refit_all(p.map, FitterKind::MeanShift, cfg.fit, cfg.parallelism);
  rep.fit_seconds_meanshift = std::chrono::duration<double>(clock::now() - t0).count();
  rep.meanshift = evaluate_map(p.map, train, test, cfg.bins);
  std::tie(rep.mean_k_meanshift, rep.k_histogram_meanshift) = model_order_stats(p.map);
  return rep;
}

// --- deterministic report files ---

inline void write_method(std::ostream& out, const char* name, const MethodEval& e) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%s: mlpd_overall=%.6f mlpd_covered=%.6f mpp_overall=%.6f "
                "mpp_covered=%.6f coverage=%.6f\n",
                name, e.mlpd_overall, e.mlpd_covered, e.mpp_overall, e.mpp_covered,
                e.coverage_fraction);
  out << buf;
}

inline void write_report(std::ostream& out, const EvalReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "[resolution %.3f bins %d]\n", r.resolution, r.bins);
  out << buf;
  write_method(out, "swgmm", r.swgmm);
  write_method(out, "histogram", r.histogram);
  std::snprintf(buf, sizeof(buf),
                "uniform: mlpd=%.6f mpp=%.6f\nreference: mlpd=%.6f mpp=%.6f\n",
                r.baseline_uniform_mlpd, r.baseline_uniform_mpp, r.reference_mlpd,
                r.reference_mpp);
  out << buf;
}

inline void write_report_csv(std::ostream& out, const std::vector<EvalReport>& reports) {
  out << "resolution,bins,method,mlpd_overall,mlpd_covered,mpp_overall,mpp_covered,"
         "coverage,uniform_mlpd,uniform_mpp,reference_mlpd,reference_mpp\n";
  char buf[384];
  for (const auto& r : reports) {
    for (const auto& [name, e] :
         {std::pair<const char*, const MethodEval*>{"swgmm", &r.swgmm},
          std::pair<const char*, const MethodEval*>{"histogram", &r.histogram}}) {
      std::snprintf(buf, sizeof(buf), "%.3f,%d,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                    r.resolution, r.bins, name, e->mlpd_overall, e->mlpd_covered,
                    e->mpp_overall, e->mpp_covered, e->coverage_fraction,
                    r.baseline_uniform_mlpd, r.baseline_uniform_mpp, r.reference_mlpd,
                    r.reference_mpp);
      out << buf;
    }
  }
}

}  // namespace flowdyn
