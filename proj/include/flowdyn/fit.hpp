#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "flowdyn/swgmm.hpp"
#include "flowdyn/types.hpp"

namespace flowdyn {

struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitConfig {
  int k_max = 5;
  int winding = 1;
  int em_max_iters = 100;
  double em_loglik_tol = 1e-4;  // absolute change in total log-likelihood
  int min_samples_per_component = 3;
  double cov_floor = 1e-4;
  double cs_epsilon = 1e-3;  // Cauchy-Schwarz off-diagonal bound slack
  std::uint64_t rng_seed = 0;
};

enum class InitMethod { BicKmeanspp, MeanShift };

struct FitDiagnostics {
  int selected_k = 0;
  std::vector<std::pair<int, double>> bic_per_k;
  double final_loglik = 0.0;
  std::vector<int> em_iters_per_k;
  InitMethod init_method = InitMethod::BicKmeanspp;
  bool covariance_clamped = false;
  // mean-shift specifics, populated only for InitMethod::MeanShift
  double ms_bandwidth_theta = 0.0;
  double ms_bandwidth_rho = 0.0;
  double ms_merge_radius = 0.0;
};

struct EmResult {
  SwGmm model;
  double loglik = 0.0;
  int iters = 0;
  bool clamped = false;
};

namespace detail {

inline void regularize(SwComponent& c, const FitConfig& cfg, bool* clamped) {
  if (c.sigma_tt < cfg.cov_floor) {
    c.sigma_tt = cfg.cov_floor;
    if (clamped) *clamped = true;
  }
  if (c.sigma_rr < cfg.cov_floor) {
    c.sigma_rr = cfg.cov_floor;
    if (clamped) *clamped = true;
  }
  const double bound = (1.0 - cfg.cs_epsilon) * std::sqrt(c.sigma_tt * c.sigma_rr);
  if (c.sigma_tr > bound) {
    c.sigma_tr = bound;
    if (clamped) *clamped = true;
  } else if (c.sigma_tr < -bound) {
    c.sigma_tr = -bound;
    if (clamped) *clamped = true;
  }
}

inline double circular_mean(std::span<const CylindricalSample> samples,
                            std::span<const std::size_t> idx) {
  double s = 0.0, c = 0.0;
  for (std::size_t j : idx) {
    s += std::sin(samples[j].theta);
    c += std::cos(samples[j].theta);
  }
  return std::atan2(s, c);
}

}  // namespace detail

// K-means++ seeding on the cylinder: first center uniform over the data, each
// subsequent center drawn with probability proportional to the squared
// circular-linear distance to its nearest existing center.
inline std::vector<int> kmeanspp_init(std::span<const CylindricalSample> samples, int k,
                                      std::mt19937_64& rng) {
  const std::size_t n = samples.size();
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw std::invalid_argument("kmeanspp_init: need 1 <= k <= |samples|");
  }
  std::vector<std::size_t> centers;
  centers.reserve(k);
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  centers.push_back(first(rng));

  std::vector<double> d2(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& c0 = samples[centers[0]];
    d2[j] = cyl_dist_sq(samples[j].theta, samples[j].rho, c0.theta, c0.rho);
  }
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick;
    if (total <= 0.0) {
      pick = first(rng);  // all points coincide with a center
    } else {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      pick = n - 1;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        acc += d2[j];
        if (target <= acc) {
          pick = j;
          break;
        }
      }
    }
    centers.push_back(pick);
    for (std::size_t j = 0; j < n; ++j) {
      const auto& c = samples[pick];
      d2[j] = std::min(d2[j], cyl_dist_sq(samples[j].theta, samples[j].rho, c.theta, c.rho));
    }
  }

  std::vector<int> labels(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (int ci = 0; ci < k; ++ci) {
      const auto& c = samples[centers[ci]];
      const double d = cyl_dist_sq(samples[j].theta, samples[j].rho, c.theta, c.rho);
      if (d < best) {
        best = d;
        labels[j] = ci;
      }
    }
  }
  return labels;
}

// EM refinement of a semi-wrapped mixture from hard initial assignments.
// Responsibilities are normalized jointly over (component, winding replica);
// the M-step then reduces to a standard weighted update over winding-shifted
// samples, with the angular mean re-wrapped afterwards.
inline EmResult em_fit(std::span<const CylindricalSample> samples, int k,
                       std::span<const int> init_labels, const FitConfig& cfg) {
  const std::size_t n = samples.size();
  if (k < 1 || n < static_cast<std::size_t>(k) * cfg.min_samples_per_component) {
    throw std::invalid_argument("em_fit: too few samples for requested k");
  }
  if (init_labels.size() != n) {
    throw std::invalid_argument("em_fit: init_labels size mismatch");
  }

  EmResult out;
  out.model.winding = cfg.winding;
  out.model.sample_count_at_fit = n;
  auto& comps = out.model.components;

  // Initial parameters from the hard assignment. Cluster means use the
  // circular mean in theta so clusters straddling the wrap seed correctly.
  for (int ci = 0; ci < k; ++ci) {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < n; ++j) {
      if (init_labels[j] == ci) idx.push_back(j);
    }
    if (idx.empty()) continue;
    SwComponent c;
    c.weight = static_cast<double>(idx.size()) / n;
    c.mu_theta = detail::circular_mean(samples, idx);
    double mr = 0.0;
    for (std::size_t j : idx) mr += samples[j].rho;
    c.mu_rho = mr / idx.size();
    double stt = 0.0, str = 0.0, srr = 0.0;
    for (std::size_t j : idx) {
      const double dt = angular_diff(samples[j].theta, c.mu_theta);
      const double dr = samples[j].rho - c.mu_rho;
      stt += dt * dt;
      str += dt * dr;
      srr += dr * dr;
    }
    c.sigma_tt = stt / idx.size();
    c.sigma_tr = str / idx.size();
    c.sigma_rr = srr / idx.size();
    detail::regularize(c, cfg, nullptr);
    comps.push_back(c);
  }
  if (comps.empty()) throw FitError("em_fit: all initial clusters empty");

  const int W = cfg.winding;
  const int reps = 2 * W + 1;
  double prev_ll = -std::numeric_limits<double>::infinity();
  // responsibilities: resp[j * (K*reps) + ci*reps + (w+W)]
  std::vector<double> resp;

  for (int iter = 1; iter <= cfg.em_max_iters; ++iter) {
    const int K = static_cast<int>(comps.size());
    resp.assign(n * K * reps, 0.0);
    std::vector<detail::GaussCache> caches;
    caches.reserve(K);
    for (const auto& c : comps) caches.emplace_back(c);

    double ll = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      double* row = &resp[j * K * reps];
      for (int ci = 0; ci < K; ++ci) {
        for (int w = -W; w <= W; ++w) {
          const double t = comps[ci].weight *
                           caches[ci].density(samples[j].theta + kTwoPi * w - comps[ci].mu_theta,
                                              samples[j].rho - comps[ci].mu_rho);
          row[ci * reps + (w + W)] = t;
          sum += t;
        }
      }
      ll += std::log(std::max(sum, 1e-300));
      if (sum > 0.0) {
        for (int t = 0; t < K * reps; ++t) row[t] /= sum;
      }
    }
    out.loglik = ll;
    out.iters = iter;

    // M-step
    std::vector<double> nk(K, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double* row = &resp[j * K * reps];
      for (int ci = 0; ci < K; ++ci) {
        for (int t = 0; t < reps; ++t) nk[ci] += row[ci * reps + t];
      }
    }

    // Drop collapsed components and restart the iteration with the survivors.
    bool collapsed = false;
    for (double v : nk) {
      if (v < 1e-12) collapsed = true;
    }
    if (collapsed) {
      std::vector<SwComponent> kept;
      for (int ci = 0; ci < K; ++ci) {
        if (nk[ci] >= 1e-12) kept.push_back(comps[ci]);
      }
      if (kept.empty()) throw FitError("em_fit: all components collapsed");
      double wsum = 0.0;
      for (const auto& c : kept) wsum += c.weight;
      for (auto& c : kept) c.weight /= wsum;
      comps = std::move(kept);
      prev_ll = -std::numeric_limits<double>::infinity();
      continue;
    }

    for (int ci = 0; ci < K; ++ci) {
      double mt = 0.0, mr = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double* row = &resp[j * K * reps + ci * reps];
        for (int w = -W; w <= W; ++w) {
          const double r = row[w + W];
          mt += r * (samples[j].theta + kTwoPi * w);
          mr += r * samples[j].rho;
        }
      }
      mt /= nk[ci];
      mr /= nk[ci];
      double stt = 0.0, str = 0.0, srr = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double* row = &resp[j * K * reps + ci * reps];
        for (int w = -W; w <= W; ++w) {
          const double r = row[w + W];
          const double dt = samples[j].theta + kTwoPi * w - mt;
          const double dr = samples[j].rho - mr;
          stt += r * dt * dt;
          str += r * dt * dr;
          srr += r * dr * dr;
        }
      }
      SwComponent& c = comps[ci];
      c.weight = nk[ci] / n;
      c.mu_theta = wrap_angle(mt);
      c.mu_rho = mr;
      c.sigma_tt = stt / nk[ci];
      c.sigma_tr = str / nk[ci];
      c.sigma_rr = srr / nk[ci];
      detail::regularize(c, cfg, &out.clamped);
    }
    double wsum = 0.0;
    for (const auto& c : comps) wsum += c.weight;
    for (auto& c : comps) c.weight /= wsum;

    if (std::abs(ll - prev_ll) < cfg.em_loglik_tol) break;
    prev_ll = ll;
  }
  return out;
}

inline double semi_wrapped_loglik(std::span<const CylindricalSample> samples,
                                  const SwGmm& model) {
  double ll = 0.0;
  for (const auto& z : samples) {
    ll += std::log(std::max(mixture_density(z, model), 1e-300));
  }
  return ll;
}

// Number of free mixture parameters for K components.
inline int free_parameter_count(int k) { return 6 * k - 1; }

// BIC-based model order sweep: for each feasible K, K-means++ seed then EM;
// keep the model minimizing k_p ln n - 2 L, ties broken toward smaller K.
inline std::pair<SwGmm, FitDiagnostics> bic_sweep_fit(
    std::span<const CylindricalSample> samples, const FitConfig& cfg) {
  const std::size_t n = samples.size();
  if (n < static_cast<std::size_t>(cfg.min_samples_per_component)) {
    throw FitError("bic_sweep_fit: too few samples");
  }
  std::mt19937_64 rng(cfg.rng_seed);
  FitDiagnostics diag;
  diag.init_method = InitMethod::BicKmeanspp;

  SwGmm best;
  double best_bic = std::numeric_limits<double>::infinity();
  bool have = false;
  for (int k = 1; k <= cfg.k_max; ++k) {
    if (n < static_cast<std::size_t>(k) * cfg.min_samples_per_component) break;
    const auto labels = kmeanspp_init(samples, k, rng);
    EmResult r;
    try {
      r = em_fit(samples, k, labels, cfg);
    } catch (const FitError&) {
      continue;
    }
    const int k_eff = static_cast<int>(r.model.components.size());
    const double bic = free_parameter_count(k_eff) * std::log(static_cast<double>(n)) -
                       2.0 * r.loglik;
    diag.bic_per_k.emplace_back(k, bic);
    diag.em_iters_per_k.push_back(r.iters);
    diag.covariance_clamped = diag.covariance_clamped || r.clamped;
    if (bic < best_bic) {
      best_bic = bic;
      best = r.model;
      diag.selected_k = k;
      diag.final_loglik = r.loglik;
      have = true;
    }
  }
  if (!have) throw FitError("bic_sweep_fit: no feasible candidate K");
  return {best, diag};
}

struct MeanShiftResult {
  std::vector<CylindricalSample> modes;
  std::vector<int> labels;
  double bandwidth_theta = 0.0;
  double bandwidth_rho = 0.0;
  double merge_radius = 0.0;
};

// Mean-shift mode seeking on the cylinder with a Gaussian kernel and
// per-dimension Silverman bandwidth h_d = (4 / ((d+2) n))^(1/(d+4)) sigma_d,
// d = 2. Cost is O(n^2 I).
inline MeanShiftResult meanshift_modes(std::span<const CylindricalSample> samples) {
  const std::size_t n = samples.size();
  if (n == 0) throw std::invalid_argument("meanshift_modes: empty sample set");

  double s = 0.0, c = 0.0, mr = 0.0;
  for (const auto& z : samples) {
    s += std::sin(z.theta);
    c += std::cos(z.theta);
    mr += z.rho;
  }
  mr /= n;
  double resultant = std::sqrt(s * s + c * c) / n;
  resultant = std::clamp(resultant, 1e-6, 1.0 - 1e-12);
  const double sigma_theta = std::sqrt(-2.0 * std::log(resultant));
  double var_rho = 0.0;
  for (const auto& z : samples) var_rho += (z.rho - mr) * (z.rho - mr);
  const double sigma_rho = std::sqrt(var_rho / n);

  const double factor = std::pow(4.0 / (4.0 * n), 1.0 / 6.0);
  MeanShiftResult out;
  out.bandwidth_theta = std::max(factor * sigma_theta, 1e-3);
  out.bandwidth_rho = std::max(factor * sigma_rho, 1e-3);
  out.merge_radius = 0.5 * std::min(out.bandwidth_theta, out.bandwidth_rho);

  const double ht2 = out.bandwidth_theta * out.bandwidth_theta;
  const double hr2 = out.bandwidth_rho * out.bandwidth_rho;
  out.labels.assign(n, -1);
  for (std::size_t j = 0; j < n; ++j) {
    double th = samples[j].theta;
    double rho = samples[j].rho;
    for (int it = 0; it < 100; ++it) {
      double wsum = 0.0, dth = 0.0, rnum = 0.0;
      for (const auto& z : samples) {
        const double at = angular_diff(z.theta, th);
        const double ar = z.rho - rho;
        const double w = std::exp(-0.5 * (at * at / ht2 + ar * ar / hr2));
        wsum += w;
        dth += w * at;
        rnum += w * z.rho;
      }
      const double step_t = dth / wsum;
      const double new_rho = rnum / wsum;
      const double moved = std::sqrt(step_t * step_t + (new_rho - rho) * (new_rho - rho));
      th = wrap_angle(th + step_t);
      rho = new_rho;
      if (moved < 1e-5) break;
    }
    // merge into an existing mode if within the merge radius
    int mode = -1;
    for (std::size_t m = 0; m < out.modes.size(); ++m) {
      if (std::sqrt(cyl_dist_sq(th, rho, out.modes[m].theta, out.modes[m].rho)) <=
          out.merge_radius) {
        mode = static_cast<int>(m);
        break;
      }
    }
    if (mode < 0) {
      mode = static_cast<int>(out.modes.size());
      out.modes.emplace_back(th, std::max(rho, 0.0));
    }
    out.labels[j] = mode;
  }
  return out;
}

// Mean-shift ablation initializer: converged mode count is passed directly
// to EM as K, labels by converged basin.
inline std::pair<SwGmm, FitDiagnostics> meanshift_fit(
    std::span<const CylindricalSample> samples, const FitConfig& cfg) {
  const std::size_t n = samples.size();
  if (n == 0) throw FitError("meanshift_fit: empty sample set");

  MeanShiftResult ms = meanshift_modes(samples);
  const int found = static_cast<int>(ms.modes.size());
  const int k_feasible =
      std::max(1, static_cast<int>(n / static_cast<std::size_t>(cfg.min_samples_per_component)));
  std::vector<int> labels = ms.labels;

  // A mode whose basin falls below the per-component sample floor would seed
  // a near-singular component; keep the most populated modes that clear the
  // floor (at least one), capped by em_fit feasibility, and reassign the rest
  // by nearest kept mode.
  std::vector<std::size_t> count(found, 0);
  for (int l : labels) ++count[l];
  std::vector<int> order(found);
  for (int i = 0; i < found; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return count[a] > count[b]; });
  int k = 0;
  while (k < found && k < k_feasible &&
         count[order[k]] >= static_cast<std::size_t>(cfg.min_samples_per_component)) {
    ++k;
  }
  if (k == 0) k = 1;
  if (k < found) {
    order.resize(k);
    std::vector<int> remap(found, -1);
    for (int i = 0; i < k; ++i) remap[order[i]] = i;
    for (std::size_t j = 0; j < n; ++j) {
      if (remap[labels[j]] >= 0) {
        labels[j] = remap[labels[j]];
        continue;
      }
      double best = std::numeric_limits<double>::infinity();
      int pick = 0;
      for (int i = 0; i < k; ++i) {
        const auto& m = ms.modes[order[i]];
        const double d = cyl_dist_sq(samples[j].theta, samples[j].rho, m.theta, m.rho);
        if (d < best) {
          best = d;
          pick = i;
        }
      }
      labels[j] = pick;
    }
  }

  EmResult r = em_fit(samples, k, labels, cfg);
  FitDiagnostics diag;
  diag.init_method = InitMethod::MeanShift;
  diag.selected_k = k;
  diag.final_loglik = r.loglik;
  diag.em_iters_per_k.push_back(r.iters);
  diag.covariance_clamped = r.clamped;
  diag.ms_bandwidth_theta = ms.bandwidth_theta;
  diag.ms_bandwidth_rho = ms.bandwidth_rho;
  diag.ms_merge_radius = ms.merge_radius;
  return {r.model, diag};
}

}  // namespace flowdyn
