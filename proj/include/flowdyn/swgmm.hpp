#pragma once

#include <cmath>
#include <stdexcept>

#include "flowdyn/types.hpp"

namespace flowdyn {

struct NumericalDegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

// Precomputed inverse and normalizer of a 2x2 covariance.
struct GaussCache {
  double inv_tt, inv_tr, inv_rr;
  double norm;  // 1 / (2 pi sqrt(det))

  explicit GaussCache(const SwComponent& c) {
    const double det = c.cov_det();
    if (!(det > 0.0) || !std::isfinite(det)) {
      throw NumericalDegeneracyError("singular covariance in semi-wrapped component");
    }
    inv_tt = c.sigma_rr / det;
    inv_rr = c.sigma_tt / det;
    inv_tr = -c.sigma_tr / det;
    norm = 1.0 / (kTwoPi * std::sqrt(det));
  }

  double density(double dt, double dr) const {
    const double q = dt * (inv_tt * dt + inv_tr * dr) + dr * (inv_tr * dt + inv_rr * dr);
    return norm * std::exp(-0.5 * q);
  }
};

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace detail

// Semi-wrapped Gaussian density: sum of 2*pi-shifted replicas in theta.
inline double sw_gaussian_density(const CylindricalSample& z, const SwComponent& comp,
                                  int winding) {
  const detail::GaussCache g(comp);
  double acc = 0.0;
  for (int w = -winding; w <= winding; ++w) {
    acc += g.density(z.theta + kTwoPi * w - comp.mu_theta, z.rho - comp.mu_rho);
  }
  return acc;
}

// Mixture density p(z | model) per the semi-wrapped mixture.
inline double mixture_density(const CylindricalSample& z, const SwGmm& model) {
  double acc = 0.0;
  for (const auto& c : model.components) {
    acc += c.weight * sw_gaussian_density(z, c, model.winding);
  }
  return acc;
}

// Marginal density over direction: marginalizing the linear (speed) dimension
// of a bivariate Gaussian leaves the univariate Gaussian in theta.
inline double marginal_direction_density(double theta, const SwGmm& model) {
  double acc = 0.0;
  for (const auto& c : model.components) {
    const double sd = std::sqrt(c.sigma_tt);
    const double norm = 1.0 / (sd * std::sqrt(kTwoPi));
    for (int w = -model.winding; w <= model.winding; ++w) {
      const double d = (theta + kTwoPi * w - c.mu_theta) / sd;
      acc += c.weight * norm * std::exp(-0.5 * d * d);
    }
  }
  return acc;
}

// Index of the angular bin containing theta; bins partition [-pi, pi) into
// B equal intervals, bin 0 starting at -pi.
inline int direction_bin_of(double theta, int bins) {
  int b = static_cast<int>(std::floor((theta + kPi) * bins / kTwoPi));
  if (b < 0) b = 0;
  if (b >= bins) b = bins - 1;
  return b;
}

// Probability mass the mixture assigns to one angular bin, computed from the
// univariate Gaussian CDF per component and winding replica.
inline double direction_bin_mass(int bin_index, int bins, const SwGmm& model) {
  if (bins < 1) throw std::invalid_argument("direction_bin_mass: bins must be >= 1");
  const double width = kTwoPi / bins;
  const double lo = -kPi + bin_index * width;
  const double hi = lo + width;
  double acc = 0.0;
  for (const auto& c : model.components) {
    const double sd = std::sqrt(c.sigma_tt);
    for (int w = -model.winding; w <= model.winding; ++w) {
      const double shift = kTwoPi * w - c.mu_theta;
      acc += c.weight * (detail::normal_cdf((hi + shift) / sd) -
                         detail::normal_cdf((lo + shift) / sd));
    }
  }
  return acc;
}

}  // namespace flowdyn
