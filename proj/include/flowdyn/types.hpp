#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "flowdyn/angles.hpp"

namespace flowdyn {

// One motion observation on the orientation--speed cylinder.
struct CylindricalSample {
  double theta{0.0};      // heading [rad], in [-pi, pi)
  double rho{0.0};        // speed [m/s], >= 0
  double timestamp{0.0};  // [s], replay ordering only

  CylindricalSample() = default;
  CylindricalSample(double theta_, double rho_, double timestamp_ = 0.0)
      : theta(wrap_angle(theta_)), rho(rho_), timestamp(timestamp_) {
    if (!std::isfinite(rho_) || rho_ < 0.0) {
      throw std::invalid_argument("CylindricalSample: rho must be finite and >= 0");
    }
  }
};

// One semi-wrapped mixture component. The 2x2 covariance is stored as its
// three independent entries (theta-theta, theta-rho, rho-rho).
struct SwComponent {
  double weight{1.0};
  double mu_theta{0.0};  // [rad], in [-pi, pi)
  double mu_rho{0.0};    // [m/s]
  double sigma_tt{1.0};  // [rad^2]
  double sigma_tr{0.0};  // [rad * m/s]
  double sigma_rr{1.0};  // [(m/s)^2]

  double cov_det() const { return sigma_tt * sigma_rr - sigma_tr * sigma_tr; }
};

// Fitted semi-wrapped Gaussian mixture.
struct SwGmm {
  std::vector<SwComponent> components;
  int winding{1};                    // replica shifts on each side
  std::size_t sample_count_at_fit{0};
};

struct Position3 {
  double x{0.0};
  double y{0.0};
  double z{0.0};
};

inline bool is_finite(const Position3& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

}  // namespace flowdyn
