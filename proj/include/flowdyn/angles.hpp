#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace flowdyn {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Wraps an angle to [-pi, pi); pi maps to -pi.
inline double wrap_angle(double a) {
  if (!std::isfinite(a)) {
    throw std::invalid_argument("wrap_angle: non-finite angle");
  }
  double r = a - kTwoPi * std::floor((a + kPi) / kTwoPi);
  if (r >= kPi) r -= kTwoPi;
  if (r < -kPi) r += kTwoPi;
  return r;
}

// Shortest signed angular difference a - b, in [-pi, pi).
inline double angular_diff(double a, double b) { return wrap_angle(a - b); }

// Squared circular-linear distance on the (theta, rho) cylinder.
inline double cyl_dist_sq(double theta_a, double rho_a, double theta_b, double rho_b) {
  const double dt = angular_diff(theta_a, theta_b);
  const double dr = rho_a - rho_b;
  return dt * dt + dr * dr;
}

}  // namespace flowdyn
