#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "flowdyn/angles.hpp"
#include "flowdyn/swgmm.hpp"

namespace flowdyn {

// Discrete directional histogram baseline. Bin counts only; O(1) per
// observation and allocation-free after construction.
class DirHistogram {
 public:
  // Density floor for zero-count bins; sets the baseline's worst-case MLPD.
  static constexpr double kDensityFloor = 1e-12;

  explicit DirHistogram(int bins = 8) : counts_(bins, 0) {
    if (bins < 1) throw std::invalid_argument("DirHistogram: bins must be >= 1");
  }

  int bins() const { return static_cast<int>(counts_.size()); }
  std::uint64_t total() const { return total_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }

  void observe(double theta) {
    ++counts_[direction_bin_of(theta, bins())];
    ++total_;
  }

  void add(const DirHistogram& other) {
    if (other.bins() != bins()) throw std::invalid_argument("DirHistogram::add: bin mismatch");
    for (int b = 0; b < bins(); ++b) counts_[b] += other.counts_[b];
    total_ += other.total_;
  }

  // Normalized bin probability; uniform when no observations.
  double bin_prob(int b) const {
    if (total_ == 0) return 1.0 / bins();
    return static_cast<double>(counts_[b]) / static_cast<double>(total_);
  }

  // Piecewise-constant density P_b / (2 pi / B), floored for empty bins.
  double density(double theta) const {
    const double d = bin_prob(direction_bin_of(theta, bins())) / (kTwoPi / bins());
    return d > kDensityFloor ? d : kDensityFloor;
  }

  void set_counts(std::vector<std::uint64_t> counts, std::uint64_t total) {
    counts_ = std::move(counts);
    total_ = total;
  }

 private:
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

}  // namespace flowdyn
