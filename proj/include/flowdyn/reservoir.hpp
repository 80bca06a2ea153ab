#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "flowdyn/types.hpp"

namespace flowdyn {

// Fixed-capacity uniform subsample of an observation stream (Algorithm R):
// while not full, append; afterwards each new sample replaces a uniformly
// random entry with probability M/T.
class ReservoirBuffer {
 public:
  explicit ReservoirBuffer(std::size_t capacity = 200) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ReservoirBuffer: capacity must be > 0");
    entries_.reserve(capacity);
  }

  std::size_t capacity() const { return capacity_; }
  std::uint64_t total_seen() const { return total_seen_; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<CylindricalSample>& entries() const { return entries_; }

  void push(const CylindricalSample& z, std::mt19937_64& rng) {
    ++total_seen_;
    if (entries_.size() < capacity_) {
      entries_.push_back(z);
      return;
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < static_cast<double>(capacity_) / static_cast<double>(total_seen_)) {
      std::uniform_int_distribution<std::size_t> slot(0, capacity_ - 1);
      entries_[slot(rng)] = z;
    }
  }

  std::vector<CylindricalSample> snapshot() const { return entries_; }

  // Rebuild a buffer from persisted state.
  static ReservoirBuffer restore(std::size_t capacity, std::vector<CylindricalSample> entries,
                                 std::uint64_t total_seen) {
    ReservoirBuffer b(capacity);
    if (entries.size() > capacity || entries.size() != std::min<std::uint64_t>(total_seen, capacity)) {
      throw std::invalid_argument("ReservoirBuffer::restore: inconsistent state");
    }
    b.entries_ = std::move(entries);
    b.total_seen_ = total_seen;
    return b;
  }

  // Weighted uniform subsample of the union stream: each retained slot is
  // drawn from a's entries with probability T_a / (T_a + T_b), else from b's,
  // without replacement within each source.
  static ReservoirBuffer merge(const ReservoirBuffer& a, const ReservoirBuffer& b,
                               std::mt19937_64& rng) {
    if (a.capacity_ != b.capacity_) {
      throw std::invalid_argument("ReservoirBuffer::merge: capacity mismatch");
    }
    ReservoirBuffer out(a.capacity_);
    out.total_seen_ = a.total_seen_ + b.total_seen_;

    std::vector<CylindricalSample> pa = a.entries_;
    std::vector<CylindricalSample> pb = b.entries_;
    std::shuffle(pa.begin(), pa.end(), rng);
    std::shuffle(pb.begin(), pb.end(), rng);
    const std::size_t target =
        std::min<std::uint64_t>(out.total_seen_, static_cast<std::uint64_t>(out.capacity_));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::size_t ia = 0, ib = 0;
    const double pa_prob =
        out.total_seen_ == 0
            ? 0.0
            : static_cast<double>(a.total_seen_) / static_cast<double>(out.total_seen_);
    while (out.entries_.size() < target) {
      const bool from_a =
          (ib >= pb.size()) || (ia < pa.size() && u(rng) < pa_prob);
      if (from_a && ia < pa.size()) {
        out.entries_.push_back(pa[ia++]);
      } else if (ib < pb.size()) {
        out.entries_.push_back(pb[ib++]);
      } else {
        break;
      }
    }
    return out;
  }

 private:
  std::size_t capacity_;
  std::vector<CylindricalSample> entries_;
  std::uint64_t total_seen_ = 0;
};

}  // namespace flowdyn
