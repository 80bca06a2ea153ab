#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <tuple>

#include "flowdyn/types.hpp"

namespace flowdyn {

// Floor-quantized cell coordinates at resolution delta.
struct CellKey {
  std::int64_t ix = 0;
  std::int64_t iy = 0;
  std::int64_t iz = 0;

  friend bool operator==(const CellKey&, const CellKey&) = default;
  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

inline CellKey key_of(const Position3& p, double delta) {
  if (delta <= 0.0) throw std::invalid_argument("key_of: resolution must be > 0");
  if (!is_finite(p)) throw std::invalid_argument("key_of: non-finite position");
  return CellKey{static_cast<std::int64_t>(std::floor(p.x / delta)),
                 static_cast<std::int64_t>(std::floor(p.y / delta)),
                 static_cast<std::int64_t>(std::floor(p.z / delta))};
}

inline Position3 cell_center(const CellKey& k, double delta) {
  return Position3{(k.ix + 0.5) * delta, (k.iy + 0.5) * delta, (k.iz + 0.5) * delta};
}

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint64_t v : {static_cast<std::uint64_t>(k.ix), static_cast<std::uint64_t>(k.iy),
                            static_cast<std::uint64_t>(k.iz)}) {
      h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace flowdyn
