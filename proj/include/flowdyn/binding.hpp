#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "flowdyn/fit.hpp"
#include "flowdyn/histogram.hpp"
#include "flowdyn/reservoir.hpp"
#include "flowdyn/scene_graph.hpp"
#include "flowdyn/spatial_hash.hpp"

namespace flowdyn {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  h = splitmix64(h ^ c);
  return h;
}

}  // namespace detail

// Stabilization gate for binding: transfers happen only after a window tau
// with no significant pose updates.
struct StabilityTracker {
  double tau = 10.0;                     // [s]
  double significance_threshold = 0.05;  // [m] max displacement treated as noise
  double last_significant_update = 0.0;

  void note_structural_event(double time) { last_significant_update = time; }

  void note_move(double time, double displacement) {
    if (displacement >= significance_threshold) last_significant_update = time;
  }

  bool stable(double now) const { return now - last_significant_update >= tau; }
};

// Per-cell dynamics record. The histogram accumulates every observation (the
// discrete baseline); the reservoir feeds the mixture fits.
struct DynamicsCell {
  enum class Ownership { HashOwned, NodeBound };

  ReservoirBuffer buffer;
  DirHistogram histogram;
  std::optional<SwGmm> model;
  std::optional<FitDiagnostics> diagnostics;
  Ownership ownership = Ownership::HashOwned;
  CellKey key{};        // valid when HashOwned
  NodeId owner_node = 0;  // valid when NodeBound
  double last_fit_time = -1.0;
  bool dirty = false;

  DynamicsCell(std::size_t capacity, int bins) : buffer(capacity), histogram(bins) {}
};

enum class FitterKind { BicSweep, MeanShift };

// Sparse map of dynamics cells plus the ownership lifecycle:
// hash-space accumulation -> node binding after stabilization ->
// move-with-node -> revert to hash space on removal.
class DynamicsMap {
 public:
  DynamicsMap(double resolution, std::size_t reservoir_capacity, int bins,
              StabilityTracker tracker = {})
      : resolution_(resolution),
        capacity_(reservoir_capacity),
        bins_(bins),
        tracker_(tracker) {
    if (resolution <= 0.0) throw std::invalid_argument("DynamicsMap: resolution must be > 0");
  }

  double resolution() const { return resolution_; }
  int bins() const { return bins_; }
  StabilityTracker& tracker() { return tracker_; }
  const StabilityTracker& tracker() const { return tracker_; }

  const std::unordered_map<CellKey, DynamicsCell, CellKeyHash>& hash_cells() const {
    return hash_cells_;
  }
  const std::map<NodeId, DynamicsCell>& node_cells() const { return node_cells_; }
  const std::unordered_map<CellKey, NodeId, CellKeyHash>& cell_bindings() const {
    return cell_bindings_;
  }

  std::size_t cell_count() const { return hash_cells_.size() + node_cells_.size(); }

  std::uint64_t total_observations() const {
    std::uint64_t t = 0;
    for (const auto& [k, c] : hash_cells_) t += c.buffer.total_seen();
    for (const auto& [id, c] : node_cells_) t += c.buffer.total_seen();
    return t;
  }

  // Route one observation into its hash cell, allocating the cell on first
  // contact. New observations always land in hash space and are transferred
  // to nodes at the next stabilized bind pass.
  CellKey observe(const Position3& p, const CylindricalSample& z, std::mt19937_64& rng) {
    const CellKey k = key_of(p, resolution_);
    auto [it, inserted] = hash_cells_.try_emplace(k, capacity_, bins_);
    if (inserted) {
      it->second.key = k;
    }
    it->second.buffer.push(z, rng);
    it->second.histogram.observe(z.theta);
    it->second.dirty = true;
    return k;
  }

  // Transfer every hash cell to its nearest alive navigational node once the
  // graph has been stable for tau. Returns the number of transfers.
  std::size_t try_bind(const LayeredGraph& graph, double now, std::mt19937_64& rng) {
    if (!tracker_.stable(now)) return 0;
    if (graph.alive_count() == 0) return 0;

    std::vector<CellKey> keys;
    keys.reserve(hash_cells_.size());
    for (const auto& [k, c] : hash_cells_) keys.push_back(k);
    std::sort(keys.begin(), keys.end());

    std::size_t transfers = 0;
    for (const CellKey& k : keys) {
      auto it = hash_cells_.find(k);
      const auto nearest = graph.nearest_alive(cell_center(k, resolution_));
      if (!nearest) continue;
      DynamicsCell cell = std::move(it->second);
      hash_cells_.erase(it);
      attach_to_node(*nearest, std::move(cell), rng);
      cell_bindings_[k] = *nearest;
      ++transfers;
    }
    return transfers;
  }

  // Dynamics stay with the node id; a repositioned node keeps its history.
  void on_node_moved(NodeId, const Position3&) {}

  // Removed node: its dynamics revert to hash space at the cell containing
  // the node's last position, merging with any cell already there.
  void on_node_removed(NodeId id, const Position3& last_position, std::mt19937_64& rng) {
    auto it = node_cells_.find(id);
    for (auto bit = cell_bindings_.begin(); bit != cell_bindings_.end();) {
      if (bit->second == id) {
        bit = cell_bindings_.erase(bit);
      } else {
        ++bit;
      }
    }
    if (it == node_cells_.end()) return;
    DynamicsCell cell = std::move(it->second);
    node_cells_.erase(it);
    const CellKey k = key_of(last_position, resolution_);
    cell.ownership = DynamicsCell::Ownership::HashOwned;
    cell.key = k;
    cell.owner_node = 0;
    auto hit = hash_cells_.find(k);
    if (hit == hash_cells_.end()) {
      hash_cells_.emplace(k, std::move(cell));
    } else {
      merge_into(hit->second, cell, rng);
    }
  }

  void handle_notifications(const std::vector<BindingNotification>& notes, double time,
                            std::mt19937_64& rng) {
    for (const auto& n : notes) {
      switch (n.kind) {
        case BindingNotification::Kind::NodeAdded:
          tracker_.note_structural_event(time);
          break;
        case BindingNotification::Kind::NodeMoved: {
          const double dx = n.new_position.x - n.old_position.x;
          const double dy = n.new_position.y - n.old_position.y;
          const double dz = n.new_position.z - n.old_position.z;
          tracker_.note_move(time, std::sqrt(dx * dx + dy * dy + dz * dz));
          on_node_moved(n.id, n.new_position);
          break;
        }
        case BindingNotification::Kind::NodeRemoved:
          tracker_.note_structural_event(time);
          on_node_removed(n.id, n.old_position, rng);
          break;
      }
    }
  }

  // Refit every dirty cell whose refit interval has elapsed. Fits for
  // distinct cells run concurrently; each cell draws its randomness from a
  // seed derived from the fit seed and the cell's identity, so parallel and
  // serial schedules produce identical models.
  std::size_t update_models(FitterKind fitter, const FitConfig& cfg, double interval,
                            double now, unsigned parallelism = 1) {
    struct Task {
      DynamicsCell* cell;
      std::uint64_t seed;
    };
    std::vector<Task> tasks;
    auto consider = [&](DynamicsCell& cell, std::uint64_t seed) {
      if (!cell.dirty) return;
      if (cell.last_fit_time >= 0.0 && now - cell.last_fit_time < interval) return;
      if (cell.buffer.size() < static_cast<std::size_t>(cfg.min_samples_per_component)) return;
      tasks.push_back({&cell, seed});
    };
    for (auto& [k, cell] : hash_cells_) {
      consider(cell, detail::mix_seed(cfg.rng_seed, static_cast<std::uint64_t>(k.ix),
                                      static_cast<std::uint64_t>(k.iy),
                                      static_cast<std::uint64_t>(k.iz)));
    }
    for (auto& [id, cell] : node_cells_) {
      consider(cell, detail::mix_seed(cfg.rng_seed, 0x6e6f6465ull,
                                      static_cast<std::uint64_t>(id)));
    }

    auto run = [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        DynamicsCell& cell = *tasks[i].cell;
        FitConfig local = cfg;
        local.rng_seed = tasks[i].seed;
        const auto samples = cell.buffer.snapshot();
        try {
          auto [model, diag] = fitter == FitterKind::BicSweep
                                   ? bic_sweep_fit(samples, local)
                                   : meanshift_fit(samples, local);
          cell.model = std::move(model);
          cell.diagnostics = std::move(diag);
        } catch (const FitError&) {
          // keep the previous model
        }
        cell.last_fit_time = now;
        cell.dirty = false;
      }
    };

    if (parallelism <= 1 || tasks.size() < 2) {
      run(0, tasks.size());
    } else {
      const unsigned nthreads = std::min<unsigned>(parallelism, tasks.size());
      std::vector<std::thread> threads;
      const std::size_t chunk = (tasks.size() + nthreads - 1) / nthreads;
      for (unsigned t = 0; t < nthreads; ++t) {
        const std::size_t b = t * chunk;
        const std::size_t e = std::min(tasks.size(), b + chunk);
        if (b < e) threads.emplace_back(run, b, e);
      }
      for (auto& th : threads) th.join();
    }
    return tasks.size();
  }

  // Reinsert persisted cells; used by snapshot loading only.
  void restore_hash_cell(const CellKey& k, DynamicsCell cell) {
    cell.ownership = DynamicsCell::Ownership::HashOwned;
    cell.key = k;
    hash_cells_.insert_or_assign(k, std::move(cell));
  }
  void restore_node_cell(NodeId id, DynamicsCell cell) {
    cell.ownership = DynamicsCell::Ownership::NodeBound;
    cell.owner_node = id;
    node_cells_.insert_or_assign(id, std::move(cell));
  }
  void restore_binding(const CellKey& k, NodeId id) { cell_bindings_[k] = id; }

  // Flag every cell for refit at the next update pass.
  void mark_all_dirty() {
    for (auto& [k, c] : hash_cells_) {
      c.dirty = true;
      c.last_fit_time = -1.0;
    }
    for (auto& [id, c] : node_cells_) {
      c.dirty = true;
      c.last_fit_time = -1.0;
    }
  }

  // Resolve the cell responsible for a query position: the hash cell at the
  // position's key, or the node-bound cell that owns that key.
  const DynamicsCell* lookup(const Position3& p) const {
    const CellKey k = key_of(p, resolution_);
    auto bit = cell_bindings_.find(k);
    if (bit != cell_bindings_.end()) {
      auto nit = node_cells_.find(bit->second);
      if (nit != node_cells_.end()) return &nit->second;
    }
    auto hit = hash_cells_.find(k);
    if (hit != hash_cells_.end()) return &hit->second;
    return nullptr;
  }

  DynamicsCell* mutable_lookup(const Position3& p) {
    return const_cast<DynamicsCell*>(std::as_const(*this).lookup(p));
  }

 private:
  void attach_to_node(NodeId id, DynamicsCell&& cell, std::mt19937_64& rng) {
    auto it = node_cells_.find(id);
    if (it == node_cells_.end()) {
      cell.ownership = DynamicsCell::Ownership::NodeBound;
      cell.owner_node = id;
      cell.model.reset();
      cell.diagnostics.reset();
      cell.dirty = true;
      node_cells_.emplace(id, std::move(cell));
    } else {
      merge_into(it->second, cell, rng);
    }
  }

  void merge_into(DynamicsCell& dst, const DynamicsCell& src, std::mt19937_64& rng) {
    dst.buffer = ReservoirBuffer::merge(dst.buffer, src.buffer, rng);
    dst.histogram.add(src.histogram);
    dst.dirty = true;
  }

  double resolution_;
  std::size_t capacity_;
  int bins_;
  StabilityTracker tracker_;
  std::unordered_map<CellKey, DynamicsCell, CellKeyHash> hash_cells_;
  std::map<NodeId, DynamicsCell> node_cells_;
  std::unordered_map<CellKey, NodeId, CellKeyHash> cell_bindings_;
};

}  // namespace flowdyn
