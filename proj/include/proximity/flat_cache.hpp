#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "proximity/cache.hpp"

namespace proximity {

struct FlatCacheConfig {
  std::size_t capacity = 1;
  double tolerance = 0.0;
  DistanceMetric metric = DistanceMetric::L2;
  EvictionPolicy policy = EvictionPolicy::FIFO;
  std::size_t dimension = 1;
  /// Required length of every inserted value; 0 disables the check.
  std::size_t value_length = 0;

  void validate() const;
};

struct FlatOccupancy {
  std::size_t entries;
  std::size_t capacity;
};

/// Fixed-capacity approximate key-value store. Lookups scan every stored key
/// and hit when the closest one lies within the tolerance.
///
/// Ties on the minimal distance resolve to the most recently inserted entry.
/// Re-inserting a bit-identical key replaces its value and refreshes both
/// sequence numbers. LRU recency is refreshed on hits only.
class FlatCache final : public ApproximateCache {
 public:
  explicit FlatCache(FlatCacheConfig config);

  std::optional<CacheHit> lookup(const Embedding& query) override;
  using ApproximateCache::insert;
  std::optional<CacheEntry> insert(const Embedding& key,
                                   std::shared_ptr<const CacheValue> value) override;

  FlatOccupancy occupancy() const noexcept { return {slots_.size(), config_.capacity}; }

  std::size_t size() const override { return slots_.size(); }
  std::uint64_t theoretical_capacity() const override { return config_.capacity; }
  std::size_t allocated_buckets() const override { return slots_.empty() ? 0 : 1; }
  std::uint64_t distance_computation_count() const override { return distance_ops_; }

  std::size_t dimension() const override { return config_.dimension; }
  DistanceMetric metric() const override { return config_.metric; }
  double tolerance() const override { return config_.tolerance; }
  EvictionPolicy policy() const override { return config_.policy; }
  const FlatCacheConfig& config() const noexcept { return config_; }

  std::vector<CacheEntry> entries() const override;

 private:
  struct Slot {
    std::shared_ptr<const CacheValue> value;
    std::uint64_t key_hash;
    std::uint64_t inserted_seq;
    std::uint64_t last_used_seq;
  };

  const float* key_row(std::size_t slot) const noexcept { return keys_.data() + slot * config_.dimension; }
  std::optional<std::size_t> find_exact(const Embedding& key, std::uint64_t hash) const;
  std::size_t choose_victim() const noexcept;
  CacheEntry remove_slot(std::size_t slot);
  void unindex(std::uint64_t hash, std::size_t slot);

  FlatCacheConfig config_;
  std::vector<float> keys_;  // row-major, one row per slot
  std::vector<Slot> slots_;
  std::unordered_multimap<std::uint64_t, std::size_t> exact_index_;
  std::uint64_t seq_ = 0;
  std::uint64_t distance_ops_ = 0;
};

}  // namespace proximity
