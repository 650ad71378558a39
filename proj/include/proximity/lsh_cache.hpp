#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "proximity/flat_cache.hpp"

namespace proximity {

/// L-bit random-hyperplane signature. The first hyperplane owns the most
/// significant bit.
struct BucketId {
  std::uint64_t bits = 0;
  auto operator<=>(const BucketId&) const = default;
};

inline constexpr unsigned kMaxHashBits = 48;

/// L normal vectors drawn i.i.d. N(0, 1) per component from a counter-based
/// generator, so the set is a pure function of (dimension, L, seed).
class HyperplaneSet {
 public:
  HyperplaneSet(std::size_t dimension, unsigned bits, std::uint64_t seed);

  /// Explicit normals (seed reported as 0). Each must be nonzero and share
  /// one dimension.
  static HyperplaneSet from_normals(std::vector<Embedding> normals);

  /// Bit i is set iff dot(q, r_i) >= 0.
  BucketId hash(const Embedding& query) const;

  unsigned bits() const noexcept { return static_cast<unsigned>(normals_.size()); }
  std::size_t dimension() const noexcept { return dimension_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<Embedding>& normals() const noexcept { return normals_; }

 private:
  HyperplaneSet(std::size_t dimension, std::uint64_t seed, std::vector<Embedding> normals);

  std::size_t dimension_;
  std::uint64_t seed_;
  std::vector<Embedding> normals_;
};

/// Standard normal variate for a (seed, counter) pair.
double counter_normal(std::uint64_t seed, std::uint64_t counter) noexcept;

struct LshCacheConfig {
  unsigned hash_bits = 8;
  std::size_t bucket_capacity = 20;
  double tolerance = 0.0;
  DistanceMetric metric = DistanceMetric::L2;
  EvictionPolicy policy = EvictionPolicy::FIFO;
  std::size_t dimension = 1;
  std::uint64_t seed = 0;
  std::size_t value_length = 0;

  void validate() const;
  std::uint64_t theoretical_capacity() const noexcept {
    return (std::uint64_t{1} << hash_bits) * bucket_capacity;
  }
};

struct LshOccupancy {
  std::size_t entries;
  std::size_t allocated_buckets;
  std::uint64_t theoretical_capacity;
  double relative;
};

/// b-way set-associative approximate cache: the signature selects one bucket
/// and only that bucket (a FlatCache of capacity b) is scanned. Buckets are
/// allocated on first insert and evict independently.
class LshCache final : public ApproximateCache {
 public:
  explicit LshCache(LshCacheConfig config);
  LshCache(LshCacheConfig config, HyperplaneSet planes);

  std::optional<CacheHit> lookup(const Embedding& query) override;
  using ApproximateCache::insert;
  std::optional<CacheEntry> insert(const Embedding& key,
                                   std::shared_ptr<const CacheValue> value) override;

  BucketId hash(const Embedding& query) const { return planes_.hash(query); }
  LshOccupancy occupancy() const noexcept;

  std::size_t size() const override { return entries_; }
  std::uint64_t theoretical_capacity() const override { return config_.theoretical_capacity(); }
  std::size_t allocated_buckets() const override { return buckets_.size(); }
  std::uint64_t distance_computation_count() const override { return distance_ops_; }
  /// Hyperplane dot products spent hashing (L per lookup or insert).
  std::uint64_t hash_dot_count() const noexcept { return hash_dots_; }

  std::size_t dimension() const override { return config_.dimension; }
  DistanceMetric metric() const override { return config_.metric; }
  double tolerance() const override { return config_.tolerance; }
  EvictionPolicy policy() const override { return config_.policy; }
  const LshCacheConfig& config() const noexcept { return config_; }
  const HyperplaneSet& planes() const noexcept { return planes_; }

  /// Entries of every bucket, each ordered by its bucket-local inserted_seq;
  /// buckets ascend by id.
  std::vector<CacheEntry> entries() const override;
  const FlatCache* bucket(BucketId id) const;

 private:
  FlatCacheConfig bucket_config() const noexcept;

  LshCacheConfig config_;
  HyperplaneSet planes_;
  std::unordered_map<std::uint64_t, FlatCache> buckets_;
  std::size_t entries_ = 0;
  std::uint64_t distance_ops_ = 0;
  std::uint64_t hash_dots_ = 0;
};

}  // namespace proximity

template <>
struct std::hash<proximity::BucketId> {
  std::size_t operator()(const proximity::BucketId& id) const noexcept {
    return std::hash<std::uint64_t>{}(id.bits);
  }
};
