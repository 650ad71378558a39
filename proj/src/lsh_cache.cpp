#include "proximity/lsh_cache.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace proximity {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Uniform in (0, 1], never zero so log() stays finite.
double unit_open(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

double counter_normal(std::uint64_t seed, std::uint64_t counter) noexcept {
  const std::uint64_t key = splitmix64(seed ^ splitmix64(counter));
  const double u1 = unit_open(splitmix64(key));
  const double u2 = unit_open(splitmix64(key + 1));
  // Box-Muller, cosine branch only.
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

HyperplaneSet::HyperplaneSet(std::size_t dimension, std::uint64_t seed,
                             std::vector<Embedding> normals)
    : dimension_(dimension), seed_(seed), normals_(std::move(normals)) {}

HyperplaneSet::HyperplaneSet(std::size_t dimension, unsigned bits, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
  if (dimension < 1) throw ContractViolation("hyperplane dimension must be >= 1");
  if (bits > kMaxHashBits) {
    throw ContractViolation("hash_bits must be <= " + std::to_string(kMaxHashBits));
  }
  normals_.reserve(bits);
  std::uint64_t counter = 0;
  for (unsigned i = 0; i < bits; ++i) {
    std::vector<float> values(dimension);
    bool nonzero = false;
    while (!nonzero) {
      for (auto& v : values) {
        v = static_cast<float>(counter_normal(seed, counter++));
        nonzero = nonzero || v != 0.0f;
      }
    }
    normals_.emplace_back(std::move(values));
  }
}

HyperplaneSet HyperplaneSet::from_normals(std::vector<Embedding> normals) {
  if (normals.size() > kMaxHashBits) {
    throw ContractViolation("at most " + std::to_string(kMaxHashBits) + " hyperplanes supported");
  }
  if (normals.empty()) throw ContractViolation("from_normals needs at least one normal");
  const std::size_t d = normals.front().dimension();
  for (const auto& n : normals) {
    require_dimension(n, d, "hyperplane normal");
    if (std::all_of(n.values().begin(), n.values().end(), [](float v) { return v == 0.0f; })) {
      throw ContractViolation("hyperplane normal must be nonzero");
    }
  }
  return HyperplaneSet(d, 0, std::move(normals));
}

BucketId HyperplaneSet::hash(const Embedding& query) const {
  require_dimension(query, dimension_, "lsh hash");
  std::uint64_t bits = 0;
  for (const auto& normal : normals_) {
    const double projection = kernels::dot_lanes(query.data(), normal.data(), dimension_);
    bits = (bits << 1) | (projection >= 0.0 ? 1u : 0u);
  }
  return BucketId{bits};
}

void LshCacheConfig::validate() const {
  if (hash_bits > kMaxHashBits) {
    throw ContractViolation("hash_bits must be <= " + std::to_string(kMaxHashBits));
  }
  if (bucket_capacity < 1) throw ContractViolation("bucket_capacity must be >= 1");
  if (!(tolerance >= 0.0)) throw ContractViolation("tolerance must be >= 0");
  if (dimension < 1) throw ContractViolation("dimension must be >= 1");
}

LshCache::LshCache(LshCacheConfig config)
    : LshCache(config, HyperplaneSet((config.validate(), config.dimension), config.hash_bits, config.seed)) {}

LshCache::LshCache(LshCacheConfig config, HyperplaneSet planes)
    : config_(config), planes_(std::move(planes)) {
  config_.validate();
  if (planes_.dimension() != config_.dimension || planes_.bits() != config_.hash_bits) {
    throw ContractViolation("hyperplane set does not match the cache's dimension and hash_bits");
  }
}

FlatCacheConfig LshCache::bucket_config() const noexcept {
  return FlatCacheConfig{config_.bucket_capacity, config_.tolerance, config_.metric,
                         config_.policy,          config_.dimension, config_.value_length};
}

std::optional<CacheHit> LshCache::lookup(const Embedding& query) {
  const BucketId id = planes_.hash(query);
  hash_dots_ += config_.hash_bits;
  auto it = buckets_.find(id.bits);
  if (it == buckets_.end()) return std::nullopt;
  distance_ops_ += it->second.size();
  return it->second.lookup(query);
}

std::optional<CacheEntry> LshCache::insert(const Embedding& key,
                                           std::shared_ptr<const CacheValue> value) {
  const BucketId id = planes_.hash(key);
  hash_dots_ += config_.hash_bits;
  if (!value) throw ContractViolation("lsh insert: null cache value");
  validate_value(*value, config_.dimension, config_.value_length);

  auto it = buckets_.find(id.bits);
  if (it == buckets_.end()) {
    it = buckets_.emplace(id.bits, FlatCache(bucket_config())).first;
  }
  const std::size_t before = it->second.size();
  auto evicted = it->second.insert(key, std::move(value));
  entries_ = entries_ - before + it->second.size();
  return evicted;
}

LshOccupancy LshCache::occupancy() const noexcept {
  const std::uint64_t cap = config_.theoretical_capacity();
  return {entries_, buckets_.size(), cap,
          static_cast<double>(entries_) / static_cast<double>(cap)};
}

std::vector<CacheEntry> LshCache::entries() const {
  std::vector<std::uint64_t> ids;
  ids.reserve(buckets_.size());
  for (const auto& [id, _] : buckets_) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  std::vector<CacheEntry> out;
  out.reserve(entries_);
  for (auto id : ids) {
    auto bucket_entries = buckets_.at(id).entries();
    std::move(bucket_entries.begin(), bucket_entries.end(), std::back_inserter(out));
  }
  return out;
}

const FlatCache* LshCache::bucket(BucketId id) const {
  auto it = buckets_.find(id.bits);
  return it == buckets_.end() ? nullptr : &it->second;
}

}  // namespace proximity
