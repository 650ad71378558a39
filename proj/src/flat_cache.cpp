#include "proximity/flat_cache.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

namespace proximity {

namespace {

std::uint64_t hash_key(const Embedding& key) noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  for (float v : key.values()) {
    // -0.0f and 0.0f compare equal, so they must hash equal too.
    const float canonical = v == 0.0f ? 0.0f : v;
    h ^= std::bit_cast<std::uint32_t>(canonical);
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::vector<DocId> CacheValue::ids() const {
  std::vector<DocId> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) out.push_back(doc.id);
  return out;
}

void validate_value(const CacheValue& value, std::size_t dimension, std::size_t expected_length) {
  if (expected_length != 0 && value.docs.size() != expected_length) {
    throw ContractViolation("cache value holds " + std::to_string(value.docs.size()) +
                            " documents, expected " + std::to_string(expected_length));
  }
  std::vector<DocId> ids = value.ids();
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw ContractViolation("cache value contains duplicate document ids");
  }
  for (const auto& doc : value.docs) {
    require_dimension(doc.embedding, dimension, "cache value document");
  }
}

std::string_view to_string(EvictionPolicy policy) {
  return policy == EvictionPolicy::FIFO ? "fifo" : "lru";
}

EvictionPolicy parse_policy(std::string_view name) {
  if (name == "fifo" || name == "FIFO") return EvictionPolicy::FIFO;
  if (name == "lru" || name == "LRU") return EvictionPolicy::LRU;
  throw ContractViolation("unknown eviction policy '" + std::string(name) + "'");
}

void FlatCacheConfig::validate() const {
  if (capacity < 1) throw ContractViolation("capacity must be >= 1");
  if (!(tolerance >= 0.0)) throw ContractViolation("tolerance must be >= 0");
  if (dimension < 1) throw ContractViolation("dimension must be >= 1");
}

FlatCache::FlatCache(FlatCacheConfig config) : config_(config) {
  config_.validate();
}

std::optional<CacheHit> FlatCache::lookup(const Embedding& query) {
  require_dimension(query, config_.dimension, "flat lookup");
  const std::size_t n = slots_.size();
  distance_ops_ += n;
  if (n == 0) return std::nullopt;

  const std::size_t d = config_.dimension;
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double dist = kernels::distance(query.data(), key_row(i), d, config_.metric);
    if (dist < best_dist || (dist == best_dist && slots_[i].inserted_seq > slots_[best].inserted_seq)) {
      best = i;
      best_dist = dist;
    }
  }
  if (!(best_dist <= config_.tolerance)) return std::nullopt;

  Slot& slot = slots_[best];
  ++seq_;
  if (config_.policy == EvictionPolicy::LRU) slot.last_used_seq = seq_;
  return CacheHit{slot.value, best_dist,
                  Embedding::from_span({key_row(best), d})};
}

std::optional<CacheEntry> FlatCache::insert(const Embedding& key,
                                            std::shared_ptr<const CacheValue> value) {
  require_dimension(key, config_.dimension, "flat insert");
  if (!value) throw ContractViolation("flat insert: null cache value");
  validate_value(*value, config_.dimension, config_.value_length);

  const std::uint64_t h = hash_key(key);
  ++seq_;
  if (auto existing = find_exact(key, h)) {
    Slot& slot = slots_[*existing];
    slot.value = std::move(value);
    slot.inserted_seq = seq_;
    slot.last_used_seq = seq_;
    return std::nullopt;
  }

  std::optional<CacheEntry> evicted;
  if (slots_.size() >= config_.capacity) {
    evicted = remove_slot(choose_victim());
  }
  keys_.insert(keys_.end(), key.values().begin(), key.values().end());
  slots_.push_back(Slot{std::move(value), h, seq_, seq_});
  exact_index_.emplace(h, slots_.size() - 1);
  return evicted;
}

std::vector<CacheEntry> FlatCache::entries() const {
  std::vector<CacheEntry> out;
  out.reserve(slots_.size());
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    const Slot& s = slots_[i];
    out.push_back(CacheEntry{Embedding::from_span({key_row(i), config_.dimension}), s.value,
                             s.inserted_seq, s.last_used_seq});
  }
  std::sort(out.begin(), out.end(),
            [](const CacheEntry& a, const CacheEntry& b) { return a.inserted_seq < b.inserted_seq; });
  return out;
}

std::optional<std::size_t> FlatCache::find_exact(const Embedding& key, std::uint64_t hash) const {
  const auto [first, last] = exact_index_.equal_range(hash);
  for (auto it = first; it != last; ++it) {
    const float* row = key_row(it->second);
    if (std::equal(key.values().begin(), key.values().end(), row)) return it->second;
  }
  return std::nullopt;
}

std::size_t FlatCache::choose_victim() const noexcept {
  std::size_t victim = 0;
  for (std::size_t i = 1; i < slots_.size(); ++i) {
    const Slot& s = slots_[i];
    const Slot& v = slots_[victim];
    const bool older = config_.policy == EvictionPolicy::FIFO ? s.inserted_seq < v.inserted_seq
                                                              : s.last_used_seq < v.last_used_seq;
    if (older) victim = i;
  }
  return victim;
}

void FlatCache::unindex(std::uint64_t hash, std::size_t slot) {
  const auto [first, last] = exact_index_.equal_range(hash);
  for (auto it = first; it != last; ++it) {
    if (it->second == slot) {
      exact_index_.erase(it);
      return;
    }
  }
}

CacheEntry FlatCache::remove_slot(std::size_t slot) {
  const std::size_t d = config_.dimension;
  const std::size_t last = slots_.size() - 1;
  CacheEntry removed{Embedding::from_span({key_row(slot), d}), slots_[slot].value,
                     slots_[slot].inserted_seq, slots_[slot].last_used_seq};
  unindex(slots_[slot].key_hash, slot);
  if (slot != last) {
    // Swap-remove: move the last row into the hole and repoint its index entry.
    unindex(slots_[last].key_hash, last);
    std::copy_n(key_row(last), d, keys_.begin() + static_cast<std::ptrdiff_t>(slot * d));
    slots_[slot] = std::move(slots_[last]);
    exact_index_.emplace(slots_[slot].key_hash, slot);
  }
  slots_.pop_back();
  keys_.resize(slots_.size() * d);
  return removed;
}

}  // namespace proximity
