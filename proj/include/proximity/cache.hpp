#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "proximity/vector_core.hpp"

namespace proximity {

using DocId = std::int64_t;

struct Document {
  DocId id;
  Embedding embedding;
};

/// The over-fetched neighbor list stored against a key, in database rank
/// order. Document embeddings are kept so hits can be re-ranked.
struct CacheValue {
  std::vector<Document> docs;

  std::vector<DocId> ids() const;
};

/// Checks unique ids, document dimension, and (when `expected_length` is
/// nonzero) the exact list length.
void validate_value(const CacheValue& value, std::size_t dimension, std::size_t expected_length);

struct CacheEntry {
  Embedding key;
  std::shared_ptr<const CacheValue> value;
  std::uint64_t inserted_seq = 0;
  std::uint64_t last_used_seq = 0;
};

struct CacheHit {
  std::shared_ptr<const CacheValue> value;
  double match_distance = 0.0;
  Embedding matched_key;
};

enum class EvictionPolicy { FIFO, LRU };

std::string_view to_string(EvictionPolicy policy);
EvictionPolicy parse_policy(std::string_view name);

/// Common surface of the FLAT and LSH caches, as driven by the retriever.
/// Not safe for concurrent mutation; callers serialize access.
class ApproximateCache {
 public:
  virtual ~ApproximateCache() = default;

  virtual std::optional<CacheHit> lookup(const Embedding& query) = 0;
  virtual std::optional<CacheEntry> insert(const Embedding& key,
                                           std::shared_ptr<const CacheValue> value) = 0;

  std::optional<CacheEntry> insert(const Embedding& key, CacheValue value) {
    return insert(key, std::make_shared<const CacheValue>(std::move(value)));
  }

  virtual std::size_t size() const = 0;
  virtual std::uint64_t theoretical_capacity() const = 0;
  virtual std::size_t allocated_buckets() const = 0;
  /// Monotone count of key comparisons performed by lookups.
  virtual std::uint64_t distance_computation_count() const = 0;

  virtual std::size_t dimension() const = 0;
  virtual DistanceMetric metric() const = 0;
  virtual double tolerance() const = 0;
  virtual EvictionPolicy policy() const = 0;

  /// Snapshot of every stored entry, ordered by inserted_seq.
  virtual std::vector<CacheEntry> entries() const = 0;
};

}  // namespace proximity
