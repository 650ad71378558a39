#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "proximity/cache.hpp"
#include "proximity/vector_store.hpp"

namespace proximity {

struct RetrieverConfig {
  std::size_t k = 1;
  /// Ratio of documents fetched from the store (and cached) to documents
  /// returned; fetch count is ceil(rerank_factor * k).
  double rerank_factor = 1.0;

  void validate() const;
  std::size_t fetch_count() const;
};

enum class Source { CacheHit, CacheMiss };

struct RetrievalOutcome {
  std::vector<DocId> doc_ids;
  Source source = Source::CacheMiss;
  std::optional<double> match_distance;
  std::optional<Embedding> matched_key;
  std::chrono::nanoseconds cache_time{0};
  std::chrono::nanoseconds db_time{0};
  std::uint64_t distance_ops = 0;
  /// Exact store top-k for the same query, when requested. Obtained outside
  /// latency accounting and without touching the cache.
  std::optional<std::vector<DocId>> oracle_ids;

  bool hit() const noexcept { return source == Source::CacheHit; }
};

/// Cache-first retrieval with database fallback.
///
/// Hit: the cached over-fetched list is re-ranked against the query and the
/// k closest returned (ties by ascending id). Miss: the store is asked for
/// the fetch count, the full list is cached under the query, and the first k
/// ids are returned in database order.
///
/// A null cache disables caching entirely (every query goes to the store,
/// nothing is inserted).
class Retriever {
 public:
  Retriever(std::unique_ptr<ApproximateCache> cache, std::shared_ptr<const VectorStore> store,
            RetrieverConfig config);

  RetrievalOutcome retrieve(const Embedding& query, bool with_oracle = false);

  std::size_t k() const noexcept { return config_.k; }
  std::size_t fetch_count() const noexcept { return fetch_count_; }
  const RetrieverConfig& config() const noexcept { return config_; }

  std::uint64_t queries() const noexcept { return queries_; }
  std::uint64_t hits() const noexcept { return hits_; }
  std::uint64_t db_calls() const noexcept { return db_calls_; }
  std::uint64_t insertions() const noexcept { return insertions_; }

  const ApproximateCache* cache() const noexcept { return cache_.get(); }
  ApproximateCache* cache() noexcept { return cache_.get(); }
  const VectorStore& store() const noexcept { return *store_; }

 private:
  std::unique_ptr<ApproximateCache> cache_;
  std::shared_ptr<const VectorStore> store_;
  RetrieverConfig config_;
  std::size_t fetch_count_;
  std::uint64_t queries_ = 0;
  std::uint64_t hits_ = 0;
  std::uint64_t db_calls_ = 0;
  std::uint64_t insertions_ = 0;
};

/// The k documents of `value` closest to `query` (ascending distance, ties by
/// ascending id).
std::vector<DocId> rerank(const Embedding& query, const CacheValue& value, std::size_t k,
                          DistanceMetric metric);

}  // namespace proximity
