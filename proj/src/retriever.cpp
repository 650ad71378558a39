#include "proximity/retriever.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

namespace proximity {

namespace {

using Clock = std::chrono::steady_clock;

std::chrono::nanoseconds since(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start);
}

}  // namespace

void RetrieverConfig::validate() const {
  if (k < 1) throw ContractViolation("k must be >= 1");
  if (!(rerank_factor >= 1.0) || !std::isfinite(rerank_factor)) {
    throw ContractViolation("rerank_factor must be a finite value >= 1");
  }
}

std::size_t RetrieverConfig::fetch_count() const {
  // The epsilon keeps products like 1.1 * 10 = 11.000000000000002 at 11.
  const double product = rerank_factor * static_cast<double>(k);
  return std::max(k, static_cast<std::size_t>(std::ceil(product - 1e-9)));
}

std::vector<DocId> rerank(const Embedding& query, const CacheValue& value, std::size_t k,
                          DistanceMetric metric) {
  struct Scored {
    double distance;
    DocId id;
  };
  std::vector<Scored> scored;
  scored.reserve(value.docs.size());
  for (const auto& doc : value.docs) {
    scored.push_back({distance(query, doc.embedding, metric), doc.id});
  }
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                    [](const Scored& a, const Scored& b) {
                      return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
                    });
  std::vector<DocId> ids;
  ids.reserve(take);
  for (std::size_t i = 0; i < take; ++i) ids.push_back(scored[i].id);
  return ids;
}

Retriever::Retriever(std::unique_ptr<ApproximateCache> cache,
                     std::shared_ptr<const VectorStore> store, RetrieverConfig config)
    : cache_(std::move(cache)), store_(std::move(store)), config_(config) {
  config_.validate();
  if (!store_) throw ContractViolation("retriever needs a vector store");
  fetch_count_ = config_.fetch_count();
  if (cache_ && cache_->dimension() != store_->dimension()) {
    throw ContractViolation("cache and store dimensions differ");
  }
  if (store_->size() < fetch_count_) {
    throw ContractViolation("store holds " + std::to_string(store_->size()) +
                            " documents, fewer than the fetch count " + std::to_string(fetch_count_));
  }
}

RetrievalOutcome Retriever::retrieve(const Embedding& query, bool with_oracle) {
  require_dimension(query, store_->dimension(), "retrieve");
  RetrievalOutcome out;
  ++queries_;

  if (cache_) {
    const std::uint64_t ops_before = cache_->distance_computation_count();
    const auto start = Clock::now();
    auto hit = cache_->lookup(query);
    if (hit) {
      out.doc_ids = rerank(query, *hit->value, config_.k, cache_->metric());
      out.cache_time = since(start);
      out.source = Source::CacheHit;
      out.match_distance = hit->match_distance;
      out.matched_key = std::move(hit->matched_key);
    } else {
      out.cache_time = since(start);
    }
    out.distance_ops = cache_->distance_computation_count() - ops_before;
  }

  if (!out.hit()) {
    const LatencyModel& latency = store_->latency();
    const auto start = Clock::now();
    auto docs = store_->retrieve_documents(query, fetch_count_);
    if (latency.mode == ClockMode::Wall && latency.delay.count() > 0) {
      std::this_thread::sleep_for(latency.delay);
    }
    out.db_time = latency.mode == ClockMode::Virtual ? latency.delay : since(start);
    ++db_calls_;

    out.doc_ids.reserve(config_.k);
    for (std::size_t i = 0; i < std::min(config_.k, docs.size()); ++i) {
      out.doc_ids.push_back(docs[i].id);
    }
    if (cache_) {
      const auto insert_start = Clock::now();
      cache_->insert(query, CacheValue{std::move(docs)});
      out.cache_time += since(insert_start);
      ++insertions_;
    }
  } else {
    ++hits_;
  }

  if (with_oracle) {
    const auto oracle = store_->retrieve_documents(query, config_.k);
    std::vector<DocId> ids;
    ids.reserve(oracle.size());
    for (const auto& doc : oracle) ids.push_back(doc.id);
    out.oracle_ids = std::move(ids);
  }
  return out;
}

}  // namespace proximity
