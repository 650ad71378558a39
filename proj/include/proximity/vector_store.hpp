#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "proximity/cache.hpp"

namespace proximity {

struct Neighbor {
  DocId id;
  double distance;
  bool operator==(const Neighbor&) const = default;
};

enum class ClockMode { Virtual, Wall };

/// Simulated cost of one database call. Virtual mode accrues `delay` in the
/// reported timings without sleeping; Wall mode sleeps for it.
struct LatencyModel {
  std::chrono::nanoseconds delay{0};
  ClockMode mode = ClockMode::Virtual;
};

/// The database the cache sits in front of. Implementations must be safe for
/// concurrent const calls.
class VectorStore {
 public:
  virtual ~VectorStore() = default;

  virtual std::size_t dimension() const = 0;
  virtual std::size_t size() const = 0;

  /// Up to m nearest documents (ids + embeddings) in rank order.
  virtual std::vector<Document> retrieve_documents(const Embedding& query, std::size_t m) const = 0;

  void simulated_latency(LatencyModel model) noexcept { latency_ = model; }
  const LatencyModel& latency() const noexcept { return latency_; }

 private:
  LatencyModel latency_{};
};

struct DocumentCorpus {
  std::vector<Document> docs;
  std::size_t dimension = 0;
  DistanceMetric metric = DistanceMetric::L2;

  void validate() const;
};

/// Exact nearest-neighbor search by full scan. Doubles as the recall oracle.
class BruteForceStore final : public VectorStore {
 public:
  explicit BruteForceStore(DocumentCorpus corpus);

  /// Exact min(m, size) nearest documents, ascending distance, ties by
  /// ascending id.
  std::vector<Neighbor> retrieve_document_indices(const Embedding& query, std::size_t m) const;
  std::vector<Document> retrieve_documents(const Embedding& query, std::size_t m) const override;

  std::size_t dimension() const override { return dimension_; }
  std::size_t size() const override { return ids_.size(); }
  DistanceMetric metric() const noexcept { return metric_; }

  /// Embedding of the document at corpus position `index`.
  Embedding document_embedding(std::size_t index) const;
  DocId document_id(std::size_t index) const { return ids_.at(index); }

 private:
  struct Ranked {
    std::size_t position;
    double distance;
  };
  std::vector<Ranked> nearest(const Embedding& query, std::size_t m) const;

  std::size_t dimension_;
  DistanceMetric metric_;
  std::vector<DocId> ids_;
  std::vector<float> rows_;  // row-major N x d
};

/// Binary corpus container, little-endian:
///   8 bytes  magic "PXCORPUS"
///   u32      format version (1)
///   u32      dimension d
///   u64      document count N
///   i64[N]   document ids
///   f32[N*d] embeddings, row-major
void save_corpus(const DocumentCorpus& corpus, const std::filesystem::path& path);
DocumentCorpus load_corpus(const std::filesystem::path& path, DistanceMetric metric = DistanceMetric::L2);

}  // namespace proximity
