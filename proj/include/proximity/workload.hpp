#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "proximity/random.hpp"
#include "proximity/vector_store.hpp"

namespace proximity {

class WorkloadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class WorkloadMode {
  /// Base ids drawn by Zipf rank; each emission perturbed within the ball.
  ZipfRephrase,
  /// Every base emitted exactly four times (perturbed), globally shuffled.
  /// The query count is 4 * base_count; total_queries is ignored.
  UniformRepeat4,
};

std::string_view to_string(WorkloadMode mode);
WorkloadMode parse_workload_mode(std::string_view name);

struct WorkloadSpec {
  std::size_t base_count = 500;
  std::size_t total_queries = 10000;
  double zipf_exponent = 0.8;
  /// Max norm of the noise added to a base per emission.
  double perturbation_radius = 0.0;
  /// Minimum pairwise L2 distance between base embeddings.
  double base_separation = 1.0;
  /// Per-component standard deviation of base embeddings.
  double base_spread = 1.0;
  std::size_t dimension = 64;
  std::uint64_t seed = 0;
  WorkloadMode mode = WorkloadMode::ZipfRephrase;
  /// Rejection budget per base before giving up.
  std::size_t max_attempts_per_base = 2000;

  void validate() const;
  std::size_t query_count() const noexcept {
    return mode == WorkloadMode::UniformRepeat4 ? 4 * base_count : total_queries;
  }
};

struct WorkloadQuery {
  Embedding embedding;
  std::size_t base_id;
};

struct Workload {
  std::vector<Embedding> bases;
  std::vector<WorkloadQuery> queries;
};

/// Deterministic for a fixed spec. Throws WorkloadError when the separation
/// cannot be met within the rejection budget.
Workload generate_workload(const WorkloadSpec& spec);

std::vector<Embedding> generate_bases(const WorkloadSpec& spec, Rng& rng);

/// Normalized pmf over ranks 1..count, p(r) proportional to r^-exponent.
std::vector<double> zipf_pmf(std::size_t count, double exponent);

/// Exact inverse-CDF sampler over a finite Zipf distribution. Returns a
/// zero-based rank.
class ZipfSampler {
 public:
  ZipfSampler(std::size_t count, double exponent);
  std::size_t operator()(double uniform) const;
  std::size_t operator()(Rng& rng) const { return (*this)(rng.uniform()); }

 private:
  std::vector<double> cdf_;
};

/// Uniform sample from the closed ball of `radius` around `center`.
Embedding sample_in_ball(const Embedding& center, double radius, Rng& rng);

struct CorpusSpec {
  /// Documents scattered around every base.
  std::size_t docs_per_base = 8;
  double doc_radius = 1.0;
  /// Extra documents unrelated to any base, drawn N(0, background_spread^2).
  std::size_t background_docs = 0;
  double background_spread = 1.0;
  std::uint64_t seed = 0;
};

/// Document ids: base b owns ids [b * docs_per_base, (b + 1) * docs_per_base);
/// background documents follow.
DocumentCorpus generate_corpus(const std::vector<Embedding>& bases, const CorpusSpec& spec,
                               DistanceMetric metric = DistanceMetric::L2);

}  // namespace proximity
