#include "proximity/workload.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace proximity {

std::string_view to_string(WorkloadMode mode) {
  return mode == WorkloadMode::ZipfRephrase ? "zipf" : "uniform4";
}

WorkloadMode parse_workload_mode(std::string_view name) {
  if (name == "zipf" || name == "zipf_rephrase") return WorkloadMode::ZipfRephrase;
  if (name == "uniform4" || name == "uniform_repeat4") return WorkloadMode::UniformRepeat4;
  throw ContractViolation("unknown workload mode '" + std::string(name) + "'");
}

void WorkloadSpec::validate() const {
  if (base_count < 1) throw ContractViolation("workload base_count must be >= 1");
  if (mode == WorkloadMode::ZipfRephrase && total_queries < 1) {
    throw ContractViolation("workload total_queries must be >= 1");
  }
  if (dimension < 1) throw ContractViolation("workload dimension must be >= 1");
  if (!(zipf_exponent >= 0.0)) throw ContractViolation("zipf_exponent must be >= 0");
  if (!(perturbation_radius >= 0.0)) throw ContractViolation("perturbation_radius must be >= 0");
  if (!(base_separation > 0.0)) throw ContractViolation("base_separation must be > 0");
  if (!(base_spread > 0.0)) throw ContractViolation("base_spread must be > 0");
}

std::vector<double> zipf_pmf(std::size_t count, double exponent) {
  std::vector<double> pmf(count);
  double total = 0.0;
  for (std::size_t r = 0; r < count; ++r) {
    pmf[r] = std::pow(static_cast<double>(r + 1), -exponent);
    total += pmf[r];
  }
  for (auto& p : pmf) p /= total;
  return pmf;
}

ZipfSampler::ZipfSampler(std::size_t count, double exponent) {
  if (count < 1) throw ContractViolation("zipf sampler needs at least one rank");
  const auto pmf = zipf_pmf(count, exponent);
  cdf_.resize(count);
  double acc = 0.0;
  for (std::size_t r = 0; r < count; ++r) {
    acc += pmf[r];
    cdf_[r] = acc;
  }
  cdf_.back() = 1.0;
}

std::size_t ZipfSampler::operator()(double uniform) const {
  // First rank whose cumulative mass exceeds u.
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), uniform);
  return std::min(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
}

Embedding sample_in_ball(const Embedding& center, double radius, Rng& rng) {
  const std::size_t d = center.dimension();
  std::vector<float> out(center.values().begin(), center.values().end());
  if (radius <= 0.0) return Embedding(std::move(out));

  std::vector<double> direction(d);
  double norm_sq = 0.0;
  while (norm_sq == 0.0) {
    for (auto& v : direction) {
      v = rng.normal();
      norm_sq += v * v;
    }
  }
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
  const double scale = r / std::sqrt(norm_sq);
  for (std::size_t i = 0; i < d; ++i) {
    out[i] = static_cast<float>(static_cast<double>(out[i]) + direction[i] * scale);
  }
  return Embedding(std::move(out));
}

std::vector<Embedding> generate_bases(const WorkloadSpec& spec, Rng& rng) {
  const std::size_t d = spec.dimension;
  const double min_sq = spec.base_separation * spec.base_separation;
  std::vector<Embedding> bases;
  bases.reserve(spec.base_count);
  std::vector<float> candidate(d);
  for (std::size_t b = 0; b < spec.base_count; ++b) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < spec.max_attempts_per_base && !placed; ++attempt) {
      for (auto& v : candidate) v = static_cast<float>(rng.normal() * spec.base_spread);
      placed = std::all_of(bases.begin(), bases.end(), [&](const Embedding& other) {
        return kernels::squared_l2_lanes(candidate.data(), other.data(), d) >= min_sq;
      });
    }
    if (!placed) {
      throw WorkloadError("cannot place base " + std::to_string(b) + " of " +
                          std::to_string(spec.base_count) + " at separation " +
                          std::to_string(spec.base_separation) + " in dimension " +
                          std::to_string(d) + " after " +
                          std::to_string(spec.max_attempts_per_base) + " attempts");
    }
    bases.emplace_back(candidate);
  }
  return bases;
}

Workload generate_workload(const WorkloadSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Workload w;
  w.bases = generate_bases(spec, rng);

  std::vector<std::size_t> order;
  if (spec.mode == WorkloadMode::ZipfRephrase) {
    const ZipfSampler sampler(spec.base_count, spec.zipf_exponent);
    order.reserve(spec.total_queries);
    for (std::size_t i = 0; i < spec.total_queries; ++i) order.push_back(sampler(rng));
  } else {
    order.reserve(4 * spec.base_count);
    for (std::size_t b = 0; b < spec.base_count; ++b) order.insert(order.end(), 4, b);
    // Fisher-Yates with our own bounded draws for portability.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }
  }

  w.queries.reserve(order.size());
  for (std::size_t base : order) {
    w.queries.push_back({sample_in_ball(w.bases[base], spec.perturbation_radius, rng), base});
  }
  return w;
}

DocumentCorpus generate_corpus(const std::vector<Embedding>& bases, const CorpusSpec& spec,
                               DistanceMetric metric) {
  if (bases.empty() && spec.background_docs == 0) {
    throw ContractViolation("generate_corpus: nothing to generate");
  }
  Rng rng(spec.seed);
  DocumentCorpus corpus;
  corpus.metric = metric;
  corpus.dimension = bases.empty() ? 0 : bases.front().dimension();
  DocId next = 0;
  for (const auto& base : bases) {
    for (std::size_t j = 0; j < spec.docs_per_base; ++j) {
      corpus.docs.push_back({next++, sample_in_ball(base, spec.doc_radius, rng)});
    }
  }
  if (spec.background_docs > 0) {
    if (corpus.dimension == 0) throw ContractViolation("generate_corpus: unknown dimension");
    for (std::size_t j = 0; j < spec.background_docs; ++j) {
      std::vector<float> v(corpus.dimension);
      for (auto& x : v) x = static_cast<float>(rng.normal() * spec.background_spread);
      corpus.docs.push_back({next++, Embedding(std::move(v))});
    }
  }
  return corpus;
}

}  // namespace proximity
