#include "proximity/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace proximity {

namespace {

double to_us(std::chrono::nanoseconds ns) { return static_cast<double>(ns.count()) / 1000.0; }

LatencySummary summarize(std::vector<double> samples) {
  LatencySummary s;
  if (samples.empty()) return s;
  double total = 0.0;
  for (double v : samples) total += v;
  s.mean_us = total / static_cast<double>(samples.size());
  s.p50_us = percentile(samples, 0.50);
  s.p99_us = percentile(std::move(samples), 0.99);
  return s;
}

}  // namespace

double k_recall(std::span<const DocId> cache_topk, std::span<const DocId> oracle_topk) {
  if (cache_topk.size() != oracle_topk.size()) {
    throw ContractViolation("k_recall: lists differ in size (" + std::to_string(cache_topk.size()) +
                            " vs " + std::to_string(oracle_topk.size()) + ")");
  }
  if (cache_topk.empty()) throw ContractViolation("k_recall: k must be >= 1");
  const std::unordered_set<DocId> oracle(oracle_topk.begin(), oracle_topk.end());
  std::size_t common = 0;
  for (DocId id : cache_topk) common += oracle.count(id);
  return static_cast<double>(common) / static_cast<double>(cache_topk.size());
}

OccupancySnapshot snapshot(const ApproximateCache* cache) {
  if (!cache) return {};
  OccupancySnapshot s;
  s.entries = cache->size();
  s.allocated_buckets = cache->allocated_buckets();
  s.theoretical_capacity = cache->theoretical_capacity();
  s.relative = static_cast<double>(s.entries) / static_cast<double>(s.theoretical_capacity);
  return s;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto n = values.size();
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
  return values[rank - 1];
}

MetricsReport aggregate(std::span<const RetrievalOutcome> outcomes, const OccupancySnapshot& occupancy) {
  if (outcomes.empty()) throw ContractViolation("aggregate: no outcomes");
  MetricsReport r;
  r.queries = outcomes.size();
  r.occupancy = occupancy;

  std::vector<double> cache_us, db_us, total_us;
  cache_us.reserve(outcomes.size());
  db_us.reserve(outcomes.size());
  total_us.reserve(outcomes.size());
  double recall_sum = 0.0;
  double ops_sum = 0.0;
  for (const auto& o : outcomes) {
    if (o.hit()) {
      ++r.hits;
    } else {
      ++r.db_calls;
      db_us.push_back(to_us(o.db_time));
    }
    cache_us.push_back(to_us(o.cache_time));
    total_us.push_back(to_us(o.cache_time + o.db_time));
    r.cache_time_total_us += to_us(o.cache_time);
    r.db_time_total_us += to_us(o.db_time);
    ops_sum += static_cast<double>(o.distance_ops);
    r.distance_ops_max = std::max(r.distance_ops_max, o.distance_ops);
    if (o.oracle_ids) {
      recall_sum += k_recall(o.doc_ids, *o.oracle_ids);
      ++r.recall_samples;
    }
  }
  r.hit_rate = static_cast<double>(r.hits) / static_cast<double>(r.queries);
  r.mean_k_recall = r.recall_samples == 0 ? std::numeric_limits<double>::quiet_NaN()
                                          : recall_sum / static_cast<double>(r.recall_samples);
  r.distance_ops_mean = ops_sum / static_cast<double>(r.queries);
  r.cache_latency = summarize(std::move(cache_us));
  r.db_latency = summarize(std::move(db_us));
  r.total_latency = summarize(std::move(total_us));
  return r;
}

MetricColumns metric_columns(const MetricsReport& r) {
  return {
      {"queries", static_cast<double>(r.queries)},
      {"hits", static_cast<double>(r.hits)},
      {"hit_rate", r.hit_rate},
      {"db_calls", static_cast<double>(r.db_calls)},
      {"mean_k_recall", r.mean_k_recall},
      {"recall_samples", static_cast<double>(r.recall_samples)},
      {"cache_mean_us", r.cache_latency.mean_us},
      {"cache_p50_us", r.cache_latency.p50_us},
      {"cache_p99_us", r.cache_latency.p99_us},
      {"db_mean_us", r.db_latency.mean_us},
      {"db_p50_us", r.db_latency.p50_us},
      {"db_p99_us", r.db_latency.p99_us},
      {"total_mean_us", r.total_latency.mean_us},
      {"total_p50_us", r.total_latency.p50_us},
      {"total_p99_us", r.total_latency.p99_us},
      {"cache_time_total_us", r.cache_time_total_us},
      {"db_time_total_us", r.db_time_total_us},
      {"distance_ops_mean", r.distance_ops_mean},
      {"distance_ops_max", static_cast<double>(r.distance_ops_max)},
      {"occupancy_entries", static_cast<double>(r.occupancy.entries)},
      {"occupancy_buckets", static_cast<double>(r.occupancy.allocated_buckets)},
      {"occupancy_capacity", static_cast<double>(r.occupancy.theoretical_capacity)},
      {"occupancy_relative", r.occupancy.relative},
  };
}

MetricColumns average_columns(std::span<const MetricColumns> runs) {
  if (runs.empty()) return {};
  MetricColumns out = runs.front();
  for (std::size_t c = 0; c < out.size(); ++c) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& run : runs) {
      if (run.size() != out.size() || run[c].first != out[c].first) {
        throw ContractViolation("average_columns: runs have different column layouts");
      }
      if (!std::isnan(run[c].second)) {
        sum += run[c].second;
        ++n;
      }
    }
    out[c].second = n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
  }
  return out;
}

bool is_wall_clock_column(std::string_view name) {
  return name.starts_with("cache_") || name.starts_with("total_") || name.starts_with("db_mean") ||
         name.starts_with("db_p") || name == "db_time_total_us";
}

}  // namespace proximity
