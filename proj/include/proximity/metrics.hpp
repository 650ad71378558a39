#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "proximity/retriever.hpp"

namespace proximity {

/// |cache ∩ oracle| / k. Both lists must have the same length k >= 1.
double k_recall(std::span<const DocId> cache_topk, std::span<const DocId> oracle_topk);

struct LatencySummary {
  double mean_us = 0.0;
  double p50_us = 0.0;
  double p99_us = 0.0;
};

struct OccupancySnapshot {
  std::size_t entries = 0;
  std::size_t allocated_buckets = 0;
  std::uint64_t theoretical_capacity = 0;
  double relative = 0.0;
};

OccupancySnapshot snapshot(const ApproximateCache* cache);

struct MetricsReport {
  std::size_t queries = 0;
  std::size_t hits = 0;
  double hit_rate = 0.0;
  std::size_t db_calls = 0;
  /// NaN when no outcome carried oracle ids.
  double mean_k_recall = 0.0;
  std::size_t recall_samples = 0;
  LatencySummary cache_latency;
  LatencySummary db_latency;
  LatencySummary total_latency;
  double cache_time_total_us = 0.0;
  double db_time_total_us = 0.0;
  double distance_ops_mean = 0.0;
  std::uint64_t distance_ops_max = 0;
  OccupancySnapshot occupancy;
};

/// Nearest-rank percentile of an unsorted sample, q in [0, 1].
double percentile(std::vector<double> values, double q);

/// Requires at least one outcome.
MetricsReport aggregate(std::span<const RetrievalOutcome> outcomes, const OccupancySnapshot& occupancy);

using MetricColumns = std::vector<std::pair<std::string, double>>;

/// Flat (name, value) view of a report, in a fixed column order.
MetricColumns metric_columns(const MetricsReport& report);

/// Column-wise mean across repeated runs of one configuration. NaN columns
/// are averaged over the runs that have a value.
MetricColumns average_columns(std::span<const MetricColumns> runs);

/// Column names that carry wall-clock measurements and are excluded from
/// determinism comparisons.
bool is_wall_clock_column(std::string_view name);

}  // namespace proximity
