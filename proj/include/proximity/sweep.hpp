#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "proximity/metrics.hpp"
#include "proximity/workload.hpp"

namespace proximity {

/// Config parse/validation failure; the message is prefixed "source:line: ".
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A result file or directory could not be written.
class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CacheKind { None, Flat, Lsh };

std::string_view to_string(CacheKind kind);
CacheKind parse_cache_kind(std::string_view name);

enum class RunMode { Sweep, LookupBench, Occupancy };

std::string_view to_string(RunMode mode);
RunMode parse_run_mode(std::string_view name);

struct LookupBenchSpec {
  std::vector<CacheKind> caches{CacheKind::Flat, CacheKind::Lsh};
  std::vector<std::size_t> entry_counts{100, 1000, 10000, 100000};
  std::size_t repetitions = 200;
  std::size_t dimension = 128;
  unsigned hash_bits = 16;
  std::size_t bucket_capacity = 20;
  std::uint64_t seed = 7;
};

struct SweepConfig {
  RunMode mode = RunMode::Sweep;

  std::vector<CacheKind> caches{CacheKind::Flat};
  std::vector<double> tolerances{0.0};
  std::vector<std::size_t> capacities{100};
  std::vector<unsigned> hash_bits{8};
  std::vector<std::size_t> bucket_capacities{20};
  std::vector<EvictionPolicy> policies{EvictionPolicy::LRU};
  std::vector<double> rerank_factors{1.0};
  std::vector<std::size_t> ks{4};
  DistanceMetric metric = DistanceMetric::L2;

  WorkloadSpec workload;
  CorpusSpec corpus;
  std::optional<std::filesystem::path> corpus_path;

  std::vector<std::uint64_t> seeds{1};
  ClockMode clock = ClockMode::Virtual;
  double store_delay_ms = 0.0;
  bool measure_recall = true;
  std::size_t jobs = 1;
  std::filesystem::path out_dir = "results";

  LookupBenchSpec bench;
};

/// Line-oriented `key = value[, value...]` text; `#` starts a comment.
SweepConfig parse_sweep_config(std::istream& in, const std::string& source_name);
SweepConfig load_sweep_config(const std::filesystem::path& path);

/// One point of the parameter grid. Fields that do not apply to the cache
/// kind (capacity for LSH, hash bits for FLAT, ...) are left unset.
struct SweepCell {
  CacheKind cache = CacheKind::Flat;
  double tolerance = 0.0;
  std::optional<std::size_t> capacity;
  std::optional<unsigned> hash_bits;
  std::optional<std::size_t> bucket_capacity;
  std::optional<EvictionPolicy> policy;
  double rerank_factor = 1.0;
  std::size_t k = 4;

  bool operator==(const SweepCell&) const = default;
};

/// Cartesian product of the parameter lists that apply to each cache kind.
std::vector<SweepCell> expand_cells(const SweepConfig& config);

struct SweepRow {
  SweepCell cell;
  std::uint64_t seed = 0;
  MetricsReport report;
};

struct CellSummary {
  SweepCell cell;
  MetricColumns means;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // cell-major, seeds in config order
  std::vector<CellSummary> summaries;
};

/// Everything a cell needs that depends only on the seed.
struct SeedFixture {
  std::uint64_t seed = 0;
  Workload workload;
  std::shared_ptr<const BruteForceStore> store;
};

SeedFixture make_fixture(const SweepConfig& config, std::uint64_t seed);

std::unique_ptr<ApproximateCache> make_cache(const SweepCell& cell, const SweepConfig& config,
                                             std::size_t value_length, std::uint64_t seed);

SweepRow run_cell(const SweepConfig& config, const SweepCell& cell, const SeedFixture& fixture);

SweepResult run_sweep(const SweepConfig& config);

/// Column names of results.csv, in order.
std::vector<std::string> result_columns();
/// One results.csv line (no trailing newline) for a row.
std::string format_result_row(const SweepConfig& config, const SweepRow& row);

/// Writes results.csv, summary.csv and cells.jsonl (plus occupancy.csv in
/// occupancy mode). Throws OutputError when the directory is not writable.
void write_sweep_outputs(const SweepConfig& config, const SweepResult& result,
                         const std::filesystem::path& out_dir);

struct LookupBenchRow {
  CacheKind cache;
  std::size_t entries;
  std::size_t repetitions;
  double mean_ns;
  double p50_ns;
  double p99_ns;
  double distance_ops_per_lookup;
  std::uint64_t max_distance_ops;
  double hash_dots_per_lookup;
  std::size_t allocated_buckets;
};

/// Prefills a cache with distinct random keys up to each entry count, then
/// times `repetitions` lookups of fresh random queries (tolerance 0, so no
/// query hits).
std::vector<LookupBenchRow> bench_lookup(const LookupBenchSpec& spec);

void write_lookup_bench(const std::vector<LookupBenchRow>& rows, const LookupBenchSpec& spec,
                        const std::filesystem::path& out_dir);

/// CPU model string from /proc/cpuinfo, or "unknown".
std::string cpu_model();

/// Shortest round-trip decimal text for a double ("nan" for NaN).
std::string format_number(double value);

}  // namespace proximity
