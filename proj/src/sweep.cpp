#include "proximity/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "proximity/flat_cache.hpp"
#include "proximity/lsh_cache.hpp"

namespace proximity {

namespace {

using json = nlohmann::json;

// Independent streams per seed for corpus and hyperplanes.
constexpr std::uint64_t kCorpusSalt = 0xC0A9B5D1E3F70011ULL;
constexpr std::uint64_t kHyperplaneSalt = 0x5BD1E9955BD1E995ULL;

std::string opt_text(const std::optional<std::size_t>& v) {
  return v ? std::to_string(*v) : std::string{};
}

std::vector<std::string> cell_columns() {
  return {"cache", "tau", "capacity", "hash_bits", "bucket_capacity", "policy", "rho", "k"};
}

std::vector<std::string> cell_values(const SweepCell& c) {
  return {std::string(to_string(c.cache)),
          format_number(c.tolerance),
          opt_text(c.capacity),
          c.hash_bits ? std::to_string(*c.hash_bits) : std::string{},
          opt_text(c.bucket_capacity),
          c.policy ? std::string(to_string(*c.policy)) : std::string{},
          format_number(c.rerank_factor),
          std::to_string(c.k)};
}

std::vector<std::string> context_columns() {
  return {"metric",     "workload_mode", "base_count",    "workload_queries", "zipf",
          "epsilon",    "separation",    "dimension",     "docs_per_base",    "doc_radius",
          "clock",      "store_delay_ms"};
}

std::vector<std::string> context_values(const SweepConfig& c) {
  return {std::string(to_string(c.metric)),
          std::string(to_string(c.workload.mode)),
          std::to_string(c.workload.base_count),
          std::to_string(c.workload.query_count()),
          format_number(c.workload.zipf_exponent),
          format_number(c.workload.perturbation_radius),
          format_number(c.workload.base_separation),
          std::to_string(c.workload.dimension),
          std::to_string(c.corpus.docs_per_base),
          format_number(c.corpus.doc_radius),
          c.clock == ClockMode::Virtual ? "virtual" : "wall",
          format_number(c.store_delay_ms)};
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += items[i];
  }
  return out;
}

json number_json(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

json cell_json(const SweepCell& c) {
  json j;
  j["cache"] = to_string(c.cache);
  j["tau"] = number_json(c.tolerance);
  j["capacity"] = c.capacity ? json(*c.capacity) : json(nullptr);
  j["hash_bits"] = c.hash_bits ? json(*c.hash_bits) : json(nullptr);
  j["bucket_capacity"] = c.bucket_capacity ? json(*c.bucket_capacity) : json(nullptr);
  j["policy"] = c.policy ? json(to_string(*c.policy)) : json(nullptr);
  j["rho"] = c.rerank_factor;
  j["k"] = c.k;
  return j;
}

json columns_json(const MetricColumns& cols) {
  json j = json::object();
  for (const auto& [name, value] : cols) j[name] = number_json(value);
  return j;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw OutputError("cannot write output file: " + path.string());
  return out;
}

void close_output(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw OutputError("failed writing output file: " + path.string());
}

Embedding random_embedding(std::size_t d, Rng& rng) {
  std::vector<float> v(d);
  for (auto& x : v) x = static_cast<float>(rng.normal());
  return Embedding(std::move(v));
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::vector<SweepCell> expand_cells(const SweepConfig& config) {
  std::vector<SweepCell> cells;
  for (CacheKind kind : config.caches) {
    for (double tau : config.tolerances) {
      for (double rho : config.rerank_factors) {
        for (std::size_t k : config.ks) {
          SweepCell base{kind, tau, std::nullopt, std::nullopt, std::nullopt, std::nullopt, rho, k};
          if (kind == CacheKind::None) {
            cells.push_back(base);
            continue;
          }
          for (EvictionPolicy policy : config.policies) {
            base.policy = policy;
            if (kind == CacheKind::Flat) {
              for (std::size_t c : config.capacities) {
                auto cell = base;
                cell.capacity = c;
                cells.push_back(cell);
              }
            } else {
              for (unsigned l : config.hash_bits) {
                for (std::size_t b : config.bucket_capacities) {
                  auto cell = base;
                  cell.hash_bits = l;
                  cell.bucket_capacity = b;
                  cells.push_back(cell);
                }
              }
            }
          }
        }
      }
    }
  }
  // "none" ignores tau; keep one cell per (rho, k).
  std::vector<SweepCell> unique;
  for (auto& cell : cells) {
    if (cell.cache == CacheKind::None) cell.tolerance = 0.0;
    if (std::find(unique.begin(), unique.end(), cell) == unique.end()) unique.push_back(cell);
  }
  return unique;
}

SeedFixture make_fixture(const SweepConfig& config, std::uint64_t seed) {
  SeedFixture f;
  f.seed = seed;
  WorkloadSpec spec = config.workload;
  spec.seed = seed;
  f.workload = generate_workload(spec);

  DocumentCorpus corpus;
  if (config.corpus_path) {
    corpus = load_corpus(*config.corpus_path, config.metric);
    if (corpus.dimension != spec.dimension) {
      throw ContractViolation("corpus dimension " + std::to_string(corpus.dimension) +
                              " differs from workload dimension " + std::to_string(spec.dimension));
    }
  } else {
    CorpusSpec cs = config.corpus;
    cs.seed = seed ^ kCorpusSalt;
    corpus = generate_corpus(f.workload.bases, cs, config.metric);
  }
  auto store = std::make_shared<BruteForceStore>(std::move(corpus));
  store->simulated_latency(LatencyModel{
      std::chrono::nanoseconds(static_cast<std::int64_t>(std::llround(config.store_delay_ms * 1e6))),
      config.clock});
  f.store = std::move(store);
  return f;
}

std::unique_ptr<ApproximateCache> make_cache(const SweepCell& cell, const SweepConfig& config,
                                             std::size_t value_length, std::uint64_t seed) {
  const std::size_t d = config.workload.dimension;
  switch (cell.cache) {
    case CacheKind::None:
      return nullptr;
    case CacheKind::Flat:
      return std::make_unique<FlatCache>(FlatCacheConfig{cell.capacity.value(), cell.tolerance,
                                                         config.metric, cell.policy.value(), d,
                                                         value_length});
    case CacheKind::Lsh:
      return std::make_unique<LshCache>(LshCacheConfig{cell.hash_bits.value(),
                                                       cell.bucket_capacity.value(), cell.tolerance,
                                                       config.metric, cell.policy.value(), d,
                                                       seed ^ kHyperplaneSalt, value_length});
  }
  return nullptr;
}

SweepRow run_cell(const SweepConfig& config, const SweepCell& cell, const SeedFixture& fixture) {
  RetrieverConfig rc{cell.k, cell.rerank_factor};
  auto cache = make_cache(cell, config, rc.fetch_count(), fixture.seed);
  Retriever retriever(std::move(cache), fixture.store, rc);

  std::vector<RetrievalOutcome> outcomes;
  outcomes.reserve(fixture.workload.queries.size());
  for (const auto& q : fixture.workload.queries) {
    auto outcome = retriever.retrieve(q.embedding, config.measure_recall);
    outcome.matched_key.reset();  // not reported; saves memory on long runs
    outcomes.push_back(std::move(outcome));
  }
  return SweepRow{cell, fixture.seed, aggregate(outcomes, snapshot(retriever.cache()))};
}

SweepResult run_sweep(const SweepConfig& config) {
  const auto cells = expand_cells(config);
  std::vector<SeedFixture> fixtures;
  fixtures.reserve(config.seeds.size());
  for (auto seed : config.seeds) fixtures.push_back(make_fixture(config, seed));

  const std::size_t total = cells.size() * fixtures.size();
  std::vector<std::optional<SweepRow>> slots(total);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      try {
        slots[i] = run_cell(config, cells[i / fixtures.size()], fixtures[i % fixtures.size()]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t jobs = std::min(config.jobs, std::max<std::size_t>(total, 1));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t j = 0; j < jobs; ++j) threads.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  SweepResult result;
  result.rows.reserve(total);
  for (auto& slot : slots) result.rows.push_back(std::move(*slot));
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<MetricColumns> runs;
    for (std::size_t s = 0; s < fixtures.size(); ++s) {
      runs.push_back(metric_columns(result.rows[c * fixtures.size() + s].report));
    }
    result.summaries.push_back({cells[c], average_columns(runs)});
  }
  return result;
}

std::vector<std::string> result_columns() {
  auto cols = cell_columns();
  cols.push_back("seed");
  for (auto& c : context_columns()) cols.push_back(c);
  for (auto& [name, _] : metric_columns(MetricsReport{})) cols.push_back(name);
  return cols;
}

std::string format_result_row(const SweepConfig& config, const SweepRow& row) {
  auto values = cell_values(row.cell);
  values.push_back(std::to_string(row.seed));
  for (auto& v : context_values(config)) values.push_back(v);
  for (auto& [_, value] : metric_columns(row.report)) values.push_back(format_number(value));
  return join(values);
}

void write_sweep_outputs(const SweepConfig& config, const SweepResult& result,
                         const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw OutputError("cannot create output directory " + out_dir.string() + ": " + ec.message());

  {
    const auto path = out_dir / "results.csv";
    auto out = open_output(path);
    out << join(result_columns()) << '\n';
    for (const auto& row : result.rows) out << format_result_row(config, row) << '\n';
    close_output(out, path);
  }
  {
    const auto path = out_dir / "summary.csv";
    auto out = open_output(path);
    auto header = cell_columns();
    header.push_back("seeds");
    for (auto& c : context_columns()) header.push_back(c);
    for (auto& [name, _] : metric_columns(MetricsReport{})) header.push_back(name);
    out << join(header) << '\n';
    for (const auto& s : result.summaries) {
      auto values = cell_values(s.cell);
      values.push_back(std::to_string(config.seeds.size()));
      for (auto& v : context_values(config)) values.push_back(v);
      for (auto& [_, value] : s.means) values.push_back(format_number(value));
      out << join(values) << '\n';
    }
    close_output(out, path);
  }
  {
    const auto path = out_dir / "cells.jsonl";
    auto out = open_output(path);
    const std::size_t per_cell = config.seeds.size();
    for (std::size_t c = 0; c < result.summaries.size(); ++c) {
      json j;
      j["cell"] = cell_json(result.summaries[c].cell);
      j["runs"] = json::array();
      for (std::size_t s = 0; s < per_cell; ++s) {
        const auto& row = result.rows[c * per_cell + s];
        j["runs"].push_back({{"seed", row.seed}, {"metrics", columns_json(metric_columns(row.report))}});
      }
      j["summary"] = columns_json(result.summaries[c].means);
      out << j.dump() << '\n';
    }
    close_output(out, path);
  }
  if (config.mode == RunMode::Occupancy) {
    const auto path = out_dir / "occupancy.csv";
    auto out = open_output(path);
    out << "cache,hash_bits,bucket_capacity,tau,policy,seed,entries,allocated_buckets,"
           "theoretical_capacity,relative,hit_rate\n";
    for (const auto& row : result.rows) {
      const auto& o = row.report.occupancy;
      const auto cv = cell_values(row.cell);
      out << cv[0] << ',' << cv[3] << ',' << cv[4] << ',' << cv[1] << ',' << cv[5] << ',' << row.seed
          << ',' << o.entries << ',' << o.allocated_buckets << ',' << o.theoretical_capacity << ','
          << format_number(o.relative) << ',' << format_number(row.report.hit_rate) << '\n';
    }
    close_output(out, path);
  }
}

std::vector<LookupBenchRow> bench_lookup(const LookupBenchSpec& spec) {
  using Clock = std::chrono::steady_clock;
  std::vector<std::size_t> counts = spec.entry_counts;
  std::sort(counts.begin(), counts.end());

  const auto value = std::make_shared<const CacheValue>(
      CacheValue{{Document{0, Embedding(std::vector<float>(spec.dimension, 0.0f))}}});

  std::vector<LookupBenchRow> rows;
  for (CacheKind kind : spec.caches) {
    if (kind == CacheKind::None) continue;
    Rng rng(spec.seed);
    std::unique_ptr<ApproximateCache> cache;
    const std::size_t largest = counts.empty() ? 1 : counts.back();
    if (kind == CacheKind::Flat) {
      cache = std::make_unique<FlatCache>(
          FlatCacheConfig{std::max<std::size_t>(largest, 1), 0.0, DistanceMetric::L2,
                          EvictionPolicy::FIFO, spec.dimension, 0});
    } else {
      cache = std::make_unique<LshCache>(LshCacheConfig{spec.hash_bits, spec.bucket_capacity, 0.0,
                                                        DistanceMetric::L2, EvictionPolicy::FIFO,
                                                        spec.dimension, spec.seed, 0});
      if (cache->theoretical_capacity() < largest) {
        throw ContractViolation("lookup bench: entry count " + std::to_string(largest) +
                                " exceeds LSH capacity " + std::to_string(cache->theoretical_capacity()));
      }
    }
    auto* lsh = dynamic_cast<LshCache*>(cache.get());

    for (std::size_t target : counts) {
      // Evictions in full LSH buckets slow the fill; give up well past that.
      std::size_t attempts = 0;
      while (cache->size() < target) {
        if (++attempts > 50 * target + 1000) {
          throw ContractViolation("lookup bench: cannot reach " + std::to_string(target) + " entries");
        }
        cache->insert(random_embedding(spec.dimension, rng), value);
      }

      std::vector<Embedding> queries;
      queries.reserve(spec.repetitions);
      for (std::size_t i = 0; i < spec.repetitions; ++i) queries.push_back(random_embedding(spec.dimension, rng));
      const std::size_t warmup = std::min<std::size_t>(spec.repetitions, 16);
      for (std::size_t i = 0; i < warmup; ++i) (void)cache->lookup(queries[i]);

      const std::uint64_t ops_before = cache->distance_computation_count();
      const std::uint64_t dots_before = lsh ? lsh->hash_dot_count() : 0;
      std::vector<double> samples;
      samples.reserve(spec.repetitions);
      std::uint64_t max_ops = 0;
      for (const auto& q : queries) {
        const std::uint64_t ops = cache->distance_computation_count();
        const auto start = Clock::now();
        auto hit = cache->lookup(q);
        const auto stop = Clock::now();
        if (hit) throw ContractViolation("lookup bench: unexpected hit at tolerance 0");
        max_ops = std::max(max_ops, cache->distance_computation_count() - ops);
        samples.push_back(static_cast<double>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count()));
      }
      const double reps = static_cast<double>(spec.repetitions);
      double sum = 0.0;
      for (double s : samples) sum += s;

      LookupBenchRow row;
      row.cache = kind;
      row.entries = cache->size();
      row.repetitions = spec.repetitions;
      row.mean_ns = sum / reps;
      row.p50_ns = percentile(samples, 0.5);
      row.p99_ns = percentile(samples, 0.99);
      row.distance_ops_per_lookup = static_cast<double>(cache->distance_computation_count() - ops_before) / reps;
      row.max_distance_ops = max_ops;
      row.hash_dots_per_lookup = lsh ? static_cast<double>(lsh->hash_dot_count() - dots_before) / reps : 0.0;
      row.allocated_buckets = cache->allocated_buckets();
      rows.push_back(row);
    }
  }
  return rows;
}

void write_lookup_bench(const std::vector<LookupBenchRow>& rows, const LookupBenchSpec& spec,
                        const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw OutputError("cannot create output directory " + out_dir.string() + ": " + ec.message());
  const std::string cpu = cpu_model();

  const auto csv_path = out_dir / "lookup_bench.csv";
  auto csv = open_output(csv_path);
  csv << "cache,entries,repetitions,dimension,hash_bits,bucket_capacity,mean_ns,p50_ns,p99_ns,"
         "distance_ops_per_lookup,max_distance_ops,hash_dots_per_lookup,allocated_buckets,cpu_model\n";
  json arr = json::array();
  for (const auto& r : rows) {
    const bool is_lsh = r.cache == CacheKind::Lsh;
    csv << to_string(r.cache) << ',' << r.entries << ',' << r.repetitions << ',' << spec.dimension << ','
        << (is_lsh ? std::to_string(spec.hash_bits) : "") << ','
        << (is_lsh ? std::to_string(spec.bucket_capacity) : "") << ',' << format_number(r.mean_ns) << ','
        << format_number(r.p50_ns) << ',' << format_number(r.p99_ns) << ','
        << format_number(r.distance_ops_per_lookup) << ',' << r.max_distance_ops << ','
        << format_number(r.hash_dots_per_lookup) << ','
        << r.allocated_buckets << ",\"" << cpu << "\"\n";
    arr.push_back({{"cache", to_string(r.cache)},
                   {"entries", r.entries},
                   {"repetitions", r.repetitions},
                   {"mean_ns", r.mean_ns},
                   {"p50_ns", r.p50_ns},
                   {"p99_ns", r.p99_ns},
                   {"distance_ops_per_lookup", r.distance_ops_per_lookup},
                   {"max_distance_ops", r.max_distance_ops},
                   {"hash_dots_per_lookup", r.hash_dots_per_lookup},
                   {"allocated_buckets", r.allocated_buckets}});
  }
  close_output(csv, csv_path);

  const auto json_path = out_dir / "lookup_bench.json";
  auto js = open_output(json_path);
  js << json{{"cpu_model", cpu},
             {"dimension", spec.dimension},
             {"hash_bits", spec.hash_bits},
             {"bucket_capacity", spec.bucket_capacity},
             {"rows", arr}}
            .dump(2)
     << '\n';
  close_output(js, json_path);
}

std::string cpu_model() {
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        auto model = line.substr(colon + 1);
        model.erase(0, model.find_first_not_of(' '));
        std::replace(model.begin(), model.end(), '"', '\'');
        return model;
      }
    }
  }
  return "unknown";
}

}  // namespace proximity
