#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "proximity/lsh_cache.hpp"
#include "proximity/sweep.hpp"

namespace proximity {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(const std::string& s) {
  // stod rather than from_chars so "inf" is accepted for tau.
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ContractViolation("expected a number, got '" + s + "'");
  }
  if (used != s.size()) throw ContractViolation("expected a number, got '" + s + "'");
  return v;
}

std::uint64_t to_unsigned(const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ContractViolation("expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ContractViolation("expected a boolean, got '" + s + "'");
}

template <typename T, typename F>
std::vector<T> map_list(const std::vector<std::string>& items, F convert) {
  std::vector<T> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(static_cast<T>(convert(item)));
  return out;
}

const std::string& single(const std::vector<std::string>& items) {
  if (items.size() != 1) throw ContractViolation("expected a single value, got a list");
  return items.front();
}

using Setter = std::function<void(SweepConfig&, const std::vector<std::string>&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"mode", [](SweepConfig& c, const auto& v) { c.mode = parse_run_mode(single(v)); }},
      {"cache", [](SweepConfig& c, const auto& v) { c.caches = map_list<CacheKind>(v, parse_cache_kind); }},
      {"tau", [](SweepConfig& c, const auto& v) { c.tolerances = map_list<double>(v, to_double); }},
      {"capacity", [](SweepConfig& c, const auto& v) { c.capacities = map_list<std::size_t>(v, to_unsigned); }},
      {"hash_bits", [](SweepConfig& c, const auto& v) { c.hash_bits = map_list<unsigned>(v, to_unsigned); }},
      {"bucket_capacity",
       [](SweepConfig& c, const auto& v) { c.bucket_capacities = map_list<std::size_t>(v, to_unsigned); }},
      {"policy", [](SweepConfig& c, const auto& v) { c.policies = map_list<EvictionPolicy>(v, parse_policy); }},
      {"rho", [](SweepConfig& c, const auto& v) { c.rerank_factors = map_list<double>(v, to_double); }},
      {"k", [](SweepConfig& c, const auto& v) { c.ks = map_list<std::size_t>(v, to_unsigned); }},
      {"metric", [](SweepConfig& c, const auto& v) { c.metric = parse_metric(single(v)); }},
      {"seeds", [](SweepConfig& c, const auto& v) { c.seeds = map_list<std::uint64_t>(v, to_unsigned); }},
      {"clock",
       [](SweepConfig& c, const auto& v) {
         const auto& s = single(v);
         if (s == "virtual") c.clock = ClockMode::Virtual;
         else if (s == "wall") c.clock = ClockMode::Wall;
         else throw ContractViolation("clock must be 'virtual' or 'wall'");
       }},
      {"store_delay_ms", [](SweepConfig& c, const auto& v) { c.store_delay_ms = to_double(single(v)); }},
      {"recall", [](SweepConfig& c, const auto& v) { c.measure_recall = to_bool(single(v)); }},
      {"jobs", [](SweepConfig& c, const auto& v) { c.jobs = to_unsigned(single(v)); }},
      {"out_dir", [](SweepConfig& c, const auto& v) { c.out_dir = single(v); }},

      {"workload.mode",
       [](SweepConfig& c, const auto& v) { c.workload.mode = parse_workload_mode(single(v)); }},
      {"workload.base_count",
       [](SweepConfig& c, const auto& v) { c.workload.base_count = to_unsigned(single(v)); }},
      {"workload.queries",
       [](SweepConfig& c, const auto& v) { c.workload.total_queries = to_unsigned(single(v)); }},
      {"workload.zipf", [](SweepConfig& c, const auto& v) { c.workload.zipf_exponent = to_double(single(v)); }},
      {"workload.epsilon",
       [](SweepConfig& c, const auto& v) { c.workload.perturbation_radius = to_double(single(v)); }},
      {"workload.separation",
       [](SweepConfig& c, const auto& v) { c.workload.base_separation = to_double(single(v)); }},
      {"workload.spread", [](SweepConfig& c, const auto& v) { c.workload.base_spread = to_double(single(v)); }},
      {"workload.dimension",
       [](SweepConfig& c, const auto& v) { c.workload.dimension = to_unsigned(single(v)); }},
      {"workload.max_attempts",
       [](SweepConfig& c, const auto& v) { c.workload.max_attempts_per_base = to_unsigned(single(v)); }},

      {"corpus.docs_per_base",
       [](SweepConfig& c, const auto& v) { c.corpus.docs_per_base = to_unsigned(single(v)); }},
      {"corpus.doc_radius", [](SweepConfig& c, const auto& v) { c.corpus.doc_radius = to_double(single(v)); }},
      {"corpus.background_docs",
       [](SweepConfig& c, const auto& v) { c.corpus.background_docs = to_unsigned(single(v)); }},
      {"corpus.background_spread",
       [](SweepConfig& c, const auto& v) { c.corpus.background_spread = to_double(single(v)); }},
      {"corpus.path", [](SweepConfig& c, const auto& v) { c.corpus_path = single(v); }},

      {"bench.cache",
       [](SweepConfig& c, const auto& v) { c.bench.caches = map_list<CacheKind>(v, parse_cache_kind); }},
      {"bench.entry_counts",
       [](SweepConfig& c, const auto& v) { c.bench.entry_counts = map_list<std::size_t>(v, to_unsigned); }},
      {"bench.repetitions", [](SweepConfig& c, const auto& v) { c.bench.repetitions = to_unsigned(single(v)); }},
      {"bench.dimension", [](SweepConfig& c, const auto& v) { c.bench.dimension = to_unsigned(single(v)); }},
      {"bench.hash_bits",
       [](SweepConfig& c, const auto& v) { c.bench.hash_bits = static_cast<unsigned>(to_unsigned(single(v))); }},
      {"bench.bucket_capacity",
       [](SweepConfig& c, const auto& v) { c.bench.bucket_capacity = to_unsigned(single(v)); }},
      {"bench.seed", [](SweepConfig& c, const auto& v) { c.bench.seed = to_unsigned(single(v)); }},
  };
  return table;
}

// Whole-config checks that are not tied to one line.
void validate(const SweepConfig& c) {
  const auto nonempty = [](const auto& list, const char* key) {
    if (list.empty()) throw ContractViolation(std::string(key) + " list is empty");
  };
  nonempty(c.caches, "cache");
  nonempty(c.tolerances, "tau");
  nonempty(c.capacities, "capacity");
  nonempty(c.hash_bits, "hash_bits");
  nonempty(c.bucket_capacities, "bucket_capacity");
  nonempty(c.policies, "policy");
  nonempty(c.rerank_factors, "rho");
  nonempty(c.ks, "k");
  nonempty(c.seeds, "seeds");
  for (double t : c.tolerances) {
    if (!(t >= 0.0)) throw ContractViolation("tau values must be >= 0");
  }
  for (auto cap : c.capacities) {
    if (cap < 1) throw ContractViolation("capacity values must be >= 1");
  }
  for (auto b : c.bucket_capacities) {
    if (b < 1) throw ContractViolation("bucket_capacity values must be >= 1");
  }
  for (auto l : c.hash_bits) {
    if (l > kMaxHashBits) throw ContractViolation("hash_bits values must be <= " + std::to_string(kMaxHashBits));
  }
  for (double r : c.rerank_factors) {
    if (!(r >= 1.0)) throw ContractViolation("rho values must be >= 1");
  }
  for (auto k : c.ks) {
    if (k < 1) throw ContractViolation("k values must be >= 1");
  }
  if (!(c.store_delay_ms >= 0.0)) throw ContractViolation("store_delay_ms must be >= 0");
  if (c.jobs < 1) throw ContractViolation("jobs must be >= 1");
  c.workload.validate();
  if (c.bench.repetitions < 1) throw ContractViolation("bench.repetitions must be >= 1");
  if (c.bench.dimension < 1) throw ContractViolation("bench.dimension must be >= 1");
}

}  // namespace

std::string_view to_string(CacheKind kind) {
  switch (kind) {
    case CacheKind::None:
      return "none";
    case CacheKind::Flat:
      return "flat";
    case CacheKind::Lsh:
      return "lsh";
  }
  return "unknown";
}

CacheKind parse_cache_kind(std::string_view name) {
  if (name == "none") return CacheKind::None;
  if (name == "flat") return CacheKind::Flat;
  if (name == "lsh") return CacheKind::Lsh;
  throw ContractViolation("unknown cache kind '" + std::string(name) + "' (expected none, flat or lsh)");
}

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::Sweep:
      return "sweep";
    case RunMode::LookupBench:
      return "lookup-bench";
    case RunMode::Occupancy:
      return "occupancy";
  }
  return "unknown";
}

RunMode parse_run_mode(std::string_view name) {
  if (name == "sweep") return RunMode::Sweep;
  if (name == "lookup-bench") return RunMode::LookupBench;
  if (name == "occupancy") return RunMode::Occupancy;
  throw ContractViolation("unknown mode '" + std::string(name) +
                          "' (expected sweep, lookup-bench or occupancy)");
}

SweepConfig parse_sweep_config(std::istream& in, const std::string& source_name) {
  SweepConfig config;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto where = source_name + ":" + std::to_string(line_no) + ": ";
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    if (value.empty()) throw ConfigError(where + "missing value for '" + key + "'");
    try {
      it->second(config, split_list(value));
    } catch (const ContractViolation& e) {
      throw ConfigError(where + key + ": " + e.what());
    }
  }
  try {
    validate(config);
  } catch (const ContractViolation& e) {
    throw ConfigError(source_name + ": " + e.what());
  }
  return config;
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  return parse_sweep_config(in, path.string());
}

}  // namespace proximity
