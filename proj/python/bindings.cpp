// Python bindings: a cache handle wrapping the native retriever, with the
// vector database supplied either as a native brute-force store or as a
// Python callback invoked on misses.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include "proximity/flat_cache.hpp"
#include "proximity/lsh_cache.hpp"
#include "proximity/retriever.hpp"
#include "proximity/vector_store.hpp"

namespace py = pybind11;
using namespace proximity;

namespace {

/// Invalid configuration value; surfaces in Python as ConfigError with a
/// `parameter` attribute.
struct ParameterError : std::invalid_argument {
  ParameterError(std::string param, const std::string& message)
      : std::invalid_argument(param + ": " + message), parameter(std::move(param)) {}
  std::string parameter;
};

struct ClosedHandleError : std::runtime_error {
  ClosedHandleError() : std::runtime_error("cache handle is closed") {}
};

// Strict 1-D float32 C-contiguous view; no dtype conversion.
Embedding to_embedding(const py::handle& obj, std::size_t d, const char* what) {
  if (!py::isinstance<py::array>(obj)) {
    throw ParameterError(what, "expected a numpy.ndarray of float32");
  }
  auto arr = py::reinterpret_borrow<py::array>(obj);
  if (!arr.dtype().is(py::dtype::of<float>())) {
    throw ParameterError(what, "expected dtype float32, got " + std::string(py::str(arr.dtype())));
  }
  if (arr.ndim() != 1) throw ParameterError(what, "expected a 1-D array");
  if (!(arr.flags() & py::array::c_style)) throw ParameterError(what, "expected a C-contiguous array");
  if (static_cast<std::size_t>(arr.shape(0)) != d) {
    throw ParameterError(what, "expected length " + std::to_string(d) + ", got " + std::to_string(arr.shape(0)));
  }
  const auto* data = static_cast<const float*>(arr.data());
  return Embedding::from_span({data, d});
}

// (ids int64[n], embeddings float32[n, d]) -> documents.
std::vector<Document> to_documents(const py::handle& ids_obj, const py::handle& emb_obj, std::size_t d) {
  if (!py::isinstance<py::array>(ids_obj) || !py::isinstance<py::array>(emb_obj)) {
    throw ParameterError("documents", "expected numpy arrays (ids, embeddings)");
  }
  auto ids = py::reinterpret_borrow<py::array>(ids_obj);
  auto emb = py::reinterpret_borrow<py::array>(emb_obj);
  if (!ids.dtype().is(py::dtype::of<std::int64_t>()) || ids.ndim() != 1) {
    throw ParameterError("ids", "expected a 1-D int64 array");
  }
  if (!emb.dtype().is(py::dtype::of<float>()) || emb.ndim() != 2 || !(emb.flags() & py::array::c_style)) {
    throw ParameterError("embeddings", "expected a C-contiguous 2-D float32 array");
  }
  const auto n = static_cast<std::size_t>(ids.shape(0));
  if (static_cast<std::size_t>(emb.shape(0)) != n || static_cast<std::size_t>(emb.shape(1)) != d) {
    throw ParameterError("embeddings", "expected shape (" + std::to_string(n) + ", " + std::to_string(d) + ")");
  }
  auto id_view = ids.unchecked<std::int64_t, 1>();
  const auto* rows = static_cast<const float*>(emb.data());
  std::vector<Document> docs;
  docs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    docs.push_back({id_view(static_cast<py::ssize_t>(i)), Embedding::from_span({rows + i * d, d})});
  }
  return docs;
}

py::array_t<std::int64_t> to_array(const std::vector<DocId>& ids) {
  return py::array_t<std::int64_t>(static_cast<py::ssize_t>(ids.size()),
                                   ids.data());
}

/// Store backed by a host callback `(query, m) -> (ids, embeddings)`.
class CallbackStore final : public VectorStore {
 public:
  CallbackStore(py::function fn, std::size_t d) : fn_(std::move(fn)), dimension_(d) {}

  std::size_t dimension() const override { return dimension_; }
  // Unknown; the callback may return fewer than m documents.
  std::size_t size() const override { return std::numeric_limits<std::size_t>::max(); }

  std::vector<Document> retrieve_documents(const Embedding& query, std::size_t m) const override {
    py::gil_scoped_acquire gil;
    py::array_t<float> q(static_cast<py::ssize_t>(dimension_), query.values().data());
    py::object result = fn_(q, m);
    auto tuple = result.cast<py::tuple>();
    if (tuple.size() != 2) throw ParameterError("store", "callback must return (ids, embeddings)");
    auto docs = to_documents(tuple[0], tuple[1], dimension_);
    if (docs.empty() || docs.size() > m) {
      throw ParameterError("store", "callback returned " + std::to_string(docs.size()) +
                                        " documents, expected 1.." + std::to_string(m));
    }
    return docs;
  }

 private:
  py::function fn_;
  std::size_t dimension_;
};

class PyBruteForceStore {
 public:
  PyBruteForceStore(const py::array& ids, const py::array& embeddings, const std::string& metric) {
    if (!py::isinstance<py::array>(embeddings) || embeddings.ndim() != 2) {
      throw ParameterError("embeddings", "expected a 2-D float32 array");
    }
    DocumentCorpus corpus;
    corpus.dimension = static_cast<std::size_t>(embeddings.shape(1));
    corpus.metric = parse_metric(metric);
    corpus.docs = to_documents(ids, embeddings, corpus.dimension);
    store_ = std::make_shared<BruteForceStore>(std::move(corpus));
  }
  std::shared_ptr<BruteForceStore> store() const { return store_; }

 private:
  std::shared_ptr<BruteForceStore> store_;
};

struct HandleConfig {
  std::string kind = "flat";
  std::size_t dimension = 0;
  std::size_t capacity = 100;
  double tolerance = 0.0;
  DistanceMetric metric = DistanceMetric::L2;
  EvictionPolicy policy = EvictionPolicy::FIFO;
  unsigned hash_bits = 8;
  std::size_t bucket_capacity = 20;
  std::uint64_t seed = 0;
  std::size_t k = 1;
  double rerank_factor = 1.0;
};

template <typename T>
T integer_value(const py::handle& v, const std::string& name, long long min) {
  if (!py::isinstance<py::int_>(v) || py::isinstance<py::bool_>(v)) throw ParameterError(name, "expected an integer");
  const auto x = v.cast<long long>();
  if (x < min) throw ParameterError(name, "must be >= " + std::to_string(min));
  return static_cast<T>(x);
}

double real_value(const py::handle& v, const std::string& name) {
  if (!(py::isinstance<py::float_>(v) || py::isinstance<py::int_>(v)) || py::isinstance<py::bool_>(v)) {
    throw ParameterError(name, "expected a number");
  }
  return v.cast<double>();
}

HandleConfig parse_config(const py::dict& config) {
  HandleConfig c;
  bool kind_given = false, lsh_keys = false;
  for (const auto& [key_obj, value] : config) {
    const auto key = py::str(key_obj).cast<std::string>();
    if (key == "kind" || key == "cache") {
      c.kind = py::str(value).cast<std::string>();
      if (c.kind != "flat" && c.kind != "lsh") throw ParameterError("kind", "expected 'flat' or 'lsh'");
      kind_given = true;
    } else if (key == "d" || key == "dimension") {
      c.dimension = integer_value<std::size_t>(value, "dimension", 1);
    } else if (key == "c" || key == "capacity") {
      c.capacity = integer_value<std::size_t>(value, "capacity", 1);
    } else if (key == "tau" || key == "tolerance") {
      c.tolerance = real_value(value, "tolerance");
      if (!(c.tolerance >= 0.0)) throw ParameterError("tolerance", "must be >= 0");
    } else if (key == "metric") {
      try {
        c.metric = parse_metric(py::str(value).cast<std::string>());
      } catch (const ContractViolation& e) {
        throw ParameterError("metric", e.what());
      }
    } else if (key == "policy") {
      try {
        c.policy = parse_policy(py::str(value).cast<std::string>());
      } catch (const ContractViolation& e) {
        throw ParameterError("policy", e.what());
      }
    } else if (key == "L" || key == "hash_bits") {
      c.hash_bits = integer_value<unsigned>(value, "hash_bits", 0);
      if (c.hash_bits > kMaxHashBits) throw ParameterError("hash_bits", "must be <= " + std::to_string(kMaxHashBits));
      lsh_keys = true;
    } else if (key == "b" || key == "bucket_capacity") {
      c.bucket_capacity = integer_value<std::size_t>(value, "bucket_capacity", 1);
      lsh_keys = true;
    } else if (key == "seed") {
      c.seed = integer_value<std::uint64_t>(value, "seed", 0);
    } else if (key == "k") {
      c.k = integer_value<std::size_t>(value, "k", 1);
    } else if (key == "rho" || key == "rerank_factor") {
      c.rerank_factor = real_value(value, "rerank_factor");
      if (!(c.rerank_factor >= 1.0) || !std::isfinite(c.rerank_factor)) {
        throw ParameterError("rerank_factor", "must be a finite value >= 1");
      }
    } else {
      throw ParameterError(key, "unknown parameter");
    }
  }
  if (c.dimension == 0) throw ParameterError("dimension", "required");
  if (!kind_given && lsh_keys) c.kind = "lsh";
  return c;
}

/// Owns one cache + retriever. All calls run with the GIL held, which
/// serializes access; re-entry from a store callback is rejected.
class CacheHandle {
 public:
  CacheHandle(const py::dict& config, const py::object& store) : config_(parse_config(config)) {
    std::unique_ptr<ApproximateCache> cache;
    if (config_.kind == "flat") {
      cache = std::make_unique<FlatCache>(FlatCacheConfig{config_.capacity, config_.tolerance, config_.metric,
                                                          config_.policy, config_.dimension, 0});
    } else {
      cache = std::make_unique<LshCache>(LshCacheConfig{config_.hash_bits, config_.bucket_capacity,
                                                        config_.tolerance, config_.metric, config_.policy,
                                                        config_.dimension, config_.seed, 0});
    }

    std::shared_ptr<const VectorStore> vs;
    if (store.is_none()) {
      vs = std::make_shared<CallbackStore>(
          py::cpp_function([](py::object, std::size_t) -> py::object {
            throw std::runtime_error("no store configured; pass store= to create()");
          }),
          config_.dimension);
    } else if (py::isinstance<PyBruteForceStore>(store)) {
      vs = store.cast<const PyBruteForceStore&>().store();
    } else if (PyCallable_Check(store.ptr())) {
      vs = std::make_shared<CallbackStore>(store.cast<py::function>(), config_.dimension);
    } else {
      throw ParameterError("store", "expected a BruteForceStore or a callable");
    }
    try {
      retriever_ = std::make_unique<Retriever>(std::move(cache), std::move(vs),
                                               RetrieverConfig{config_.k, config_.rerank_factor});
    } catch (const ContractViolation& e) {
      throw ParameterError("store", e.what());
    }
  }

  py::object lookup(const py::handle& query) {
    Guard g(*this);
    auto q = to_embedding(query, config_.dimension, "query");
    auto hit = retriever_->cache()->lookup(q);
    if (!hit) return py::none();
    return py::make_tuple(to_array(hit->value->ids()), hit->match_distance);
  }

  void insert(const py::handle& key, const py::handle& ids, const py::handle& embeddings) {
    Guard g(*this);
    auto k = to_embedding(key, config_.dimension, "key");
    CacheValue value{to_documents(ids, embeddings, config_.dimension)};
    retriever_->cache()->insert(k, std::move(value));
  }

  py::tuple lookup_or_retrieve(const py::handle& query, std::optional<std::size_t> k) {
    Guard g(*this);
    if (k && *k != config_.k) {
      throw ParameterError("k", "handle was created with k=" + std::to_string(config_.k));
    }
    auto q = to_embedding(query, config_.dimension, "query");
    const auto out = retriever_->retrieve(q);
    return py::make_tuple(to_array(out.doc_ids), out.hit());
  }

  py::dict stats() {
    Guard g(*this);
    py::dict d;
    const auto queries = retriever_->queries();
    d["queries"] = queries;
    d["hits"] = retriever_->hits();
    d["misses"] = queries - retriever_->hits();
    d["hit_rate"] = queries ? static_cast<double>(retriever_->hits()) / static_cast<double>(queries) : 0.0;
    d["db_calls"] = retriever_->db_calls();
    d["insertions"] = retriever_->insertions();
    d["distance_ops"] = retriever_->cache()->distance_computation_count();
    d["entries"] = retriever_->cache()->size();
    return d;
  }

  py::dict occupancy() {
    Guard g(*this);
    const auto* cache = retriever_->cache();
    py::dict d;
    d["entries"] = cache->size();
    d["allocated_buckets"] = cache->allocated_buckets();
    d["theoretical_capacity"] = cache->theoretical_capacity();
    d["relative"] = static_cast<double>(cache->size()) / static_cast<double>(cache->theoretical_capacity());
    return d;
  }

  void close() {
    if (busy_) throw std::runtime_error("cannot close a handle while it is in use");
    retriever_.reset();
  }
  bool closed() const { return !retriever_; }

  std::size_t dimension() const { return config_.dimension; }
  std::size_t k() const { return config_.k; }
  std::size_t fetch_count() const { return RetrieverConfig{config_.k, config_.rerank_factor}.fetch_count(); }
  std::string kind() const { return config_.kind; }

 private:
  struct Guard {
    explicit Guard(CacheHandle& h) : handle(h) {
      if (!h.retriever_) throw ClosedHandleError();
      if (h.busy_) throw std::runtime_error("cache handle is already in use (re-entrant call)");
      h.busy_ = true;
    }
    ~Guard() { handle.busy_ = false; }
    CacheHandle& handle;
  };

  HandleConfig config_;
  std::unique_ptr<Retriever> retriever_;
  bool busy_ = false;
};

}  // namespace

PYBIND11_MODULE(_proximity, m) {
  m.doc() = "Approximate embedding caches (FLAT and LSH) in front of a vector database";

  static py::exception<ParameterError> config_error(m, "ConfigError", PyExc_ValueError);
  static py::exception<ClosedHandleError> closed_error(m, "ClosedHandleError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ParameterError& e) {
      py::object err = py::handle(config_error.ptr())(e.what());
      err.attr("parameter") = e.parameter;
      PyErr_SetObject(config_error.ptr(), err.ptr());
    } catch (const ClosedHandleError& e) {
      py::set_error(closed_error, e.what());
    } catch (const ContractViolation& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  py::class_<PyBruteForceStore>(m, "BruteForceStore")
      .def(py::init<const py::array&, const py::array&, const std::string&>(), py::arg("ids"),
           py::arg("embeddings"), py::arg("metric") = "l2")
      .def("__len__", [](const PyBruteForceStore& s) { return s.store()->size(); })
      .def(
          "search",
          [](const PyBruteForceStore& s, const py::handle& query, std::size_t m) {
            auto q = to_embedding(query, s.store()->dimension(), "query");
            std::vector<DocId> ids;
            for (const auto& n : s.store()->retrieve_document_indices(q, m)) ids.push_back(n.id);
            return to_array(ids);
          },
          py::arg("query"), py::arg("m"), "Exact top-m document ids.");

  py::class_<CacheHandle>(m, "Cache")
      .def(py::init<const py::dict&, const py::object&>(), py::arg("config"), py::arg("store") = py::none())
      .def("lookup", &CacheHandle::lookup, py::arg("query"),
           "Cached (ids, match_distance) for the closest key within tolerance, else None.")
      .def("insert", &CacheHandle::insert, py::arg("key"), py::arg("ids"), py::arg("embeddings"))
      .def("lookup_or_retrieve", &CacheHandle::lookup_or_retrieve, py::arg("query"), py::arg("k") = py::none(),
           "Returns (doc_ids, was_hit).")
      .def("stats", &CacheHandle::stats)
      .def("occupancy", &CacheHandle::occupancy)
      .def("close", &CacheHandle::close)
      .def_property_readonly("closed", &CacheHandle::closed)
      .def_property_readonly("dimension", &CacheHandle::dimension)
      .def_property_readonly("k", &CacheHandle::k)
      .def_property_readonly("fetch_count", &CacheHandle::fetch_count)
      .def_property_readonly("kind", &CacheHandle::kind)
      .def("__enter__", [](py::object self) { return self; })
      .def("__exit__", [](CacheHandle& h, py::args) { h.close(); });
}
