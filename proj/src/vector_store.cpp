#include "proximity/vector_store.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <string>
#include <unordered_set>

namespace proximity {

namespace {

constexpr char kMagic[8] = {'P', 'X', 'C', 'O', 'R', 'P', 'U', 'S'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "corpus I/O assumes a little-endian host");

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::filesystem::path& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("truncated corpus file: " + path.string());
  return value;
}

}  // namespace

void DocumentCorpus::validate() const {
  if (dimension < 1) throw ContractViolation("corpus dimension must be >= 1");
  std::unordered_set<DocId> seen;
  seen.reserve(docs.size());
  for (const auto& doc : docs) {
    require_dimension(doc.embedding, dimension, "corpus document");
    if (!seen.insert(doc.id).second) {
      throw ContractViolation("duplicate document id " + std::to_string(doc.id) + " in corpus");
    }
  }
}

BruteForceStore::BruteForceStore(DocumentCorpus corpus)
    : dimension_(corpus.dimension), metric_(corpus.metric) {
  corpus.validate();
  ids_.reserve(corpus.docs.size());
  rows_.reserve(corpus.docs.size() * dimension_);
  for (const auto& doc : corpus.docs) {
    ids_.push_back(doc.id);
    rows_.insert(rows_.end(), doc.embedding.values().begin(), doc.embedding.values().end());
  }
}

std::vector<BruteForceStore::Ranked> BruteForceStore::nearest(const Embedding& query,
                                                             std::size_t m) const {
  require_dimension(query, dimension_, "retrieve_document_indices");
  if (m < 1) throw ContractViolation("retrieve_document_indices: m must be >= 1");

  std::vector<Ranked> all;
  all.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    all.push_back({i, kernels::distance(query.data(), rows_.data() + i * dimension_, dimension_,
                                        metric_)});
  }
  const auto closer = [this](const Ranked& a, const Ranked& b) {
    return a.distance < b.distance || (a.distance == b.distance && ids_[a.position] < ids_[b.position]);
  };
  const std::size_t take = std::min(m, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), closer);
  all.resize(take);
  return all;
}

std::vector<Neighbor> BruteForceStore::retrieve_document_indices(const Embedding& query,
                                                                 std::size_t m) const {
  std::vector<Neighbor> out;
  for (const auto& r : nearest(query, m)) out.push_back({ids_[r.position], r.distance});
  return out;
}

std::vector<Document> BruteForceStore::retrieve_documents(const Embedding& query,
                                                          std::size_t m) const {
  std::vector<Document> out;
  for (const auto& r : nearest(query, m)) {
    out.push_back({ids_[r.position], document_embedding(r.position)});
  }
  return out;
}

Embedding BruteForceStore::document_embedding(std::size_t index) const {
  if (index >= ids_.size()) throw ContractViolation("document index out of range");
  return Embedding::from_span({rows_.data() + index * dimension_, dimension_});
}

void save_corpus(const DocumentCorpus& corpus, const std::filesystem::path& path) {
  corpus.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open corpus file for writing: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint32_t>(corpus.dimension));
  write_pod(out, static_cast<std::uint64_t>(corpus.docs.size()));
  for (const auto& doc : corpus.docs) write_pod(out, static_cast<std::int64_t>(doc.id));
  for (const auto& doc : corpus.docs) {
    out.write(reinterpret_cast<const char*>(doc.embedding.data()),
              static_cast<std::streamsize>(doc.embedding.dimension() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("failed writing corpus file: " + path.string());
}

DocumentCorpus load_corpus(const std::filesystem::path& path, DistanceMetric metric) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a corpus file (bad magic): " + path.string());
  }
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != kVersion) {
    throw std::runtime_error("unsupported corpus format version " + std::to_string(version));
  }
  const auto d = read_pod<std::uint32_t>(in, path);
  const auto n = read_pod<std::uint64_t>(in, path);

  std::vector<std::int64_t> ids(n);
  in.read(reinterpret_cast<char*>(ids.data()), static_cast<std::streamsize>(n * sizeof(std::int64_t)));
  std::vector<float> rows(n * d);
  in.read(reinterpret_cast<char*>(rows.data()), static_cast<std::streamsize>(rows.size() * sizeof(float)));
  if (!in) throw std::runtime_error("truncated corpus file: " + path.string());

  DocumentCorpus corpus;
  corpus.dimension = d;
  corpus.metric = metric;
  corpus.docs.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    corpus.docs.push_back({ids[i], Embedding::from_span({rows.data() + i * d, d})});
  }
  corpus.validate();
  return corpus;
}

}  // namespace proximity
