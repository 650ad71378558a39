#include "proximity/vector_core.hpp"

#include <cmath>
#include <string>

namespace proximity {

namespace {

void validate_components(const std::vector<float>& values) {
  if (values.empty()) {
    throw ContractViolation("embedding dimension must be >= 1");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw ContractViolation("embedding component " + std::to_string(i) + " is not finite");
    }
  }
}

constexpr std::size_t kLanes = 8;

}  // namespace

Embedding::Embedding(std::vector<float> values) : values_(std::move(values)) {
  validate_components(values_);
}

Embedding::Embedding(std::initializer_list<float> values) : values_(values) {
  validate_components(values_);
}

Embedding Embedding::from_span(std::span<const float> values) {
  return Embedding(std::vector<float>(values.begin(), values.end()));
}

std::string_view to_string(DistanceMetric metric) {
  switch (metric) {
    case DistanceMetric::L2:
      return "l2";
    case DistanceMetric::InnerProduct:
      return "ip";
  }
  return "unknown";
}

DistanceMetric parse_metric(std::string_view name) {
  if (name == "l2" || name == "L2") return DistanceMetric::L2;
  if (name == "ip" || name == "inner_product" || name == "InnerProduct") {
    return DistanceMetric::InnerProduct;
  }
  throw ContractViolation("unknown distance metric '" + std::string(name) + "'");
}

namespace kernels {

double squared_l2_scalar(const float* a, const float* b, std::size_t d) noexcept {
  double sum = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += diff * diff;
  }
  return sum;
}

double squared_l2_lanes(const float* a, const float* b, std::size_t d) noexcept {
  double acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= d; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      const double diff = static_cast<double>(a[i + l]) - static_cast<double>(b[i + l]);
      acc[l] += diff * diff;
    }
  }
  double sum = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
  for (; i < d; ++i) {
    const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += diff * diff;
  }
  return sum;
}

double dot_scalar(const float* a, const float* b, std::size_t d) noexcept {
  double sum = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return sum;
}

double dot_lanes(const float* a, const float* b, std::size_t d) noexcept {
  double acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= d; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      acc[l] += static_cast<double>(a[i + l]) * static_cast<double>(b[i + l]);
    }
  }
  double sum = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
  for (; i < d; ++i) {
    sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return sum;
}

double distance(const float* a, const float* b, std::size_t d, DistanceMetric metric) noexcept {
  if (metric == DistanceMetric::L2) {
    return std::sqrt(squared_l2_lanes(a, b, d));
  }
  return -dot_lanes(a, b, d);
}

}  // namespace kernels

void require_dimension(const Embedding& e, std::size_t expected, std::string_view what) {
  if (e.dimension() != expected) {
    throw ContractViolation(std::string(what) + ": dimension mismatch (got " +
                            std::to_string(e.dimension()) + ", expected " +
                            std::to_string(expected) + ")");
  }
}

double distance(const Embedding& a, const Embedding& b, DistanceMetric metric) {
  require_dimension(b, a.dimension(), "distance");
  return kernels::distance(a.data(), b.data(), a.dimension(), metric);
}

double dot(const Embedding& a, const Embedding& b) {
  require_dimension(b, a.dimension(), "dot");
  return kernels::dot_lanes(a.data(), b.data(), a.dimension());
}

std::vector<double> batch_distances(const Embedding& query, std::span<const Embedding> keys,
                                    DistanceMetric metric) {
  for (const auto& key : keys) {
    require_dimension(key, query.dimension(), "batch_distances");
  }
  std::vector<double> out;
  out.reserve(keys.size());
  for (const auto& key : keys) {
    out.push_back(kernels::distance(query.data(), key.data(), query.dimension(), metric));
  }
  return out;
}

std::vector<double> batch_distances(const Embedding& query, std::span<const float> rows,
                                    DistanceMetric metric) {
  const std::size_t d = query.dimension();
  if (rows.size() % d != 0) {
    throw ContractViolation("batch_distances: row buffer is not a multiple of the dimension");
  }
  const std::size_t n = rows.size() / d;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = kernels::distance(query.data(), rows.data() + i * d, d, metric);
  }
  return out;
}

}  // namespace proximity
