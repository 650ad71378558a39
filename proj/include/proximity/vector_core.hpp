#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace proximity {

/// Raised when a caller breaks an operation's precondition (dimension
/// mismatch, non-finite component, malformed cache value, ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Fixed-dimension float vector with finite components. Used both as cache
/// key and as query/document representation.
class Embedding {
 public:
  explicit Embedding(std::vector<float> values);
  Embedding(std::initializer_list<float> values);

  static Embedding from_span(std::span<const float> values);

  std::size_t dimension() const noexcept { return values_.size(); }
  std::span<const float> values() const noexcept { return values_; }
  const float* data() const noexcept { return values_.data(); }
  float operator[](std::size_t i) const noexcept { return values_[i]; }

  bool operator==(const Embedding&) const = default;

 private:
  std::vector<float> values_;
};

/// Both kinds are "smaller is closer": InnerProduct yields the negated dot
/// product. Cosine similarity maps to InnerProduct on caller-normalized data.
enum class DistanceMetric { L2, InnerProduct };

std::string_view to_string(DistanceMetric metric);
DistanceMetric parse_metric(std::string_view name);

namespace kernels {

// Lane-parallel kernels keep eight independent 64-bit accumulators so the
// compiler can map them onto vector registers. The scalar variants are the
// reference path.
double squared_l2_scalar(const float* a, const float* b, std::size_t d) noexcept;
double squared_l2_lanes(const float* a, const float* b, std::size_t d) noexcept;
double dot_scalar(const float* a, const float* b, std::size_t d) noexcept;
double dot_lanes(const float* a, const float* b, std::size_t d) noexcept;

/// Unchecked metric dispatch over raw rows of length d.
double distance(const float* a, const float* b, std::size_t d, DistanceMetric metric) noexcept;

}  // namespace kernels

double distance(const Embedding& a, const Embedding& b, DistanceMetric metric);

double dot(const Embedding& a, const Embedding& b);

std::vector<double> batch_distances(const Embedding& query, std::span<const Embedding> keys,
                                    DistanceMetric metric);

/// Row-major variant: `rows` holds `rows.size() / query.dimension()` keys.
std::vector<double> batch_distances(const Embedding& query, std::span<const float> rows,
                                    DistanceMetric metric);

void require_dimension(const Embedding& e, std::size_t expected, std::string_view what);

}  // namespace proximity
