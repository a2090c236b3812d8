#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace localsgd_lab {

/// Raised when two model vectors of different dimension meet in one operation.
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an operation would produce a NaN or an infinity.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for invalid run or problem configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense parameter vector. Every model, correction term and gradient
/// approximation in the simulator is one of these.
class ModelVector {
 public:
  ModelVector() = default;
  explicit ModelVector(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
  explicit ModelVector(std::vector<double> values) : values_(std::move(values)) {}
  ModelVector(std::initializer_list<double> values) : values_(values) {}

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }
  std::span<double> span() noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  bool all_finite() const noexcept;

  /// Bitwise-equal in the IEEE sense used by the equivalence tests
  /// (0.0 == -0.0, NaN never equal).
  friend bool operator==(const ModelVector&, const ModelVector&) = default;

 private:
  std::vector<double> values_;
};

void require_same_dimension(const ModelVector& a, const ModelVector& b, std::string_view what);

/// Element-wise mean, folded left in the given order as a running mean
/// m <- m + (v_j - m) / (j + 1). The fixed order makes the result
/// bit-reproducible, and N copies of v average to v exactly.
ModelVector vec_mean(std::span<const ModelVector> vs);

/// a * x + y.
ModelVector vec_axpy(double a, const ModelVector& x, const ModelVector& y);

/// y <- a * x + y without the finiteness check; hot-path helper.
void axpy_inplace(double a, const ModelVector& x, ModelVector& y);

ModelVector vec_sub(const ModelVector& a, const ModelVector& b);
ModelVector vec_scale(double a, const ModelVector& x);
double dot(const ModelVector& a, const ModelVector& b);
double squared_norm(const ModelVector& x);
/// Euclidean norm computed with scaling; for d = 1 it returns |x[0]| exactly.
double norm(const ModelVector& x);
double max_abs(const ModelVector& x);
double max_abs_diff(const ModelVector& a, const ModelVector& b);

enum class Algorithm { SSGD, LocalSGD, EASGD, VRLSGD };
enum class Partition { Identical, NonIdentical };

std::string_view to_string(Algorithm a);
std::string_view to_string(Partition p);
Algorithm parse_algorithm(std::string_view name);
Partition parse_partition(std::string_view name);

/// Hyperparameters of a single simulated run.
struct RunConfig {
  Algorithm algorithm = Algorithm::VRLSGD;
  double gamma = 0.01;
  std::uint64_t k = 10;
  std::size_t workers = 2;
  std::uint64_t iterations = 1000;
  std::size_t batch_size = 1;
  bool warm_up = false;
  std::uint64_t seed = 0;
  /// Elastic coefficient; unset means the default 0.9 / N.
  std::optional<double> easgd_alpha;
  Partition partition = Partition::NonIdentical;
  /// Every coordinate of the initial model x^0.
  double x0 = 0.0;
  /// Metric sampling cadence in iterations; 0 means ceil(T / 1000).
  std::uint64_t sample_every = 0;

  double effective_easgd_alpha() const;
  std::uint64_t effective_sample_every() const;
  /// Throws ConfigError when an invariant of the configuration is broken.
  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Boundaries of the communication periods of one run. Periods have length
/// k, except that a warm-up makes the first period length 1 and the last
/// period is cut short when it would run past T.
class SyncSchedule {
 public:
  SyncSchedule(std::uint64_t k, std::uint64_t total_iterations, bool warm_up);

  std::uint64_t k() const noexcept { return k_; }
  std::uint64_t total_iterations() const noexcept { return total_; }
  bool warm_up() const noexcept { return warm_up_; }

  /// True when a synchronization happens once iteration count t is reached.
  bool is_sync_point(std::uint64_t t) const noexcept;
  /// First sync point strictly after t (clamped to T).
  std::uint64_t next_sync_after(std::uint64_t t) const noexcept;
  /// Start of the period containing local iteration t (t < T).
  std::uint64_t period_start(std::uint64_t t) const noexcept;
  /// Length of the period that ends at sync point t.
  std::uint64_t period_length_ending_at(std::uint64_t t) const;
  /// Number of synchronizations in the whole run.
  std::uint64_t sync_count() const noexcept;

  /// Regular-period indices t' = floor(t/k) k and t'' = t' - k. The
  /// previous-period window is empty (nullopt) for t < k.
  static std::uint64_t last_communication(std::uint64_t t, std::uint64_t k) noexcept { return (t / k) * k; }
  static std::optional<std::uint64_t> previous_communication(std::uint64_t t, std::uint64_t k) noexcept {
    if (t < k) return std::nullopt;
    return last_communication(t, k) - k;
  }

 private:
  std::uint64_t k_;
  std::uint64_t total_;
  bool warm_up_;
};

}  // namespace localsgd_lab
