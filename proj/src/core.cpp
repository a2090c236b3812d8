#include "localsgd_lab/core.hpp"

#include <algorithm>
#include <cmath>

namespace localsgd_lab {

bool ModelVector::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_dimension(const ModelVector& a, const ModelVector& b, std::string_view what) {
  if (a.size() != b.size()) {
    throw DimensionMismatch(std::string(what) + ": dimension " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
  }
}

namespace {

ModelVector checked(ModelVector v, std::string_view what) {
  if (!v.all_finite()) throw NumericalError(std::string(what) + " produced a non-finite entry");
  return v;
}

}  // namespace

ModelVector vec_mean(std::span<const ModelVector> vs) {
  if (vs.empty()) throw std::invalid_argument("vec_mean: empty list");
  ModelVector mean = vs.front();
  for (std::size_t j = 1; j < vs.size(); ++j) {
    require_same_dimension(mean, vs[j], "vec_mean");
    const double count = static_cast<double>(j + 1);
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += (vs[j][c] - mean[c]) / count;
  }
  return checked(std::move(mean), "vec_mean");
}

ModelVector vec_axpy(double a, const ModelVector& x, const ModelVector& y) {
  require_same_dimension(x, y, "vec_axpy");
  ModelVector out = y;
  axpy_inplace(a, x, out);
  return checked(std::move(out), "vec_axpy");
}

void axpy_inplace(double a, const ModelVector& x, ModelVector& y) {
  for (std::size_t c = 0; c < y.size(); ++c) y[c] += a * x[c];
}

ModelVector vec_sub(const ModelVector& a, const ModelVector& b) {
  require_same_dimension(a, b, "vec_sub");
  ModelVector out(a.size());
  for (std::size_t c = 0; c < a.size(); ++c) out[c] = a[c] - b[c];
  return out;
}

ModelVector vec_scale(double a, const ModelVector& x) {
  ModelVector out(x.size());
  for (std::size_t c = 0; c < x.size(); ++c) out[c] = a * x[c];
  return out;
}

double dot(const ModelVector& a, const ModelVector& b) {
  require_same_dimension(a, b, "dot");
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) s += a[c] * b[c];
  return s;
}

double squared_norm(const ModelVector& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double norm(const ModelVector& x) {
  const double scale = max_abs(x);
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double s = 0.0;
  for (double v : x) {
    const double r = v / scale;
    s += r * r;
  }
  return scale * std::sqrt(s);
}

double max_abs(const ModelVector& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const ModelVector& a, const ModelVector& b) {
  require_same_dimension(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) m = std::max(m, std::abs(a[c] - b[c]));
  return m;
}

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::SSGD: return "ssgd";
    case Algorithm::LocalSGD: return "localsgd";
    case Algorithm::EASGD: return "easgd";
    case Algorithm::VRLSGD: return "vrlsgd";
  }
  return "unknown";
}

std::string_view to_string(Partition p) {
  return p == Partition::Identical ? "identical" : "non_identical";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "ssgd" || name == "s-sgd") return Algorithm::SSGD;
  if (name == "localsgd" || name == "local-sgd" || name == "local_sgd") return Algorithm::LocalSGD;
  if (name == "easgd") return Algorithm::EASGD;
  if (name == "vrlsgd" || name == "vrl-sgd" || name == "vrl_sgd") return Algorithm::VRLSGD;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

Partition parse_partition(std::string_view name) {
  if (name == "identical") return Partition::Identical;
  if (name == "non_identical" || name == "non-identical" || name == "nonidentical") return Partition::NonIdentical;
  throw ConfigError("unknown partition mode '" + std::string(name) + "'");
}

double RunConfig::effective_easgd_alpha() const {
  return easgd_alpha.value_or(0.9 / static_cast<double>(workers));
}

std::uint64_t RunConfig::effective_sample_every() const {
  if (sample_every > 0) return sample_every;
  return std::max<std::uint64_t>(1, (iterations + 999) / 1000);
}

void RunConfig::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be a positive finite number");
  if (k < 1) throw ConfigError("k must be at least 1");
  if (workers < 1) throw ConfigError("worker count must be at least 1");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (algorithm == Algorithm::SSGD && k != 1) throw ConfigError("ssgd requires k = 1");
  if (!std::isfinite(x0)) throw ConfigError("x0 must be finite");
  if (algorithm == Algorithm::EASGD) {
    const double alpha = effective_easgd_alpha();
    if (!(alpha >= 0.0) || alpha > 1.0 / static_cast<double>(workers)) {
      throw ConfigError("easgd alpha must lie in [0, 1/N]");
    }
  }
}

SyncSchedule::SyncSchedule(std::uint64_t k, std::uint64_t total_iterations, bool warm_up)
    : k_(k), total_(total_iterations), warm_up_(warm_up) {
  if (k_ < 1) throw ConfigError("k must be at least 1");
}

bool SyncSchedule::is_sync_point(std::uint64_t t) const noexcept {
  if (t == 0 || t > total_) return false;
  if (t == total_) return true;
  if (warm_up_) return t == 1 || (t - 1) % k_ == 0;
  return t % k_ == 0;
}

std::uint64_t SyncSchedule::period_start(std::uint64_t t) const noexcept {
  if (warm_up_) {
    if (t < 1) return 0;
    return 1 + ((t - 1) / k_) * k_;
  }
  return (t / k_) * k_;
}

std::uint64_t SyncSchedule::next_sync_after(std::uint64_t t) const noexcept {
  if (t >= total_) return total_;
  std::uint64_t next = 0;
  if (warm_up_ && t < 1) {
    next = 1;
  } else {
    next = period_start(t) + k_;
  }
  return std::min(next, total_);
}

std::uint64_t SyncSchedule::period_length_ending_at(std::uint64_t t) const {
  if (!is_sync_point(t)) throw std::logic_error("period_length_ending_at: not a sync point");
  return t - period_start(t - 1);
}

std::uint64_t SyncSchedule::sync_count() const noexcept {
  if (total_ == 0) return 0;
  if (warm_up_) return 1 + (total_ - 1 + k_ - 1) / k_;
  return (total_ + k_ - 1) / k_;
}

}  // namespace localsgd_lab
