#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "localsgd_lab/core.hpp"
#include "localsgd_lab/rng.hpp"

namespace localsgd_lab {

/// Smoothness constant of the local objectives, flagged when it comes from
/// a numerical estimate rather than a closed form.
struct Smoothness {
  double value = 0.0;
  bool estimated = false;
};

/// Finite-sum objective f(x) = (1/N) sum_i f_i(x) split across N workers.
/// Implementations are immutable after construction and safe to share
/// between worker threads.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::size_t worker_count() const = 0;

  virtual double local_loss(std::size_t worker, const ModelVector& x) const = 0;
  virtual ModelVector full_gradient(std::size_t worker, const ModelVector& x) const = 0;

  /// Mini-batch estimate of grad f_i(x): the running mean of `batch`
  /// per-draw gradients, each perturbed by isotropic Gaussian noise of
  /// standard deviation sigma. With sigma = 0 on a problem without data
  /// sampling this returns full_gradient exactly.
  ModelVector stochastic_gradient(std::size_t worker, const ModelVector& x, const DrawKey& key,
                                  std::size_t batch) const;

  /// f(x) = s (1/N) sum_i f_i(x), summed in ascending worker order, with
  /// s = objective_scale().
  double loss(const ModelVector& x) const;
  /// grad f(x) = s times the mean of the full local gradients.
  ModelVector average_gradient(const ModelVector& x) const;
  /// Factor between the reported objective and the mean of the local ones;
  /// 1 except where the objective is conventionally the sum.
  virtual double objective_scale() const { return 1.0; }

  double noise_sigma() const noexcept { return sigma_; }
  virtual std::optional<Smoothness> smoothness() const { return std::nullopt; }
  virtual std::optional<ModelVector> optimum() const { return std::nullopt; }
  virtual std::optional<double> optimal_loss() const { return std::nullopt; }
  /// Training-set size n, or 0 for problems without data.
  virtual std::size_t sample_count() const { return 0; }

 protected:
  explicit Problem(double sigma);

  /// Gradient contribution of batch element `slot`. The default draws no
  /// sample and returns the full local gradient.
  virtual ModelVector sample_gradient(std::size_t worker, const ModelVector& x, const DrawKey& key,
                                      std::uint32_t draw) const;

  void check_worker(std::size_t worker) const;
  void check_point(const ModelVector& x) const;

 private:
  double sigma_ = 0.0;
};

/// Two workers, d = 1: f_1(x) = (x + 2b)^2, f_2(x) = 2 (x - b)^2, so
/// f(x) = f_1 + f_2 = 3x^2 + 6b^2 with x* = 0, f* = 6b^2 and L = 4. The
/// reported objective is the sum (so loss(0) = 6b^2 and grad f = 6x); the
/// workers still average their local gradients.
class QuadraticPairProblem final : public Problem {
 public:
  explicit QuadraticPairProblem(double b_param, double sigma = 0.0);

  double b_param() const noexcept { return b_; }

  std::string name() const override { return "quad"; }
  std::size_t dimension() const override { return 1; }
  std::size_t worker_count() const override { return 2; }
  double local_loss(std::size_t worker, const ModelVector& x) const override;
  ModelVector full_gradient(std::size_t worker, const ModelVector& x) const override;
  std::optional<Smoothness> smoothness() const override { return Smoothness{4.0, false}; }
  std::optional<ModelVector> optimum() const override { return ModelVector{0.0}; }
  std::optional<double> optimal_loss() const override { return 6.0 * b_ * b_; }
  double objective_scale() const override { return 2.0; }

 private:
  double b_;
};

/// f_i(x) = 1/2 sum_c h_ic (x_c - m_ic)^2 with positive diagonal curvatures.
class SeparableQuadraticProblem final : public Problem {
 public:
  /// curvatures[i] and centers[i] are worker i's h_i and m_i.
  SeparableQuadraticProblem(std::vector<ModelVector> curvatures, std::vector<ModelVector> centers, double sigma);

  /// Random instance: h_ic ~ U[1, 4], m_ic ~ spread * N(0, 1). In the
  /// identical case every worker shares worker 0's draw.
  static SeparableQuadraticProblem random(std::size_t workers, std::size_t dim, double spread, Partition partition,
                                          std::uint64_t seed, double sigma);

  std::string name() const override { return "quadratic"; }
  std::size_t dimension() const override { return dim_; }
  std::size_t worker_count() const override { return curvatures_.size(); }
  double local_loss(std::size_t worker, const ModelVector& x) const override;
  ModelVector full_gradient(std::size_t worker, const ModelVector& x) const override;
  std::optional<Smoothness> smoothness() const override { return Smoothness{max_curvature_, false}; }
  std::optional<ModelVector> optimum() const override { return optimum_; }
  std::optional<double> optimal_loss() const override { return optimal_loss_; }

 private:
  std::size_t dim_;
  std::vector<ModelVector> curvatures_;
  std::vector<ModelVector> centers_;
  double max_curvature_ = 0.0;
  ModelVector optimum_;
  double optimal_loss_ = 0.0;
};

/// Labelled samples stored row-major. `targets` carries the regression
/// target of each sample; classification problems use `labels`.
struct Dataset {
  std::size_t features = 0;
  std::size_t classes = 0;
  std::vector<double> x;
  std::vector<int> labels;
  std::vector<double> targets;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> row(std::size_t s) const { return std::span<const double>(x).subspan(s * features, features); }
};

/// Gaussian class clusters with balanced labels (sample s has label s mod m).
/// Regression targets follow a class-dependent linear model, so shards that
/// hold different classes have different local optima.
Dataset make_cluster_dataset(std::size_t samples, std::size_t features, std::size_t classes, std::uint64_t seed,
                             double separation = 3.0);

/// CSV with a header row, feature columns, then an integer label column.
/// The label doubles as the regression target.
Dataset load_csv_dataset(const std::string& path);

using Shards = std::vector<std::vector<std::size_t>>;

/// Identical: every worker gets the whole index set. NonIdentical: samples
/// sorted by label, contiguous label blocks dealt out so the first m mod N
/// workers get ceil(m/N) classes and the rest floor(m/N).
Shards make_partition(std::span<const int> labels, std::size_t classes, std::size_t workers, Partition mode);
Shards make_partition(const Dataset& data, std::size_t workers, Partition mode);

/// f_i(x) = 1/(2 n_i) sum_{s in shard i} (<w, a_s> + bias - y_s)^2, x = (w, bias).
class PartitionedLeastSquares final : public Problem {
 public:
  PartitionedLeastSquares(Dataset data, Shards shards, double sigma);

  std::string name() const override { return "least_squares"; }
  std::size_t dimension() const override { return data_.features + 1; }
  std::size_t worker_count() const override { return shards_.size(); }
  double local_loss(std::size_t worker, const ModelVector& x) const override;
  ModelVector full_gradient(std::size_t worker, const ModelVector& x) const override;
  std::optional<Smoothness> smoothness() const override { return Smoothness{lipschitz_, false}; }
  std::optional<ModelVector> optimum() const override { return optimum_; }
  std::optional<double> optimal_loss() const override { return optimal_loss_; }
  std::size_t sample_count() const override { return data_.size(); }
  const Shards& shards() const noexcept { return shards_; }

 protected:
  ModelVector sample_gradient(std::size_t worker, const ModelVector& x, const DrawKey& key,
                              std::uint32_t draw) const override;

 private:
  double residual(std::size_t s, const ModelVector& x) const;
  void add_sample_gradient(std::size_t s, const ModelVector& x, double weight, ModelVector& g) const;

  Dataset data_;
  Shards shards_;
  double lipschitz_ = 0.0;
  ModelVector optimum_;
  double optimal_loss_ = 0.0;
};

/// Multinomial logistic regression with an l2 term:
/// f_i(x) = (1/n_i) sum_{s in shard i} -log softmax(W a_s + c)_{y_s} + (l2/2) |x|^2.
/// x stores the m x (p + 1) matrix [W | c] row-major.
class PartitionedLogistic final : public Problem {
 public:
  PartitionedLogistic(Dataset data, Shards shards, double sigma, double l2);

  std::string name() const override { return "logistic"; }
  std::size_t dimension() const override { return data_.classes * (data_.features + 1); }
  std::size_t worker_count() const override { return shards_.size(); }
  double local_loss(std::size_t worker, const ModelVector& x) const override;
  ModelVector full_gradient(std::size_t worker, const ModelVector& x) const override;
  std::optional<Smoothness> smoothness() const override { return smoothness_; }
  std::size_t sample_count() const override { return data_.size(); }
  const Shards& shards() const noexcept { return shards_; }

 protected:
  ModelVector sample_gradient(std::size_t worker, const ModelVector& x, const DrawKey& key,
                              std::uint32_t draw) const override;

 private:
  double sample_loss(std::size_t s, const ModelVector& x) const;
  void add_sample_gradient(std::size_t s, const ModelVector& x, double weight, ModelVector& g) const;

  Dataset data_;
  Shards shards_;
  double l2_;
  Smoothness smoothness_;
};

/// Power-iteration estimate of max_i |Hessian f_i| over the given points,
/// using central finite differences of the full gradient for
/// Hessian-vector products.
double estimate_lipschitz(const Problem& p, std::span<const ModelVector> points, int iterations = 50,
                          std::uint64_t seed = 0x5EEDull);

/// Problem parameters carried in the run configuration.
struct ProblemConfig {
  /// quad | quadratic | least_squares | logistic
  std::string kind = "quad";
  double b_param = 1.0;
  double sigma = 0.0;
  /// Dimension of `quadratic`, feature count of the dataset problems.
  std::size_t dim = 1;
  std::size_t samples = 1000;
  std::size_t classes = 10;
  std::uint64_t data_seed = 1;
  double l2 = 1e-3;
  /// Optional dataset CSV for the dataset problems; synthetic clusters otherwise.
  std::string csv;

  friend bool operator==(const ProblemConfig&, const ProblemConfig&) = default;
};

std::unique_ptr<Problem> make_problem(const ProblemConfig& cfg, std::size_t workers, Partition partition);

}  // namespace localsgd_lab
