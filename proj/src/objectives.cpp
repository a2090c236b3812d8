#include "localsgd_lab/objectives.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace localsgd_lab {

namespace {

// Worker ids reserved for data generation so these streams never collide
// with the training draws of real workers.
constexpr std::uint32_t kQuadraticStream = 0xFFFFFFF0u;
constexpr std::uint32_t kCenterStream = 0xFFFFFFFEu;
constexpr std::uint32_t kFeatureStream = 0xFFFFFFFDu;
constexpr std::uint32_t kWeightStream = 0xFFFFFFFCu;
constexpr std::uint32_t kClassWeightStream = 0xFFFFFFFBu;
constexpr std::uint32_t kTargetNoiseStream = 0xFFFFFFFAu;
constexpr std::uint32_t kPowerIterationStream = 0xFFFFFFF9u;

}  // namespace

Problem::Problem(double sigma) : sigma_(sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be a finite non-negative number");
}

void Problem::check_worker(std::size_t worker) const {
  if (worker >= worker_count()) {
    throw std::out_of_range("worker id " + std::to_string(worker) + " out of range [0, " +
                            std::to_string(worker_count()) + ")");
  }
}

void Problem::check_point(const ModelVector& x) const {
  if (x.size() != dimension()) {
    throw DimensionMismatch(name() + ": expected dimension " + std::to_string(dimension()) + ", got " +
                            std::to_string(x.size()));
  }
}

ModelVector Problem::sample_gradient(std::size_t worker, const ModelVector& x, const DrawKey&, std::uint32_t) const {
  return full_gradient(worker, x);
}

ModelVector Problem::stochastic_gradient(std::size_t worker, const ModelVector& x, const DrawKey& key,
                                         std::size_t batch) const {
  check_worker(worker);
  check_point(x);
  if (batch < 1) throw ConfigError("batch size must be at least 1");
  const std::size_t d = dimension();
  const auto stride = static_cast<std::uint32_t>(d + 1);
  ModelVector mean(d);
  for (std::size_t j = 0; j < batch; ++j) {
    const auto base = static_cast<std::uint32_t>(j) * stride;
    ModelVector g = sample_gradient(worker, x, key, base);
    if (sigma_ > 0.0) {
      for (std::size_t c = 0; c < d; ++c) g[c] += sigma_ * key.normal(base + 1 + static_cast<std::uint32_t>(c));
    }
    if (j == 0) {
      mean = std::move(g);
    } else {
      const double count = static_cast<double>(j + 1);
      for (std::size_t c = 0; c < d; ++c) mean[c] += (g[c] - mean[c]) / count;
    }
  }
  return mean;
}

double Problem::loss(const ModelVector& x) const {
  check_point(x);
  double sum = 0.0;
  for (std::size_t i = 0; i < worker_count(); ++i) sum += local_loss(i, x);
  return objective_scale() * (sum / static_cast<double>(worker_count()));
}

ModelVector Problem::average_gradient(const ModelVector& x) const {
  std::vector<ModelVector> gs;
  gs.reserve(worker_count());
  for (std::size_t i = 0; i < worker_count(); ++i) gs.push_back(full_gradient(i, x));
  ModelVector g = vec_mean(gs);
  const double s = objective_scale();
  if (s != 1.0) {
    for (std::size_t c = 0; c < g.size(); ++c) g[c] *= s;
  }
  return g;
}

// ---------------------------------------------------------------------------

QuadraticPairProblem::QuadraticPairProblem(double b_param, double sigma) : Problem(sigma), b_(b_param) {
  if (!std::isfinite(b_param)) throw ConfigError("b_param must be finite");
}

double QuadraticPairProblem::local_loss(std::size_t worker, const ModelVector& x) const {
  check_worker(worker);
  check_point(x);
  if (worker == 0) {
    const double r = x[0] + 2.0 * b_;
    return r * r;
  }
  const double r = x[0] - b_;
  return 2.0 * r * r;
}

ModelVector QuadraticPairProblem::full_gradient(std::size_t worker, const ModelVector& x) const {
  check_worker(worker);
  check_point(x);
  if (worker == 0) return ModelVector{2.0 * (x[0] + 2.0 * b_)};
  return ModelVector{4.0 * (x[0] - b_)};
}

// ---------------------------------------------------------------------------

SeparableQuadraticProblem::SeparableQuadraticProblem(std::vector<ModelVector> curvatures,
                                                     std::vector<ModelVector> centers, double sigma)
    : Problem(sigma), curvatures_(std::move(curvatures)), centers_(std::move(centers)) {
  if (curvatures_.empty() || curvatures_.size() != centers_.size()) {
    throw ConfigError("separable quadratic needs one curvature and one center per worker");
  }
  dim_ = curvatures_.front().size();
  if (dim_ == 0) throw ConfigError("separable quadratic needs dimension >= 1");
  for (std::size_t i = 0; i < curvatures_.size(); ++i) {
    require_same_dimension(curvatures_[i], centers_[i], "separable quadratic");
    require_same_dimension(curvatures_[i], curvatures_.front(), "separable quadratic");
    for (double h : curvatures_[i]) {
      if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("curvatures must be positive and finite");
      max_curvature_ = std::max(max_curvature_, h);
    }
  }
  optimum_ = ModelVector(dim_);
  for (std::size_t c = 0; c < dim_; ++c) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < curvatures_.size(); ++i) {
      num += curvatures_[i][c] * centers_[i][c];
      den += curvatures_[i][c];
    }
    optimum_[c] = num / den;
  }
  optimal_loss_ = loss(optimum_);
}

SeparableQuadraticProblem SeparableQuadraticProblem::random(std::size_t workers, std::size_t dim, double spread,
                                                            Partition partition, std::uint64_t seed, double sigma) {
  if (workers == 0 || dim == 0) throw ConfigError("random quadratic needs workers >= 1 and dim >= 1");
  std::vector<ModelVector> h(workers, ModelVector(dim));
  std::vector<ModelVector> m(workers, ModelVector(dim));
  for (std::size_t i = 0; i < workers; ++i) {
    const std::size_t source = partition == Partition::Identical ? 0 : i;
    const DrawKey key{seed, kQuadraticStream, source};
    for (std::size_t c = 0; c < dim; ++c) {
      h[i][c] = 1.0 + 3.0 * key.uniform(static_cast<std::uint32_t>(c));
      m[i][c] = spread * key.normal(static_cast<std::uint32_t>(dim + c));
    }
  }
  return SeparableQuadraticProblem(std::move(h), std::move(m), sigma);
}

double SeparableQuadraticProblem::local_loss(std::size_t worker, const ModelVector& x) const {
  check_worker(worker);
  check_point(x);
  double s = 0.0;
  for (std::size_t c = 0; c < dim_; ++c) {
    const double r = x[c] - centers_[worker][c];
    s += curvatures_[worker][c] * r * r;
  }
  return 0.5 * s;
}

ModelVector SeparableQuadraticProblem::full_gradient(std::size_t worker, const ModelVector& x) const {
  check_worker(worker);
  check_point(x);
  ModelVector g(dim_);
  for (std::size_t c = 0; c < dim_; ++c) g[c] = curvatures_[worker][c] * (x[c] - centers_[worker][c]);
  return g;
}

// ---------------------------------------------------------------------------

Dataset make_cluster_dataset(std::size_t samples, std::size_t features, std::size_t classes, std::uint64_t seed,
                             double separation) {
  if (samples == 0 || features == 0 || classes == 0) {
    throw ConfigError("synthetic dataset needs samples, features and classes >= 1");
  }
  Dataset data;
  data.features = features;
  data.classes = classes;
  data.x.resize(samples * features);
  data.labels.resize(samples);
  data.targets.resize(samples);

  const DrawKey weight_key{seed, kWeightStream, 0};
  std::vector<double> w(features);
  for (std::size_t c = 0; c < features; ++c) w[c] = weight_key.normal(static_cast<std::uint32_t>(c));

  for (std::size_t s = 0; s < samples; ++s) {
    const auto label = static_cast<std::uint64_t>(s % classes);
    const DrawKey center_key{seed, kCenterStream, label};
    const DrawKey feature_key{seed, kFeatureStream, s};
    const DrawKey class_weight_key{seed, kClassWeightStream, label};
    double target = 0.1 * DrawKey{seed, kTargetNoiseStream, s}.normal(0);
    for (std::size_t c = 0; c < features; ++c) {
      const auto cc = static_cast<std::uint32_t>(c);
      const double value = separation * center_key.normal(cc) + feature_key.normal(cc);
      data.x[s * features + c] = value;
      target += (w[c] + class_weight_key.normal(cc)) * value;
    }
    data.labels[s] = static_cast<int>(label);
    data.targets[s] = target;
  }
  return data;
}

Dataset load_csv_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset '" + path + "' is empty");
  const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < 2) throw ConfigError("dataset needs at least one feature column and a label column");

  Dataset data;
  data.features = columns - 1;
  int max_label = -1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        if (col < data.features) {
          data.x.push_back(std::stod(cell));
        } else if (col == data.features) {
          std::size_t used = 0;
          const int label = std::stoi(cell, &used);
          if (label < 0) throw ConfigError("negative label");
          data.labels.push_back(label);
          data.targets.push_back(static_cast<double>(label));
          max_label = std::max(max_label, label);
        }
      } catch (const std::logic_error&) {
        throw ConfigError("dataset '" + path + "' line " + std::to_string(line_no) + ": bad value '" + cell + "'");
      }
      ++col;
    }
    if (col != columns) {
      throw ConfigError("dataset '" + path + "' line " + std::to_string(line_no) + ": expected " +
                        std::to_string(columns) + " columns");
    }
  }
  if (data.labels.empty()) throw ConfigError("dataset '" + path + "' has no rows");
  data.classes = static_cast<std::size_t>(max_label) + 1;
  return data;
}

Shards make_partition(std::span<const int> labels, std::size_t classes, std::size_t workers, Partition mode) {
  if (labels.empty()) throw ConfigError("cannot partition an empty dataset");
  if (workers == 0) throw ConfigError("worker count must be at least 1");
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= classes) throw ConfigError("label outside [0, classes)");
  }
  if (mode == Partition::Identical) {
    std::vector<std::size_t> all(labels.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return Shards(workers, all);
  }
  if (workers > classes) {
    throw ConfigError("non-identical partition needs N <= class count (N = " + std::to_string(workers) +
                      ", classes = " + std::to_string(classes) + ")");
  }
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });

  std::vector<std::size_t> owner(classes);
  const std::size_t base = classes / workers;
  const std::size_t extra = classes % workers;
  std::size_t next_class = 0;
  for (std::size_t i = 0; i < workers; ++i) {
    const std::size_t count = base + (i < extra ? 1 : 0);
    for (std::size_t c = 0; c < count; ++c) owner[next_class++] = i;
  }
  Shards shards(workers);
  for (std::size_t s : order) shards[owner[static_cast<std::size_t>(labels[s])]].push_back(s);
  for (std::size_t i = 0; i < workers; ++i) {
    if (shards[i].empty()) throw ConfigError("worker " + std::to_string(i) + " received no samples");
  }
  return shards;
}

Shards make_partition(const Dataset& data, std::size_t workers, Partition mode) {
  return make_partition(data.labels, data.classes, workers, mode);
}

namespace {

void check_shards(const Dataset& data, const Shards& shards) {
  if (shards.empty()) throw ConfigError("need at least one shard");
  for (const auto& shard : shards) {
    if (shard.empty()) throw ConfigError("empty shard");
    for (std::size_t s : shard) {
      if (s >= data.size()) throw ConfigError("shard index out of range");
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------

PartitionedLeastSquares::PartitionedLeastSquares(Dataset data, Shards shards, double sigma)
    : Problem(sigma), data_(std::move(data)), shards_(std::move(shards)) {
  check_shards(data_, shards_);
  const std::size_t d = dimension();
  Eigen::MatrixXd h_avg = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  Eigen::VectorXd r_avg = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  Eigen::VectorXd a(static_cast<Eigen::Index>(d));
  for (const auto& shard : shards_) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    for (std::size_t s : shard) {
      const auto row = data_.row(s);
      for (std::size_t c = 0; c < data_.features; ++c) a[static_cast<Eigen::Index>(c)] = row[c];
      a[static_cast<Eigen::Index>(data_.features)] = 1.0;
      h.noalias() += a * a.transpose();
      r += data_.targets[s] * a;
    }
    h /= static_cast<double>(shard.size());
    r /= static_cast<double>(shard.size());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
    lipschitz_ = std::max(lipschitz_, eig.eigenvalues().maxCoeff());
    h_avg += h;
    r_avg += r;
  }
  h_avg /= static_cast<double>(shards_.size());
  r_avg /= static_cast<double>(shards_.size());
  const Eigen::VectorXd solution = h_avg.ldlt().solve(r_avg);
  optimum_ = ModelVector(std::vector<double>(solution.data(), solution.data() + solution.size()));
  optimal_loss_ = loss(optimum_);
}

double PartitionedLeastSquares::residual(std::size_t s, const ModelVector& x) const {
  const auto row = data_.row(s);
  double pred = x[data_.features];
  for (std::size_t c = 0; c < data_.features; ++c) pred += x[c] * row[c];
  return pred - data_.targets[s];
}

void PartitionedLeastSquares::add_sample_gradient(std::size_t s, const ModelVector& x, double weight,
                                                  ModelVector& g) const {
  const double r = weight * residual(s, x);
  const auto row = data_.row(s);
  for (std::size_t c = 0; c < data_.features; ++c) g[c] += r * row[c];
  g[data_.features] += r;
}

double PartitionedLeastSquares::local_loss(std::size_t worker, const ModelVector& x) const {
  check_worker(worker);
  check_point(x);
  double sum = 0.0;
  for (std::size_t s : shards_[worker]) {
    const double r = residual(s, x);
    sum += r * r;
  }
  return 0.5 * sum / static_cast<double>(shards_[worker].size());
}

ModelVector PartitionedLeastSquares::full_gradient(std::size_t worker, const ModelVector& x) const {
  check_worker(worker);
  check_point(x);
  ModelVector g(dimension());
  const double weight = 1.0 / static_cast<double>(shards_[worker].size());
  for (std::size_t s : shards_[worker]) add_sample_gradient(s, x, weight, g);
  return g;
}

ModelVector PartitionedLeastSquares::sample_gradient(std::size_t worker, const ModelVector& x, const DrawKey& key,
                                                     std::uint32_t draw) const {
  const auto& shard = shards_[worker];
  ModelVector g(dimension());
  add_sample_gradient(shard[key.index(draw, shard.size())], x, 1.0, g);
  return g;
}

// ---------------------------------------------------------------------------

PartitionedLogistic::PartitionedLogistic(Dataset data, Shards shards, double sigma, double l2)
    : Problem(sigma), data_(std::move(data)), shards_(std::move(shards)), l2_(l2) {
  check_shards(data_, shards_);
  if (data_.classes < 2) throw ConfigError("logistic regression needs at least two classes");
  if (!(l2 >= 0.0)) throw ConfigError("l2 must be non-negative");
  std::vector<ModelVector> points;
  points.emplace_back(dimension());
  for (std::uint64_t p = 0; p < 3; ++p) {
    ModelVector x(dimension());
    const DrawKey key{data_.size(), kPowerIterationStream, 1000 + p};
    for (std::size_t c = 0; c < x.size(); ++c) x[c] = 0.5 * key.normal(static_cast<std::uint32_t>(c));
    points.push_back(std::move(x));
  }
  smoothness_ = Smoothness{estimate_lipschitz(*this, points), true};
}

namespace {

// logits of sample row `row` into `z`; returns log-sum-exp.
double logits(std::span<const double> row, std::size_t classes, const ModelVector& x, std::vector<double>& z) {
  const std::size_t stride = row.size() + 1;
  z.resize(classes);
  double zmax = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < classes; ++m) {
    double v = x[m * stride + row.size()];
    for (std::size_t c = 0; c < row.size(); ++c) v += x[m * stride + c] * row[c];
    z[m] = v;
    zmax = std::max(zmax, v);
  }
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - zmax);
  return zmax + std::log(sum);
}

}  // namespace

double PartitionedLogistic::sample_loss(std::size_t s, const ModelVector& x) const {
  std::vector<double> z;
  const double lse = logits(data_.row(s), data_.classes, x, z);
  return lse - z[static_cast<std::size_t>(data_.labels[s])];
}

void PartitionedLogistic::add_sample_gradient(std::size_t s, const ModelVector& x, double weight,
                                              ModelVector& g) const {
  std::vector<double> z;
  const auto row = data_.row(s);
  const double lse = logits(row, data_.classes, x, z);
  const std::size_t stride = data_.features + 1;
  for (std::size_t m = 0; m < data_.classes; ++m) {
    double coeff = std::exp(z[m] - lse);
    if (static_cast<int>(m) == data_.labels[s]) coeff -= 1.0;
    coeff *= weight;
    for (std::size_t c = 0; c < data_.features; ++c) g[m * stride + c] += coeff * row[c];
    g[m * stride + data_.features] += coeff;
  }
}

double PartitionedLogistic::local_loss(std::size_t worker, const ModelVector& x) const {
  check_worker(worker);
  check_point(x);
  double sum = 0.0;
  for (std::size_t s : shards_[worker]) sum += sample_loss(s, x);
  return sum / static_cast<double>(shards_[worker].size()) + 0.5 * l2_ * squared_norm(x);
}

ModelVector PartitionedLogistic::full_gradient(std::size_t worker, const ModelVector& x) const {
  check_worker(worker);
  check_point(x);
  ModelVector g(dimension());
  const double weight = 1.0 / static_cast<double>(shards_[worker].size());
  for (std::size_t s : shards_[worker]) add_sample_gradient(s, x, weight, g);
  axpy_inplace(l2_, x, g);
  return g;
}

ModelVector PartitionedLogistic::sample_gradient(std::size_t worker, const ModelVector& x, const DrawKey& key,
                                                 std::uint32_t draw) const {
  const auto& shard = shards_[worker];
  ModelVector g(dimension());
  add_sample_gradient(shard[key.index(draw, shard.size())], x, 1.0, g);
  axpy_inplace(l2_, x, g);
  return g;
}

// ---------------------------------------------------------------------------

double estimate_lipschitz(const Problem& p, std::span<const ModelVector> points, int iterations, std::uint64_t seed) {
  const std::size_t d = p.dimension();
  double best = 0.0;
  for (std::size_t i = 0; i < p.worker_count(); ++i) {
    for (std::size_t k = 0; k < points.size(); ++k) {
      const ModelVector& x = points[k];
      const DrawKey key{seed, kPowerIterationStream, i * points.size() + k};
      ModelVector v(d);
      for (std::size_t c = 0; c < d; ++c) v[c] = key.normal(static_cast<std::uint32_t>(c));
      double lambda = 0.0;
      for (int it = 0; it < iterations; ++it) {
        const double vn = norm(v);
        if (vn == 0.0) break;
        v = vec_scale(1.0 / vn, v);
        const double h = 1e-5 * (1.0 + norm(x));
        const ModelVector gp = p.full_gradient(i, vec_axpy(h, v, x));
        const ModelVector gm = p.full_gradient(i, vec_axpy(-h, v, x));
        ModelVector hv = vec_scale(0.5 / h, vec_sub(gp, gm));
        lambda = norm(hv);
        v = std::move(hv);
      }
      best = std::max(best, lambda);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Problem> make_problem(const ProblemConfig& cfg, std::size_t workers, Partition partition) {
  if (cfg.kind == "quad") {
    if (workers != 2) throw ConfigError("problem 'quad' is defined for exactly 2 workers");
    return std::make_unique<QuadraticPairProblem>(cfg.b_param, cfg.sigma);
  }
  if (cfg.kind == "quadratic") {
    return std::make_unique<SeparableQuadraticProblem>(
        SeparableQuadraticProblem::random(workers, cfg.dim, cfg.b_param, partition, cfg.data_seed, cfg.sigma));
  }
  if (cfg.kind == "least_squares" || cfg.kind == "logistic") {
    Dataset data = cfg.csv.empty() ? make_cluster_dataset(cfg.samples, cfg.dim, cfg.classes, cfg.data_seed)
                                   : load_csv_dataset(cfg.csv);
    Shards shards = make_partition(data, workers, partition);
    if (cfg.kind == "least_squares") {
      return std::make_unique<PartitionedLeastSquares>(std::move(data), std::move(shards), cfg.sigma);
    }
    return std::make_unique<PartitionedLogistic>(std::move(data), std::move(shards), cfg.sigma, cfg.l2);
  }
  throw ConfigError("unknown problem kind '" + cfg.kind + "'");
}

}  // namespace localsgd_lab
