#include "localsgd_lab/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace localsgd_lab {

double grad_norm_sq(const Problem& p, const ModelVector& x_hat) {
  return squared_norm(p.average_gradient(x_hat));
}

double worker_drift(const GlobalState& state) {
  if (state.workers.empty()) throw std::invalid_argument("worker_drift: no workers");
  const ModelVector mean = state.average_model();
  double sum = 0.0;
  for (const auto& w : state.workers) sum += squared_norm(vec_sub(w.x, mean));
  return sum / static_cast<double>(state.workers.size());
}

double v_variance(std::span<const ModelVector> vs) {
  const ModelVector mean = vec_mean(vs);
  double sum = 0.0;
  for (const auto& v : vs) sum += squared_norm(vec_sub(v, mean));
  return sum / static_cast<double>(vs.size());
}

double delta_residual(const GlobalState& state) {
  if (state.workers.empty()) return 0.0;
  ModelVector sum(state.workers.front().delta.size());
  for (const auto& w : state.workers) axpy_inplace(1.0, w.delta, sum);
  return max_abs(sum);
}

double c_constant(const Problem& p, std::span<const ModelVector> first_period) {
  if (first_period.empty()) throw std::invalid_argument("c_constant: first-period history missing");
  const std::size_t n = p.worker_count();
  const std::size_t d = p.dimension();
  std::vector<ModelVector> running(n, ModelVector(d));
  double total = 0.0;
  // Term t uses the partial sums over tau < t, so the t = 0 term is zero.
  for (std::size_t t = 0; t < first_period.size(); ++t) {
    for (const auto& s : running) total += squared_norm(s);
    if (t + 1 == first_period.size()) break;
    const ModelVector& x = first_period[t];
    std::vector<ModelVector> local;
    local.reserve(n);
    for (std::size_t i = 0; i < n; ++i) local.push_back(p.full_gradient(i, x));
    const ModelVector global = vec_mean(local);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < d; ++c) running[i][c] += local[i][c] - global[c];
    }
  }
  return total / static_cast<double>(n);
}

}  // namespace localsgd_lab
