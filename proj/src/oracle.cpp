#include "localsgd_lab/oracle.hpp"

#include <cmath>

namespace localsgd_lab {

OracleTrajectory oracle_run(const RunConfig& cfg, const Problem& p) {
  cfg.validate();
  const std::size_t n = cfg.workers;
  const std::size_t d = p.dimension();
  const std::uint64_t T = cfg.iterations;
  if (p.worker_count() != n) throw ConfigError("oracle: worker count mismatch");
  if (n > kOracleMaxWorkers || d > kOracleMaxDimension || T > kOracleMaxIterations) {
    throw ConfigError("oracle: instance too large (N <= 4, d <= 8, T <= 1e5)");
  }

  std::vector<ModelVector> x(n, ModelVector(d, cfg.x0));
  ModelVector center(d, cfg.x0);
  ModelVector x_hat(d, cfg.x0);

  OracleTrajectory out;
  out.x.push_back(x);
  out.x_hat.push_back(vec_mean(x));

  // gradients of the period in progress and of the one before it: [step][worker]
  std::vector<std::vector<ModelVector>> this_period;
  std::vector<std::vector<ModelVector>> last_period;

  for (std::uint64_t t = 0; t < T; ++t) {
    if (cfg.algorithm == Algorithm::SSGD) {
      std::vector<ModelVector> g;
      for (std::size_t i = 0; i < n; ++i) {
        g.push_back(p.stochastic_gradient(i, x_hat, DrawKey{cfg.seed, static_cast<std::uint32_t>(i), t},
                                          cfg.batch_size));
      }
      const ModelVector gbar = vec_mean(g);
      for (std::size_t c = 0; c < d; ++c) x_hat[c] -= cfg.gamma * gbar[c];
      for (std::size_t i = 0; i < n; ++i) x[i] = x_hat;
      out.x.push_back(x);
      out.x_hat.push_back(vec_mean(x));
      continue;
    }

    std::vector<ModelVector> grads;
    for (std::size_t i = 0; i < n; ++i) {
      ModelVector g =
          p.stochastic_gradient(i, x[i], DrawKey{cfg.seed, static_cast<std::uint32_t>(i), t}, cfg.batch_size);
      ModelVector v = g;
      if (cfg.algorithm == Algorithm::VRLSGD && !last_period.empty()) {
        // v = g - (1/k) sum own previous + (1/(N k)) sum all previous
        const double len = static_cast<double>(last_period.size());
        ModelVector own(d);
        ModelVector all(d);
        for (const auto& step : last_period) {
          for (std::size_t c = 0; c < d; ++c) own[c] += step[i][c];
          for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t c = 0; c < d; ++c) all[c] += step[j][c];
          }
        }
        for (std::size_t c = 0; c < d; ++c) v[c] = g[c] - own[c] / len + all[c] / (static_cast<double>(n) * len);
      }
      for (std::size_t c = 0; c < d; ++c) x[i][c] -= cfg.gamma * v[c];
      grads.push_back(std::move(g));
    }
    this_period.push_back(std::move(grads));

    const std::uint64_t now = t + 1;
    bool sync = now == T;
    if (cfg.warm_up) {
      sync = sync || now == 1 || (now > 1 && (now - 1) % cfg.k == 0);
    } else {
      sync = sync || now % cfg.k == 0;
    }
    if (sync) {
      if (cfg.algorithm == Algorithm::EASGD) {
        const double alpha = cfg.effective_easgd_alpha();
        ModelVector pull(d);
        for (std::size_t i = 0; i < n; ++i) {
          const ModelVector diff = vec_sub(x[i], center);
          for (std::size_t c = 0; c < d; ++c) pull[c] += 1.0 * diff[c];
          for (std::size_t c = 0; c < d; ++c) x[i][c] += -alpha * diff[c];
        }
        for (std::size_t c = 0; c < d; ++c) center[c] += alpha * pull[c];
      } else {
        const ModelVector avg = vec_mean(x);
        for (std::size_t i = 0; i < n; ++i) x[i] = avg;
      }
      last_period = std::move(this_period);
      this_period.clear();
    }
    out.x.push_back(x);
    out.x_hat.push_back(vec_mean(x));
  }
  return out;
}

namespace {

struct AffineMaps {
  double a1, m1, a2, m2;
};

AffineMaps pair_maps(double b, std::uint64_t steps, double gamma) {
  const double r1 = 1.0 - 2.0 * gamma;
  const double r2 = 1.0 - 4.0 * gamma;
  if (!(std::abs(r1) < 1.0) || !(std::abs(r2) < 1.0)) {
    throw std::domain_error("localsgd_fixed_point: period map is not contractive (need 0 < gamma < 1/2)");
  }
  return {std::pow(r1, static_cast<double>(steps)), -2.0 * b, std::pow(r2, static_cast<double>(steps)), b};
}

}  // namespace

double localsgd_fixed_point(double b_param, std::uint64_t k, double gamma) {
  if (k < 1) throw std::domain_error("localsgd_fixed_point: k must be >= 1");
  const auto m = pair_maps(b_param, k, gamma);
  // x = ((a1 + a2) x + (1 - a1) m1 + (1 - a2) m2) / 2
  return ((1.0 - m.a1) * m.m1 + (1.0 - m.a2) * m.m2) / (2.0 - m.a1 - m.a2);
}

double localsgd_limit_v_variance(double b_param, std::uint64_t k, double gamma) {
  const double start = localsgd_fixed_point(b_param, k, gamma);
  // gradients of the final local step are taken after k - 1 steps
  const auto m = pair_maps(b_param, k - 1, gamma);
  const double x1 = m.m1 + m.a1 * (start - m.m1);
  const double x2 = m.m2 + m.a2 * (start - m.m2);
  const double g1 = 2.0 * (x1 + 2.0 * b_param);
  const double g2 = 4.0 * (x2 - b_param);
  const double half_gap = 0.5 * (g1 - g2);
  return half_gap * half_gap;
}

}  // namespace localsgd_lab
