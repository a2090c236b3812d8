#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "localsgd_lab/core.hpp"
#include "localsgd_lab/objectives.hpp"
#include "localsgd_lab/state.hpp"

namespace localsgd_lab {

/// One sampled iteration. All metrics are pure functions of the state; no
/// random draws happen here, so sampling never perturbs a trajectory.
struct MetricRow {
  std::uint64_t t = 0;
  double epoch = 0.0;
  double loss = 0.0;
  double grad_norm_sq = 0.0;
  double drift = 0.0;
  double v_variance = 0.0;
  double delta_residual = 0.0;
  std::optional<double> dist_to_opt;

  friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

using MetricTrace = std::vector<MetricRow>;

/// |grad f(x_hat)|^2 with full gradients.
double grad_norm_sq(const Problem& p, const ModelVector& x_hat);

/// (1/N) sum_i |x_i - x_hat|^2 with x_hat the mean of the local models.
double worker_drift(const GlobalState& state);

/// (1/N) sum_i |v_i - mean_j v_j|^2.
double v_variance(std::span<const ModelVector> vs);

/// |sum_i delta_i|_inf.
double delta_residual(const GlobalState& state);

/// Accumulated first-period heterogeneity
///   C = (1/N) sum_{t=0}^{k-1} sum_i | sum_{tau<t} (grad f_i(x_hat^tau) - grad f(x_hat^tau)) |^2
/// where `first_period` holds x_hat^0 .. x_hat^{k-1}. Uses full gradients.
double c_constant(const Problem& p, std::span<const ModelVector> first_period);

}  // namespace localsgd_lab
