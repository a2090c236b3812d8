#pragma once

#include <cstdint>
#include <vector>

#include "localsgd_lab/core.hpp"
#include "localsgd_lab/objectives.hpp"
#include "localsgd_lab/state.hpp"

namespace localsgd_lab {

/// Gradients of every worker at one iteration, indexed by worker id.
using StepGradients = std::vector<ModelVector>;
/// Gradients of one communication period, indexed by step within the period.
using PeriodGradients = std::vector<StepGradients>;

// ---- worker-local steps --------------------------------------------------
// Each step draws its stochastic gradient from the worker's stream at
// iteration t, updates the local model, records the direction it used in
// `w.last_v` and returns the raw stochastic gradient. A non-finite gradient
// raises NumericalError.

/// v = g - delta; x <- x - gamma v.
ModelVector vrl_local_step(WorkerState& w, const Problem& p, const RunConfig& cfg, std::uint64_t t);

/// x <- x - gamma g. EASGD uses the same plain local step.
ModelVector local_sgd_step(WorkerState& w, const Problem& p, const RunConfig& cfg, std::uint64_t t);
inline ModelVector easgd_step(WorkerState& w, const Problem& p, const RunConfig& cfg, std::uint64_t t) {
  return local_sgd_step(w, p, cfg, t);
}

// ---- synchronizations ----------------------------------------------------
// state.t must be 0 or a sync point of `schedule`; anything else raises
// std::logic_error.

/// x_hat <- mean x_i; delta_i <- delta_i + (x_hat - x_i) / (len * gamma)
/// with len the length of the period just completed; then x_i <- x_hat.
/// The correction is computed before the local model is reset.
/// `force_zero_delta` skips the correction update, which turns the method
/// into Local SGD.
void vrl_sync(GlobalState& state, const RunConfig& cfg, const SyncSchedule& schedule, bool force_zero_delta = false);

/// x_hat <- mean x_i; x_i <- x_hat.
void local_sgd_sync(GlobalState& state, const SyncSchedule& schedule);

/// Elastic averaging against the center z, with d_i = x_i - z taken before
/// any update: x_i <- x_i - alpha d_i, z <- z + alpha sum_i d_i.
void easgd_sync(GlobalState& state, const RunConfig& cfg, const SyncSchedule& schedule);

/// One synchronous step: every worker's gradient is taken at x_hat and
/// x_hat <- x_hat - gamma * mean_i g_i. Advances state.t by one.
void ssgd_step(GlobalState& state, const Problem& p, const RunConfig& cfg);

// ---- warm-up ---------------------------------------------------------------

enum class WarmUpPath {
  /// Run the first period with length 1, then synchronize.
  ShortFirstPeriod,
  /// One S-SGD update plus delta_i = g_i - mean_j g_j at x_hat^0.
  DirectInit,
};

/// Performs the warm-up round at t = 0 and leaves the state at t = 1.
void warm_up_init(GlobalState& state, const Problem& p, const RunConfig& cfg, WarmUpPath path);

// ---- direct-sum representations -------------------------------------------

/// delta_i = (1/len) sum_tau (g_i^tau - mean_j g_j^tau) over a completed
/// period. Throws when the history does not hold `expected_length` steps.
ModelVector delta_direct(const PeriodGradients& period, std::size_t worker, std::size_t expected_length);

/// v_i = g_i - (1/len) sum_tau g_i^tau + (1/(N len)) sum_tau sum_j g_j^tau over
/// the previous period. An empty previous period gives v_i = g_i.
ModelVector v_direct(const ModelVector& current, const PeriodGradients& previous, std::size_t worker);

}  // namespace localsgd_lab
