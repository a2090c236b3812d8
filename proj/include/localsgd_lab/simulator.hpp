#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "localsgd_lab/core.hpp"
#include "localsgd_lab/metrics.hpp"
#include "localsgd_lab/objectives.hpp"
#include "localsgd_lab/state.hpp"

namespace localsgd_lab {

/// Execution knobs that never change the arithmetic of a run.
struct RunOptions {
  /// Worker threads between barriers; 0 picks the hardware concurrency.
  std::size_t threads = 1;
  /// Keep one period of gradient history and check the algebraic
  /// identities at every step and synchronization.
  bool diagnostic = false;
  /// Record every worker's model after every iteration.
  bool record_trajectory = false;
  /// VRL-SGD only: keep every correction term at zero.
  bool force_zero_delta = false;
};

/// Worst-case residuals of the identities checked in diagnostic mode.
struct Diagnostics {
  /// max over syncs of |sum_i delta_i|_inf
  double max_delta_sum = 0.0;
  /// max over steps of |x_hat^t - (x_hat^{t-1} - gamma mean_i g_i^{t-1})|_inf
  double max_averaged_update_residual = 0.0;
  /// max over syncs of |recursive delta_i - direct-sum delta_i|_inf
  double max_delta_direct_diff = 0.0;
  /// max over steps of |v_i - direct-sum v_i|_inf
  double max_v_direct_diff = 0.0;
  /// first-period heterogeneity constant C
  std::optional<double> c_constant;
  std::uint64_t steps_checked = 0;
  std::uint64_t syncs_checked = 0;
};

struct RunResult {
  RunConfig config;
  GlobalState final_state;
  MetricTrace trace;
  double wall_ms = 0.0;
  bool diverged = false;
  std::string divergence_reason;
  std::optional<Diagnostics> diagnostics;
  /// trajectory[t][i] = x_i after iteration t (after any synchronization at t).
  std::vector<std::vector<ModelVector>> trajectory;
};

/// Loss above this, or any non-finite model entry, aborts a run as diverged.
inline constexpr double kDivergenceLoss = 1e12;

/// Executes cfg.iterations local iterations per worker. Periods follow
/// SyncSchedule, the last period is closed by a forced synchronization,
/// and metrics are sampled at every sync point plus every
/// cfg.effective_sample_every() iterations. Deterministic in (cfg, p) and
/// independent of options.threads.
RunResult run(const RunConfig& cfg, const Problem& p, const RunOptions& options = {});

/// Iterations that make one pass over the data: n / (N b). Problems without
/// data count one iteration as one epoch.
double iterations_per_epoch(const RunConfig& cfg, const Problem& p);

/// Worker thread count for `options`, capped by the worker count.
std::size_t resolve_threads(std::size_t requested, std::size_t workers);

// ---------------------------------------------------------------------------

struct ExperimentConfig {
  RunConfig run;
  ProblemConfig problem;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

enum class SweepAxis { K, Gamma, Workers, BParam, BatchSize, Algorithm };

SweepAxis parse_sweep_axis(std::string_view name);
std::string_view to_string(SweepAxis axis);

/// `base` with one axis set to `value`. Switching the algorithm to ssgd also
/// sets k = 1.
ExperimentConfig apply_axis(const ExperimentConfig& base, SweepAxis axis, std::string_view value);

struct SweepPoint {
  std::string value;
  ExperimentConfig config;
  RunResult result;
};

/// One run per value, all sharing the base seed.
std::vector<SweepPoint> sweep(const ExperimentConfig& base, SweepAxis axis, std::span<const std::string> values,
                              const RunOptions& options = {});

// ---------------------------------------------------------------------------

struct ConditionCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  /// nullopt when the condition cannot be evaluated (e.g. sigma = 0).
  std::optional<bool> pass;
};

/// Step-size and period conditions of the convergence theorem together with
/// the corollary's suggested schedule. Advisory only.
struct HyperparamReport {
  std::size_t workers = 0;
  std::uint64_t iterations = 0;
  std::uint64_t k = 0;
  double gamma = 0.0;
  std::size_t batch_size = 1;
  Smoothness smoothness;
  double sigma = 0.0;
  std::vector<ConditionCheck> conditions;
  /// sqrt(b N) / (sigma sqrt(T)); needs sigma > 0 and T > 0.
  std::optional<double> suggested_gamma;
  /// max(1, floor(sqrt(T) / N^{3/2})).
  std::uint64_t suggested_k = 1;
  /// T^{1/4} / N^{3/4}, the period bound plain Local SGD is limited to.
  double local_sgd_k_bound = 0.0;

  bool all_pass() const;
  std::string render() const;
};

HyperparamReport check_hyperparams(const RunConfig& cfg, Smoothness smoothness, double sigma);
/// Uses the problem's analytic smoothness or, failing that, a power-iteration
/// estimate at x0.
HyperparamReport check_hyperparams(const RunConfig& cfg, const Problem& p);

}  // namespace localsgd_lab
