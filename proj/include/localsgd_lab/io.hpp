#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "localsgd_lab/simulator.hpp"

namespace localsgd_lab {

/// Column order of trace.csv.
inline constexpr std::string_view kTraceHeader =
    "t,epoch,loss,grad_norm_sq,drift,v_variance,delta_residual,dist_to_opt";

/// Config file schema: the RunConfig fields at top level plus a nested
/// "problem" object. Missing keys keep their defaults; unknown keys are an
/// error so typos do not pass silently.
ExperimentConfig config_from_json(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every field written explicitly, including the effective EASGD alpha.
std::string config_to_json(const ExperimentConfig& cfg);

/// Reals printed with 17 significant digits; dist_to_opt is empty when the
/// optimum is unknown.
std::string trace_to_csv(const MetricTrace& trace);
MetricTrace trace_from_csv(std::string_view text);

/// Keys: algorithm, final_loss, final_grad_norm_sq, final_dist_to_opt,
/// diverged, syncs, grad_evals, wall_ms, easgd_alpha (plus
/// divergence_reason when diverged).
std::string summary_to_json(const RunResult& result, const Problem& p);

/// Writes trace.csv, summary.json and config.json into `dir`, creating it.
/// Throws std::runtime_error when the directory is not writable.
void write_run_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg, const RunResult& result,
                       const Problem& p);

std::string format_real(double v);

}  // namespace localsgd_lab
