#pragma once

#include <cstdint>
#include <vector>

#include "localsgd_lab/core.hpp"
#include "localsgd_lab/objectives.hpp"

namespace localsgd_lab {

/// Full state history of a reference run.
struct OracleTrajectory {
  /// x[t][i]: worker i's model after iteration t, after any synchronization
  /// at t. x[0] is the initial state.
  std::vector<std::vector<ModelVector>> x;
  /// x_hat[t]: mean of x[t].
  std::vector<ModelVector> x_hat;
};

/// Instance limits of the reference implementation.
inline constexpr std::size_t kOracleMaxWorkers = 4;
inline constexpr std::size_t kOracleMaxDimension = 8;
inline constexpr std::uint64_t kOracleMaxIterations = 100000;

/// Straight-line, single-threaded re-derivation of the chosen algorithm.
/// VRL-SGD is evaluated from the direct-sum forms: the gradient
/// approximation is rebuilt from the previous period's gradients at every
/// step and no correction term is carried between periods. Shares only the
/// problem, the random streams and vec_mean with the engine.
OracleTrajectory oracle_run(const RunConfig& cfg, const Problem& p);

/// Limit of Local SGD's post-sync average on the two-worker quadratic with
/// sigma = 0. Worker i's k local steps are the affine map
/// x -> a_i x + (1 - a_i) m_i with a_1 = (1 - 2 gamma)^k, m_1 = -2b and
/// a_2 = (1 - 4 gamma)^k, m_2 = b; averaging them gives a contraction whose
/// fixed point is returned. The value is signed (negative for b > 0).
double localsgd_fixed_point(double b_param, std::uint64_t k, double gamma);

/// Variance among the two workers' gradients on the last local step of a
/// period once Local SGD has reached its periodic orbit (sigma = 0).
double localsgd_limit_v_variance(double b_param, std::uint64_t k, double gamma);

}  // namespace localsgd_lab
