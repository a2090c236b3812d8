#pragma once

#include <string>
#include <vector>

#include "localsgd_lab/core.hpp"
#include "localsgd_lab/objectives.hpp"
#include "localsgd_lab/simulator.hpp"

namespace localsgd_lab {

struct IdentityCheck {
  std::string name;
  /// Worst observed deviation (0 for bit-exact agreement).
  double worst = 0.0;
  /// Tolerance; 0 means bit-exact.
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

/// Runs on which the identity checks are evaluated.
struct VerifyCase {
  std::size_t workers;
  std::uint64_t k;
  std::size_t dim;
  double sigma;
};

/// The identity matrix: quick uses N in {2, 4}, k in {1, 5}, d in {1, 8},
/// sigma in {0, 0.5}; full uses N in {2, 4, 8}, k in {1, 5, 20}.
std::vector<VerifyCase> verify_matrix(bool quick);

/// Non-identical random quadratic used by the identity checks.
SeparableQuadraticProblem verify_problem(const VerifyCase& c, std::uint64_t seed = 11);

/// Bitwise comparison of two doubles (distinguishes -0.0 from 0.0).
bool bit_identical(double a, double b);
bool bit_identical(const ModelVector& a, const ModelVector& b);
/// True when the two recorded trajectories agree bit for bit.
bool bit_identical(const std::vector<std::vector<ModelVector>>& a, const std::vector<std::vector<ModelVector>>& b);
/// Largest element-wise difference between two recorded trajectories.
double trajectory_gap(const std::vector<std::vector<ModelVector>>& a, const std::vector<std::vector<ModelVector>>& b);

/// The seven algebraic identities of the variance-reduced method:
/// correction sum, averaged-model recursion, the two direct-sum
/// representations and the three equivalences.
std::vector<IdentityCheck> run_identity_checks(bool quick);

/// Engine against the reference implementation for every algorithm.
std::vector<IdentityCheck> run_oracle_checks(bool quick);

}  // namespace localsgd_lab
