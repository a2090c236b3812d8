#include "localsgd_lab/verify.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <utility>

#include "localsgd_lab/optimizers.hpp"
#include "localsgd_lab/oracle.hpp"

namespace localsgd_lab {

namespace {

constexpr double kGamma = 0.01;

std::string describe(const VerifyCase& c) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "N=%zu k=%llu d=%zu sigma=%g", c.workers, static_cast<unsigned long long>(c.k),
                c.dim, c.sigma);
  return buf;
}

RunConfig base_config(const VerifyCase& c, Algorithm algorithm, std::uint64_t iterations) {
  RunConfig cfg;
  cfg.algorithm = algorithm;
  cfg.gamma = kGamma;
  cfg.k = algorithm == Algorithm::SSGD ? 1 : c.k;
  cfg.workers = c.workers;
  cfg.iterations = iterations;
  cfg.seed = 2024;
  cfg.x0 = 0.5;
  cfg.sample_every = iterations;
  return cfg;
}

IdentityCheck make_check(std::string name, double tolerance) {
  IdentityCheck check;
  check.name = std::move(name);
  check.tolerance = tolerance;
  return check;
}

/// Folds a worst-case value into a check, remembering which case produced it.
void record(IdentityCheck& check, double value, const VerifyCase& c) {
  if (std::isnan(value)) value = std::numeric_limits<double>::infinity();
  if (value >= check.worst) {
    check.worst = value;
    check.detail = "worst at " + describe(c);
  }
}

void finalize(IdentityCheck& check, bool bitwise_ok = true) {
  check.pass = check.tolerance == 0.0 ? bitwise_ok : check.worst <= check.tolerance;
}

}  // namespace

std::vector<VerifyCase> verify_matrix(bool quick) {
  const std::vector<std::size_t> workers = quick ? std::vector<std::size_t>{2, 4} : std::vector<std::size_t>{2, 4, 8};
  const std::vector<std::uint64_t> periods = quick ? std::vector<std::uint64_t>{1, 5} : std::vector<std::uint64_t>{1, 5, 20};
  std::vector<VerifyCase> cases;
  for (std::size_t n : workers) {
    for (std::uint64_t k : periods) {
      for (std::size_t d : {std::size_t{1}, std::size_t{8}}) {
        for (double sigma : {0.0, 0.5}) cases.push_back({n, k, d, sigma});
      }
    }
  }
  return cases;
}

SeparableQuadraticProblem verify_problem(const VerifyCase& c, std::uint64_t seed) {
  return SeparableQuadraticProblem::random(c.workers, c.dim, 2.0, Partition::NonIdentical, seed, c.sigma);
}

bool bit_identical(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

bool bit_identical(const ModelVector& a, const ModelVector& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t c = 0; c < a.size(); ++c) {
    if (!bit_identical(a[c], b[c])) return false;
  }
  return true;
}

bool bit_identical(const std::vector<std::vector<ModelVector>>& a, const std::vector<std::vector<ModelVector>>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t].size() != b[t].size()) return false;
    for (std::size_t i = 0; i < a[t].size(); ++i) {
      if (!bit_identical(a[t][i], b[t][i])) return false;
    }
  }
  return true;
}

double trajectory_gap(const std::vector<std::vector<ModelVector>>& a, const std::vector<std::vector<ModelVector>>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t].size() != b[t].size()) return std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < a[t].size(); ++i) worst = std::max(worst, max_abs_diff(a[t][i], b[t][i]));
  }
  return worst;
}

std::vector<IdentityCheck> run_identity_checks(bool quick) {
  const std::uint64_t iterations = quick ? 300 : 1000;
  IdentityCheck delta_sum = make_check("correction terms sum to zero at every sync", 1e-10);
  IdentityCheck averaged = make_check("averaged model follows the generalized SGD recursion", 1e-12);
  IdentityCheck delta_repr = make_check("recursive correction equals its direct-sum form", 1e-9);
  IdentityCheck v_repr = make_check("gradient approximation equals its direct-sum form", 1e-9);
  IdentityCheck k1 = make_check("vrlsgd with k=1 reproduces ssgd (bit-exact)", 0.0);
  IdentityCheck zero = make_check("vrlsgd with zero corrections reproduces localsgd (bit-exact)", 0.0);
  IdentityCheck warm = make_check("warm-up by short first period equals direct initialization (bit-exact)", 0.0);
  bool k1_bits = true;
  bool zero_bits = true;
  bool warm_bits = true;

  RunOptions diag;
  diag.diagnostic = true;
  RunOptions traj;
  traj.record_trajectory = true;

  for (const auto& c : verify_matrix(quick)) {
    const auto problem = verify_problem(c);
    const RunConfig vrl = base_config(c, Algorithm::VRLSGD, iterations);

    const RunResult checked = run(vrl, problem, diag);
    const Diagnostics& d = *checked.diagnostics;
    record(delta_sum, d.max_delta_sum, c);
    record(averaged, d.max_averaged_update_residual, c);
    record(delta_repr, d.max_delta_direct_diff, c);
    record(v_repr, d.max_v_direct_diff, c);

    if (c.k == 1) {
      const RunResult a = run(vrl, problem, traj);
      const RunResult b = run(base_config(c, Algorithm::SSGD, iterations), problem, traj);
      record(k1, trajectory_gap(a.trajectory, b.trajectory), c);
      k1_bits = k1_bits && bit_identical(a.trajectory, b.trajectory);
    } else {
      RunOptions forced = traj;
      forced.force_zero_delta = true;
      const RunResult a = run(vrl, problem, forced);
      const RunResult b = run(base_config(c, Algorithm::LocalSGD, iterations), problem, traj);
      record(zero, trajectory_gap(a.trajectory, b.trajectory), c);
      zero_bits = zero_bits && bit_identical(a.trajectory, b.trajectory);

      RunConfig warm_cfg = vrl;
      warm_cfg.warm_up = true;
      GlobalState pa = GlobalState::initial(ModelVector(c.dim, vrl.x0), c.workers, vrl.seed);
      GlobalState pb = pa;
      warm_up_init(pa, problem, warm_cfg, WarmUpPath::ShortFirstPeriod);
      warm_up_init(pb, problem, warm_cfg, WarmUpPath::DirectInit);
      double gap = max_abs_diff(pa.x_hat, pb.x_hat);
      bool same = bit_identical(pa.x_hat, pb.x_hat);
      for (std::size_t i = 0; i < c.workers; ++i) {
        gap = std::max({gap, max_abs_diff(pa.workers[i].x, pb.workers[i].x),
                        max_abs_diff(pa.workers[i].delta, pb.workers[i].delta)});
        same = same && bit_identical(pa.workers[i].x, pb.workers[i].x) &&
               bit_identical(pa.workers[i].delta, pb.workers[i].delta);
      }
      record(warm, gap, c);
      warm_bits = warm_bits && same;
    }
  }
  finalize(delta_sum);
  finalize(averaged);
  finalize(delta_repr);
  finalize(v_repr);
  finalize(k1, k1_bits);
  finalize(zero, zero_bits);
  finalize(warm, warm_bits);
  return {delta_sum, averaged, delta_repr, v_repr, k1, zero, warm};
}

std::vector<IdentityCheck> run_oracle_checks(bool quick) {
  const std::uint64_t iterations = 1000;
  std::vector<IdentityCheck> checks;
  for (Algorithm algorithm : {Algorithm::SSGD, Algorithm::LocalSGD, Algorithm::EASGD, Algorithm::VRLSGD}) {
    const bool exact = algorithm != Algorithm::VRLSGD;
    IdentityCheck check = make_check(
        "oracle agrees with engine: " + std::string(to_string(algorithm)) + (exact ? " (bit-exact)" : ""),
        exact ? 0.0 : 1e-9);
    bool bits = true;
    for (const auto& c : verify_matrix(true)) {
      if (quick && c.dim != 1) continue;
      if (algorithm == Algorithm::SSGD && c.k != 1) continue;
      for (bool warm_up : {false, true}) {
        const auto problem = verify_problem(c);
        RunConfig cfg = base_config(c, algorithm, iterations);
        cfg.warm_up = warm_up;
        RunOptions options;
        options.record_trajectory = true;
        const RunResult engine = run(cfg, problem, options);
        const OracleTrajectory oracle = oracle_run(cfg, problem);
        record(check, trajectory_gap(engine.trajectory, oracle.x), c);
        bits = bits && bit_identical(engine.trajectory, oracle.x);
      }
    }
    finalize(check, bits);
    checks.push_back(check);
  }
  return checks;
}

}  // namespace localsgd_lab
