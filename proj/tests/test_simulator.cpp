#include <gtest/gtest.h>

#include <cmath>

#include "localsgd_lab/io.hpp"
#include "localsgd_lab/oracle.hpp"
#include "localsgd_lab/simulator.hpp"

using namespace localsgd_lab;

namespace {

RunConfig pair_run(Algorithm a, std::uint64_t k, std::uint64_t t) {
  RunConfig cfg;
  cfg.algorithm = a;
  cfg.k = k;
  cfg.workers = 2;
  cfg.gamma = 0.01;
  cfg.iterations = t;
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST(Run, ZeroIterations) {
  const QuadraticPairProblem p(1.0);
  RunConfig cfg = pair_run(Algorithm::VRLSGD, 10, 0);
  cfg.x0 = 0.5;
  const RunResult r = run(cfg, p);
  EXPECT_TRUE(r.trace.empty());
  EXPECT_EQ(r.final_state.x_hat, ModelVector{0.5});
  EXPECT_EQ(r.final_state.syncs, 0u);
  EXPECT_FALSE(r.diverged);
}

TEST(Run, RepeatIsIdentical) {
  const auto p = SeparableQuadraticProblem::random(4, 3, 1.0, Partition::NonIdentical, 2, 0.5);
  RunConfig cfg;
  cfg.algorithm = Algorithm::VRLSGD;
  cfg.workers = 4;
  cfg.iterations = 300;
  cfg.seed = 5;
  EXPECT_EQ(run(cfg, p).trace, run(cfg, p).trace);
}

TEST(Run, ThreadCountDoesNotChangeTrace) {
  const auto p = SeparableQuadraticProblem::random(8, 4, 1.0, Partition::NonIdentical, 2, 0.5);
  for (Algorithm a : {Algorithm::SSGD, Algorithm::LocalSGD, Algorithm::EASGD, Algorithm::VRLSGD}) {
    RunConfig cfg;
    cfg.algorithm = a;
    cfg.k = a == Algorithm::SSGD ? 1 : 7;
    cfg.workers = 8;
    cfg.iterations = 500;
    cfg.seed = 3;
    cfg.sample_every = 3;
    RunOptions o;
    const std::string base = trace_to_csv(run(cfg, p, o).trace);
    for (std::size_t threads : {2u, 4u, 8u, 0u}) {
      o.threads = threads;
      EXPECT_EQ(trace_to_csv(run(cfg, p, o).trace), base) << to_string(a) << " threads " << threads;
    }
  }
}

TEST(Run, IterationAccounting) {
  const auto p = SeparableQuadraticProblem::random(3, 2, 1.0, Partition::NonIdentical, 2, 0.1);
  RunConfig cfg;
  cfg.algorithm = Algorithm::VRLSGD;
  cfg.workers = 3;
  cfg.k = 7;
  cfg.batch_size = 4;
  cfg.iterations = 100;
  const RunResult r = run(cfg, p);
  EXPECT_EQ(r.final_state.grad_evals, 3u * 100u * 4u);
  EXPECT_EQ(r.final_state.syncs, 15u);  // ceil(100 / 7)
  EXPECT_EQ(r.final_state.t, 100u);

  cfg.warm_up = true;
  EXPECT_EQ(run(cfg, p).final_state.syncs, 1u + 15u);  // 1 + ceil(99 / 7)
}

TEST(Run, TerminalPartialPeriodIsAveraged) {
  const auto p = SeparableQuadraticProblem::random(3, 2, 1.0, Partition::NonIdentical, 2, 0.0);
  RunConfig cfg;
  cfg.algorithm = Algorithm::LocalSGD;
  cfg.workers = 3;
  cfg.k = 10;
  cfg.iterations = 25;
  RunOptions o;
  o.record_trajectory = true;
  const RunResult r = run(cfg, p, o);
  for (const auto& x : r.trajectory.back()) EXPECT_EQ(x, r.final_state.x_hat);
  EXPECT_EQ(r.trace.back().t, 25u);
}

TEST(Run, SamplingCadence) {
  const QuadraticPairProblem p(1.0);
  RunConfig cfg = pair_run(Algorithm::VRLSGD, 10, 5000);
  const RunResult r = run(cfg, p);
  EXPECT_EQ(r.trace.size(), 1000u);  // every 5 iterations, syncs at multiples of 10 coincide
  for (std::size_t j = 1; j < r.trace.size(); ++j) EXPECT_LT(r.trace[j - 1].t, r.trace[j].t);
}

TEST(Run, VrlConvergesOnPairLocalSgdIsBiased) {
  const QuadraticPairProblem p(1.0);
  const RunResult v = run(pair_run(Algorithm::VRLSGD, 10, 5000), p);
  EXPECT_LE(std::abs(v.final_state.x_hat[0]), 1e-8);
  EXPECT_LE(*v.trace.back().dist_to_opt, 1e-8);
  const RunResult l = run(pair_run(Algorithm::LocalSGD, 10, 5000), p);
  EXPECT_NEAR(l.final_state.x_hat[0], localsgd_fixed_point(1.0, 10, 0.01), 1e-6);
  EXPECT_EQ(*l.trace.back().dist_to_opt, std::abs(l.final_state.x_hat[0]));
}

TEST(Run, IdenticalLocalSgdIsGradientDescent) {
  const auto p = SeparableQuadraticProblem::random(4, 3, 1.0, Partition::Identical, 6, 0.0);
  RunConfig cfg;
  cfg.algorithm = Algorithm::LocalSGD;
  cfg.workers = 4;
  cfg.k = 5;
  cfg.iterations = 50;
  cfg.x0 = 1.0;
  const RunResult r = run(cfg, p);
  ModelVector x(3, 1.0);
  for (int t = 0; t < 50; ++t) axpy_inplace(-cfg.gamma, p.average_gradient(x), x);
  EXPECT_EQ(r.final_state.x_hat, x);
}

TEST(Run, Divergence) {
  const QuadraticPairProblem p(1.0);
  RunConfig cfg = pair_run(Algorithm::LocalSGD, 10, 2000);
  cfg.gamma = 0.6;  // |1 - 4 gamma| > 1
  cfg.x0 = 1.0;
  const RunResult r = run(cfg, p);
  EXPECT_TRUE(r.diverged);
  EXPECT_FALSE(r.divergence_reason.empty());
  EXPECT_LT(r.final_state.t, 2000u);
}

TEST(Run, WorkerMismatch) {
  const QuadraticPairProblem p(1.0);
  RunConfig cfg = pair_run(Algorithm::VRLSGD, 10, 10);
  cfg.workers = 3;
  EXPECT_THROW(run(cfg, p), ConfigError);
}

TEST(Run, EasgdWorstOnPair) {
  const QuadraticPairProblem p(1.0);
  double worst_other = 0.0;
  for (Algorithm a : {Algorithm::SSGD, Algorithm::LocalSGD, Algorithm::VRLSGD}) {
    RunConfig cfg = pair_run(a, a == Algorithm::SSGD ? 1 : 20, 20000);
    cfg.x0 = 1.0;
    worst_other = std::max(worst_other, p.loss(run(cfg, p).final_state.x_hat));
  }
  RunConfig cfg = pair_run(Algorithm::EASGD, 20, 20000);
  cfg.x0 = 1.0;
  EXPECT_GT(p.loss(run(cfg, p).final_state.x_hat), worst_other);
}

TEST(Epoch, DatasetProblems) {
  ProblemConfig pc;
  pc.kind = "least_squares";
  pc.samples = 400;
  pc.dim = 3;
  const auto p = make_problem(pc, 4, Partition::NonIdentical);
  RunConfig cfg;
  cfg.workers = 4;
  cfg.batch_size = 5;
  EXPECT_DOUBLE_EQ(iterations_per_epoch(cfg, *p), 20.0);
  EXPECT_DOUBLE_EQ(iterations_per_epoch(cfg, QuadraticPairProblem(1.0)), 1.0);
}

TEST(Sweep, AxisParsing) {
  EXPECT_EQ(parse_sweep_axis("k"), SweepAxis::K);
  EXPECT_EQ(parse_sweep_axis("N"), SweepAxis::Workers);
  EXPECT_EQ(parse_sweep_axis("b_param"), SweepAxis::BParam);
  EXPECT_THROW(parse_sweep_axis("momentum"), ConfigError);
}

TEST(Sweep, SingleValueEqualsRun) {
  ExperimentConfig base;
  base.run.algorithm = Algorithm::VRLSGD;
  base.run.k = 1;
  base.run.iterations = 200;
  const std::vector<std::string> values{"1"};
  const auto points = sweep(base, SweepAxis::K, values);
  ASSERT_EQ(points.size(), 1u);
  EXPECT_EQ(points[0].result.trace, run_experiment(base).trace);
}

TEST(Sweep, LocalSgdBiasGrowsWithKAndB) {
  ExperimentConfig base;
  base.run.algorithm = Algorithm::LocalSGD;
  base.run.iterations = 20000;
  base.run.x0 = 1.0;
  const std::vector<std::string> ks{"10", "20", "40"};
  double prev = 0.0;
  for (const auto& pt : sweep(base, SweepAxis::K, ks)) {
    const double bias = std::abs(pt.result.final_state.x_hat[0]);
    EXPECT_GT(bias, prev);
    prev = bias;
  }
  const std::vector<std::string> bs{"1", "2", "4"};
  prev = 0.0;
  for (const auto& pt : sweep(base, SweepAxis::BParam, bs)) {
    const double bias = std::abs(pt.result.final_state.x_hat[0]);
    EXPECT_GT(bias, prev);
    prev = bias;
  }
}

TEST(Sweep, VrlLossIncreasesWithKBeforeConvergence) {
  // without warm-up the first period is plain Local SGD, so a longer period
  // starts further from x* on the non-identical pair
  ExperimentConfig base;
  base.run.algorithm = Algorithm::VRLSGD;
  base.run.iterations = 200;
  const std::vector<std::string> ks{"10", "20", "40"};
  const QuadraticPairProblem p(1.0);
  double prev = 0.0;
  for (const auto& pt : sweep(base, SweepAxis::K, ks)) {
    const double loss = p.loss(pt.result.final_state.x_hat);
    EXPECT_GT(loss, prev) << "k = " << pt.value;
    prev = loss;
  }
}

TEST(Sweep, AlgorithmAxisSetsKForSsgd) {
  ExperimentConfig base;
  const auto cfg = apply_axis(base, SweepAxis::Algorithm, "ssgd");
  EXPECT_EQ(cfg.run.algorithm, Algorithm::SSGD);
  EXPECT_EQ(cfg.run.k, 1u);
}

TEST(Hyperparams, TheoremConditions) {
  RunConfig cfg;
  cfg.gamma = 0.2;
  cfg.k = 1;
  auto r = check_hyperparams(cfg, Smoothness{4.0, false}, 0.0);
  ASSERT_GE(r.conditions.size(), 2u);
  EXPECT_EQ(r.conditions[0].pass, false);
  EXPECT_DOUBLE_EQ(r.conditions[0].rhs, 0.125);

  cfg.gamma = 0.01;
  r = check_hyperparams(cfg, Smoothness{4.0, false}, 0.0);
  EXPECT_EQ(r.conditions[0].pass, true);
  EXPECT_NEAR(r.conditions[1].lhs, 0.1152, 1e-12);
  EXPECT_EQ(r.conditions[1].pass, true);
}

TEST(Hyperparams, SuggestedSchedule) {
  RunConfig cfg;
  cfg.workers = 8;
  cfg.iterations = 117187;
  const auto r = check_hyperparams(cfg, Smoothness{4.0, false}, 1.0);
  EXPECT_EQ(r.suggested_k, 15u);
  EXPECT_NEAR(r.local_sgd_k_bound, 3.9, 0.05);
  ASSERT_TRUE(r.suggested_gamma);
  EXPECT_NEAR(*r.suggested_gamma, std::sqrt(8.0) / std::sqrt(117187.0), 1e-15);
  EXPECT_NE(r.render().find("= 15\n"), std::string::npos);
}
