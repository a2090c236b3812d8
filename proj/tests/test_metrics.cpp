#include <gtest/gtest.h>

#include "localsgd_lab/metrics.hpp"
#include "localsgd_lab/simulator.hpp"

using namespace localsgd_lab;

TEST(GradNormSq, PairExamples) {
  EXPECT_EQ(grad_norm_sq(QuadraticPairProblem(1.0), ModelVector{0.0}), 0.0);
  EXPECT_DOUBLE_EQ(grad_norm_sq(QuadraticPairProblem(1.0), ModelVector{1.0}), 36.0);
  EXPECT_DOUBLE_EQ(grad_norm_sq(QuadraticPairProblem(3.0), ModelVector{-0.5}), 9.0);
}

TEST(WorkerDrift, Examples) {
  GlobalState s = GlobalState::initial(ModelVector{0.0}, 2, 0);
  EXPECT_EQ(worker_drift(s), 0.0);
  s.workers[0].x = ModelVector{1.0};
  s.workers[1].x = ModelVector{3.0};
  EXPECT_EQ(worker_drift(s), 1.0);
  GlobalState one = GlobalState::initial(ModelVector{5.0, -1.0}, 1, 0);
  one.workers[0].x = ModelVector{2.0, 2.0};
  EXPECT_EQ(worker_drift(one), 0.0);
}

TEST(VVariance, Examples) {
  const std::vector<ModelVector> same(3, ModelVector{1.0, 2.0});
  EXPECT_EQ(v_variance(same), 0.0);
  const std::vector<ModelVector> two{ModelVector{1.0}, ModelVector{3.0}};
  EXPECT_EQ(v_variance(two), 1.0);
}

TEST(DeltaResidual, SumOfCorrections) {
  GlobalState s = GlobalState::initial(ModelVector{0.0, 0.0}, 2, 0);
  s.workers[0].delta = ModelVector{1.0, -2.0};
  s.workers[1].delta = ModelVector{-1.0, 1.5};
  EXPECT_EQ(delta_residual(s), 0.5);
}

namespace {

std::optional<double> c_of(const RunConfig& cfg, const Problem& p) {
  RunOptions o;
  o.diagnostic = true;
  return run(cfg, p, o).diagnostics->c_constant;
}

}  // namespace

TEST(CConstant, ZeroCases) {
  const auto hetero = SeparableQuadraticProblem::random(3, 2, 2.0, Partition::NonIdentical, 5, 0.0);
  const auto same = SeparableQuadraticProblem::random(3, 2, 2.0, Partition::Identical, 5, 0.0);
  RunConfig cfg;
  cfg.algorithm = Algorithm::VRLSGD;
  cfg.workers = 3;
  cfg.iterations = 50;
  cfg.x0 = 1.0;

  cfg.k = 1;
  EXPECT_EQ(c_of(cfg, hetero), 0.0);
  cfg.k = 10;
  EXPECT_GT(*c_of(cfg, hetero), 0.0);
  EXPECT_EQ(c_of(cfg, same), 0.0);
  cfg.warm_up = true;
  EXPECT_EQ(c_of(cfg, hetero), 0.0);
}

TEST(CConstant, HandComputedOnPair) {
  // x_hat^0 = x_hat^1 = 0: local-minus-mean gradients are +4 and -4, so the
  // t = 1 term is (16 + 16) / 2 = 16 and the t = 2 term is (64 + 64) / 2 = 64.
  const QuadraticPairProblem p(1.0);
  const std::vector<ModelVector> hist{ModelVector{0.0}, ModelVector{0.0}, ModelVector{0.0}};
  EXPECT_EQ(c_constant(p, hist), 80.0);
  EXPECT_THROW(c_constant(p, std::vector<ModelVector>{}), std::invalid_argument);
}
