#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "localsgd_lab/core.hpp"

using namespace localsgd_lab;

TEST(VecMean, Symmetric) {
  const std::vector<ModelVector> vs{ModelVector{1.0, 2.0, 3.0}, ModelVector{3.0, 2.0, 1.0}};
  EXPECT_EQ(vec_mean(vs), (ModelVector{2.0, 2.0, 2.0}));
}

TEST(VecMean, Zeros) {
  const std::vector<ModelVector> vs(3, ModelVector{0.0, 0.0});
  EXPECT_EQ(vec_mean(vs), (ModelVector{0.0, 0.0}));
}

TEST(VecMean, SingleVectorIsIdentity) {
  const std::vector<ModelVector> vs{ModelVector{5.0}};
  EXPECT_EQ(vec_mean(vs), vs[0]);
}

TEST(VecMean, CopiesOfOneVectorAreExact) {
  const ModelVector v{0.1, 1.0 / 3.0, -2.7};
  for (std::size_t n : {2u, 3u, 7u, 8u, 100u}) {
    const std::vector<ModelVector> vs(n, v);
    EXPECT_EQ(vec_mean(vs), v) << "n = " << n;
  }
}

TEST(VecMean, BitReproducible) {
  const std::vector<ModelVector> vs{ModelVector{0.1, 1e-3}, ModelVector{0.7, -2.0}, ModelVector{1.3, 5.5}};
  const ModelVector a = vec_mean(vs);
  const ModelVector b = vec_mean(vs);
  EXPECT_EQ(a, b);
  EXPECT_NEAR(a[0], (0.1 + 0.7 + 1.3) / 3.0, 1e-15);
}

TEST(VecMean, Errors) {
  EXPECT_THROW(vec_mean(std::vector<ModelVector>{}), std::invalid_argument);
  EXPECT_THROW(vec_mean(std::vector<ModelVector>{ModelVector{1.0}, ModelVector{1.0, 2.0}}), DimensionMismatch);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(vec_mean(std::vector<ModelVector>{ModelVector{1.0}, ModelVector{nan}}), NumericalError);
}

TEST(VecAxpy, Examples) {
  EXPECT_EQ(vec_axpy(-0.1, ModelVector{10.0}, ModelVector{1.0}), ModelVector{0.0});
  EXPECT_EQ(vec_axpy(0.0, ModelVector{7.0, 7.0}, ModelVector{1.0, 2.0}), (ModelVector{1.0, 2.0}));
  EXPECT_EQ(vec_axpy(2.0, ModelVector{1.0, -1.0}, ModelVector{0.0, 0.0}), (ModelVector{2.0, -2.0}));
  EXPECT_THROW(vec_axpy(1.0, ModelVector{1.0}, ModelVector{1.0, 2.0}), DimensionMismatch);
}

TEST(VecOps, NormsAndDiffs) {
  EXPECT_EQ(norm(ModelVector{-3.0}), 3.0);
  EXPECT_DOUBLE_EQ(norm(ModelVector{3.0, 4.0}), 5.0);
  EXPECT_EQ(squared_norm(ModelVector{1.0, 2.0}), 5.0);
  EXPECT_EQ(dot(ModelVector{1.0, 2.0}, ModelVector{3.0, -1.0}), 1.0);
  EXPECT_EQ(max_abs(ModelVector{1.0, -4.0, 2.0}), 4.0);
  EXPECT_EQ(max_abs_diff(ModelVector{1.0, 2.0}, ModelVector{1.5, 0.0}), 2.0);
  EXPECT_EQ(vec_sub(ModelVector{1.0}, ModelVector{3.0}), ModelVector{-2.0});
  EXPECT_EQ(vec_scale(-2.0, ModelVector{1.5}), ModelVector{-3.0});
}

TEST(Enums, RoundTrip) {
  for (Algorithm a : {Algorithm::SSGD, Algorithm::LocalSGD, Algorithm::EASGD, Algorithm::VRLSGD}) {
    EXPECT_EQ(parse_algorithm(to_string(a)), a);
  }
  EXPECT_EQ(parse_partition("identical"), Partition::Identical);
  EXPECT_EQ(parse_partition("non_identical"), Partition::NonIdentical);
  EXPECT_THROW(parse_algorithm("adam"), ConfigError);
  EXPECT_THROW(parse_partition("iid"), ConfigError);
}

TEST(RunConfig, Validation) {
  RunConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  auto bad = [](auto mutate) {
    RunConfig c;
    mutate(c);
    return c;
  };
  EXPECT_THROW(bad([](RunConfig& c) { c.gamma = 0.0; }).validate(), ConfigError);
  EXPECT_THROW(bad([](RunConfig& c) { c.gamma = -1.0; }).validate(), ConfigError);
  EXPECT_THROW(bad([](RunConfig& c) { c.k = 0; }).validate(), ConfigError);
  EXPECT_THROW(bad([](RunConfig& c) { c.workers = 0; }).validate(), ConfigError);
  EXPECT_THROW(bad([](RunConfig& c) { c.batch_size = 0; }).validate(), ConfigError);
  EXPECT_THROW(bad([](RunConfig& c) { c.algorithm = Algorithm::SSGD; c.k = 5; }).validate(), ConfigError);
  EXPECT_THROW(bad([](RunConfig& c) { c.algorithm = Algorithm::EASGD; c.easgd_alpha = 0.6; }).validate(),
               ConfigError);
  EXPECT_NO_THROW(bad([](RunConfig& c) { c.algorithm = Algorithm::EASGD; c.easgd_alpha = 0.0; }).validate());
}

TEST(RunConfig, Defaults) {
  RunConfig cfg;
  cfg.workers = 4;
  EXPECT_DOUBLE_EQ(cfg.effective_easgd_alpha(), 0.9 / 4);
  cfg.iterations = 5000;
  EXPECT_EQ(cfg.effective_sample_every(), 5u);
  cfg.iterations = 0;
  EXPECT_EQ(cfg.effective_sample_every(), 1u);
  cfg.sample_every = 7;
  EXPECT_EQ(cfg.effective_sample_every(), 7u);
}

TEST(SyncSchedule, PlainPeriods) {
  const SyncSchedule s(10, 25, false);
  EXPECT_FALSE(s.is_sync_point(5));
  EXPECT_TRUE(s.is_sync_point(10));
  EXPECT_TRUE(s.is_sync_point(20));
  EXPECT_TRUE(s.is_sync_point(25));  // forced terminal sync
  EXPECT_EQ(s.period_length_ending_at(25), 5u);
  EXPECT_EQ(s.sync_count(), 3u);
  EXPECT_EQ(s.next_sync_after(10), 20u);
  EXPECT_EQ(s.next_sync_after(20), 25u);
}

TEST(SyncSchedule, WarmUpShortensFirstPeriod) {
  const SyncSchedule s(10, 21, true);
  EXPECT_TRUE(s.is_sync_point(1));
  EXPECT_TRUE(s.is_sync_point(11));
  EXPECT_TRUE(s.is_sync_point(21));
  EXPECT_FALSE(s.is_sync_point(10));
  EXPECT_EQ(s.period_length_ending_at(1), 1u);
  EXPECT_EQ(s.period_length_ending_at(11), 10u);
  EXPECT_EQ(s.sync_count(), 3u);
}

TEST(SyncSchedule, CountMatchesCeiling) {
  for (std::uint64_t k : {1u, 3u, 10u}) {
    for (std::uint64_t t : {0u, 1u, 9u, 10u, 11u, 100u, 101u}) {
      EXPECT_EQ(SyncSchedule(k, t, false).sync_count(), (t + k - 1) / k) << "k=" << k << " T=" << t;
    }
  }
}

TEST(SyncSchedule, CommunicationPoints) {
  EXPECT_EQ(SyncSchedule::last_communication(27, 10), 20u);
  EXPECT_EQ(SyncSchedule::previous_communication(27, 10), std::optional<std::uint64_t>(10));
  EXPECT_EQ(SyncSchedule::previous_communication(7, 10), std::nullopt);
}
