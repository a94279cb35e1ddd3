#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace mobius;
using mobius::fixtures::ps;

namespace {

DelaySample oracle_sample() {
  return DelaySample::from_rows({{3, 1, 4}, {1, 5, 9}, {2, 6, 5}, {3, 5, 8}, {9, 7, 9}, {3, 2, 3},
                                 {8, 4, 6}, {2, 6, 4}, {3, 3, 8}, {3, 2, 7}, {9, 5, 0}, {2, 8, 8}});
}

}  // namespace

TEST(LinkDistribution, AnalyticCumulants) {
  const auto e = LinkDistribution::exponential(1.5);
  EXPECT_EQ(e.cumulant<Rational>(1), Rational(2, 3));
  EXPECT_EQ(e.cumulant<Rational>(3), Rational(16, 27));
  EXPECT_NEAR(e.cumulant(4), 6.0 / std::pow(1.5, 4), 1e-15);
  const auto g = LinkDistribution::gamma(2.5, 0.25);
  EXPECT_NEAR(g.cumulant(1), 10.0, 1e-12);
  EXPECT_NEAR(g.cumulant(2), 40.0, 1e-12);
  EXPECT_NEAR(g.cumulant(3), 2.5 * 2 * 64, 1e-9);
  const auto nrm = LinkDistribution::normal(3.0, 2.0);
  EXPECT_EQ(nrm.cumulant(2), 2.0);
  EXPECT_EQ(nrm.cumulant(3), 0.0);
  EXPECT_THROW(LinkDistribution::exponential(0.0), std::invalid_argument);
  EXPECT_THROW(LinkDistribution::gamma(1.0, -1.0), std::invalid_argument);
  EXPECT_THROW(e.cumulant(0), std::invalid_argument);
}

TEST(MixtureCumulant, ThreePathTree) {
  const auto r = fixtures::three_path_routing();
  const auto links = fixtures::three_path_links();
  // Third order: p1 alone sees l1 + l2, {p1,p2} shares l1, {p2,p3} shares l3.
  EXPECT_EQ(mixture_cumulant<Rational>(r, links, MultiIndex({3, 0, 0})), Rational(2) + Rational(16, 27));
  EXPECT_EQ(mixture_cumulant<Rational>(r, links, MultiIndex({2, 1, 0})), Rational(2));
  EXPECT_EQ(mixture_cumulant<Rational>(r, links, MultiIndex({0, 1, 2})), Rational(1, 4));
  EXPECT_EQ(mixture_cumulant<Rational>(r, links, MultiIndex({1, 1, 1})), Rational(0));
  EXPECT_THROW(mixture_cumulant<double>(r, std::span(links).first(2), MultiIndex({1, 0, 0})), std::invalid_argument);
}

TEST(DelaySample, Validation) {
  EXPECT_THROW(DelaySample(2, 2, {1, 2, 3}), std::invalid_argument);
  EXPECT_THROW(DelaySample(1, 1, {std::nan("")}), std::invalid_argument);
  EXPECT_THROW(DelaySample::from_rows({{1, 2}, {3}}), std::invalid_argument);
  const auto s = oracle_sample();
  EXPECT_EQ(s.rows(), 12u);
  EXPECT_EQ(s.at(1, 2), 9.0);
  EXPECT_EQ(s.path_ids(), (std::vector<std::string>{"p1", "p2", "p3"}));
  const std::vector<std::size_t> idx = {4, 0};
  const auto sub = s.select_rows(idx);
  EXPECT_EQ(sub.at(0, 0), 9.0);
  EXPECT_EQ(sub.at(1, 1), 1.0);
}

// Reference values come from tests/oracles/kstat_oracle.py (power-sum
// formulas + polarisation, exact rationals).
TEST(KStatistics, MatchesPolarisationOracle) {
  const std::vector<std::pair<std::vector<int>, double>> cases = {
      {{1, 0, 0}, 4.0},
      {{0, 0, 1}, 71.0 / 12},
      {{2, 0, 0}, 92.0 / 11},
      {{1, 0, 1}, -2.0},
      {{0, 1, 1}, 37.0 / 22},
      {{3, 0, 0}, 1548.0 / 55},
      {{0, 0, 3}, -11503.0 / 660},
      {{2, 1, 0}, 48.0 / 5},
      {{1, 0, 2}, 926.0 / 55},
      {{1, 1, 1}, 2.0 / 5},
      {{4, 0, 0}, -1304.0 / 55},
      {{0, 2, 2}, -8066.0 / 495},
      {{2, 1, 1}, 907.0 / 99},
      {{1, 1, 2}, 15526.0 / 495},
      {{1, 2, 1}, 2128.0 / 99},
      {{3, 0, 1}, 43.0 / 165},
      {{1, 0, 3}, -14866.0 / 165},
  };
  const auto s = oracle_sample();
  KStatistics ks(s);
  for (const auto& [alpha, want] : cases) {
    EXPECT_NEAR(ks.k_statistic(MultiIndex(alpha)), want, 1e-11 * std::max(1.0, std::abs(want)))
        << MultiIndex(alpha).to_string();
    EXPECT_NEAR(k_statistic(s, MultiIndex(alpha)), want, 1e-11 * std::max(1.0, std::abs(want)));
  }
}

TEST(KStatistics, AveragedCommonCumulant) {
  const auto s = oracle_sample();
  // {p1,p3} at order 3 averages k(2,0,1) and k(1,0,2).
  const double want = 0.5 * (-266.0 / 55 + 926.0 / 55);
  EXPECT_NEAR(common_cumulant_estimate(s, ps({1, 3}, 3), 3), want, 1e-11);
  // Full set at order 4: the three multi-indices with one doubled entry.
  const double want4 = (907.0 / 99 + 2128.0 / 99 + 15526.0 / 495) / 3;
  EXPECT_NEAR(common_cumulant_estimate(s, PathSet::full(3), 4), want4, 1e-11);
  const std::vector<CumulantRequest> req = {{ps({1, 3}, 3), 3}, {PathSet::full(3), 4}};
  const auto batch = common_cumulant_estimates(s, req);
  EXPECT_NEAR(batch[0], want, 1e-11);
  EXPECT_NEAR(batch[1], want4, 1e-11);
}

TEST(KStatistics, Errors) {
  const auto s = oracle_sample();
  KStatistics ks(s);
  EXPECT_THROW(ks.k_statistic(MultiIndex({5, 0, 0})), std::invalid_argument);
  EXPECT_THROW(common_cumulant_estimate(s, PathSet::full(3), 2), std::invalid_argument);
  const auto tiny = DelaySample::from_rows({{1, 2, 3}, {2, 3, 4}, {0, 0, 1}});
  EXPECT_THROW(k_statistic(tiny, MultiIndex({4, 0, 0})), std::invalid_argument);
}

TEST(Resampling, SplitsAreContiguousAndBalanced) {
  NonzeroTestConfig cfg;
  cfg.method = ResampleMethod::SampleSplit;
  cfg.replicates = 4;
  std::size_t total = 0, next = 0;
  for (int b = 0; b < 4; ++b) {
    const auto idx = replicate_rows(10, cfg, b);
    EXPECT_TRUE(idx.size() == 2 || idx.size() == 3);
    for (std::size_t r : idx) EXPECT_EQ(r, next++);
    total += idx.size();
  }
  EXPECT_EQ(total, 10u);
  EXPECT_THROW(replicate_rows(7, cfg, 0), std::invalid_argument);
}

TEST(Resampling, BootstrapIsSeeded) {
  NonzeroTestConfig cfg;
  cfg.seed = 42;
  EXPECT_EQ(replicate_rows(100, cfg, 3), replicate_rows(100, cfg, 3));
  EXPECT_NE(replicate_rows(100, cfg, 3), replicate_rows(100, cfg, 4));
  cfg.replicates = 1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(NonzeroTest, PValuesMatchReference) {
  // Replicates {m - d, m + d} repeated give t = mean / stderr directly.
  auto est_with_t = [](double t, int m) {
    EstimateWithSpread e;
    e.replicates.assign(m, 0.0);
    e.mean = t;
    e.std_error = 1.0;
    return e;
  };
  EXPECT_NEAR(nonzero_test(est_with_t(2.0, 11), 0.01).p_value, 0.07338803477074039, 1e-12);
  EXPECT_NEAR(nonzero_test(est_with_t(-3.5, 30), 0.01).p_value, 0.0015244463146546039, 1e-12);
  EXPECT_NEAR(nonzero_test(est_with_t(0.25, 5), 0.01).p_value, 0.8149020114591812, 1e-12);
  EXPECT_NEAR(nonzero_test(est_with_t(12.0, 50), 0.01).p_value, 3.3808104947974004e-16, 1e-20);
  EXPECT_TRUE(nonzero_test(est_with_t(-3.5, 30), 0.01).nonzero);
  EXPECT_FALSE(nonzero_test(est_with_t(2.0, 11), 0.01).nonzero);
}

TEST(NonzeroTest, DegenerateSpread) {
  auto zero = EstimateWithSpread::from_replicates({0, 0, 0});
  EXPECT_FALSE(nonzero_test(zero, 0.01).nonzero);
  EXPECT_EQ(nonzero_test(zero, 0.01).p_value, 1.0);
  auto constant = EstimateWithSpread::from_replicates({2, 2, 2});
  EXPECT_TRUE(nonzero_test(constant, 0.01).nonzero);
  EXPECT_THROW(nonzero_test(EstimateWithSpread::from_replicates({1}), 0.01), std::invalid_argument);
}

TEST(Resampling, EstimatesCarrySpread) {
  const auto s = oracle_sample();
  NonzeroTestConfig cfg;
  cfg.method = ResampleMethod::SampleSplit;
  cfg.replicates = 2;
  const auto e = resample_estimates(s, ps({1}, 3), 1, cfg);
  ASSERT_EQ(e.replicates.size(), 2u);
  EXPECT_NEAR(e.replicates[0], (3 + 1 + 2 + 3 + 9 + 3) / 6.0, 1e-12);
  EXPECT_NEAR(e.replicates[1], (8 + 2 + 3 + 3 + 9 + 2) / 6.0, 1e-12);
  EXPECT_NEAR(e.mean, 4.0, 1e-12);
}
