#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace mobius;
using mobius::fixtures::ps;

TEST(Score, PrecisionRecallAndBothF1s) {
  const int n = 3;
  const auto r = score(std::vector<PathSet>{ps({1}, n), ps({1, 2}, n), ps({3}, n)},
                       std::vector<PathSet>{ps({1}, n), ps({1, 2}, n), ps({2, 3}, n), ps({2}, n)});
  EXPECT_DOUBLE_EQ(r.precision, 2.0 / 3);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
  EXPECT_DOUBLE_EQ(r.f1, std::sqrt(1.0 / 3));
  EXPECT_DOUBLE_EQ(r.f1_harmonic, 4.0 / 7);
  EXPECT_EQ(r.spurious, (std::vector<PathSet>{ps({3}, n)}));
  EXPECT_EQ(r.missed.size(), 2u);
}

TEST(Score, EmptyConventions) {
  const auto none = score(std::vector<PathSet>{}, std::vector<PathSet>{ps({1}, 2)});
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.f1, 0.0);
  EXPECT_EQ(score(std::vector<PathSet>{}, std::vector<PathSet>{}).f1, 1.0);
}

TEST(Score, IgnoresColumnOrderAndDuplicates) {
  const auto a = RoutingMatrix::from_rows({{1, 0, 1}, {1, 1, 1}});
  const auto b = RoutingMatrix::from_rows({{0, 1}, {1, 1}});
  EXPECT_EQ(score(a, b).f1, 1.0);
  EXPECT_THROW(score(a, RoutingMatrix::from_rows({{1}})), std::invalid_argument);
}

TEST(Grid, ValuesIncludeBothEnds) {
  const auto l = grid_values(0, 4, 0.2);
  ASSERT_EQ(l.size(), 21u);
  EXPECT_EQ(l[3], 0.6);
  EXPECT_EQ(l.back(), 4.0);
  EXPECT_EQ(grid_values(0, 1, 0.1).size(), 11u);
  EXPECT_THROW(grid_values(0, 1, 0), std::invalid_argument);
}

TEST(Grid, SearchPrefersSmallestParametersOnTies) {
  GroundTruthSource src(fixtures::three_path_routing(), fixtures::three_path_links());
  PipelineParams p;
  p.init = InitMode::FullSet;
  p.i0 = 2;
  GridCase gc{prepare_sparse(src, p), true_columns(fixtures::three_path_routing(), fixtures::three_path_links(), 3)};
  const auto g1 = grid_search({gc}, {0.0, 1.0, 2.0}, {0.0, 0.5}, {}, 1);
  const auto g2 = grid_search({gc}, {0.0, 1.0, 2.0}, {0.0, 0.5}, {}, 3);
  EXPECT_EQ(g1.table.size(), 6u);
  EXPECT_EQ(g1.best.mean_f1, 1.0);
  for (std::size_t k = 0; k < g1.table.size(); ++k) EXPECT_EQ(g1.table[k].mean_f1, g2.table[k].mean_f1);
  EXPECT_EQ(g1.best.lambda, g2.best.lambda);
  EXPECT_EQ(g1.best.b, g2.best.b);
  for (const auto& gp : g1.table)
    if (gp.mean_f1 == 1.0) {
      EXPECT_LE(g1.best.lambda, gp.lambda);
      break;
    }
}

TEST(Support, ScoresAgainstTrueCommonSupport) {
  const auto r = fixtures::three_path_routing();
  const auto links = fixtures::three_path_links();
  const auto exact = score_support({{ps({1, 2}, 3), ps({2, 3}, 3)}}, r, links, 3);
  EXPECT_EQ(exact.precision, 1.0);
  EXPECT_EQ(exact.recall, 1.0);
  const auto loose = score_support({{PathSet::full(3)}}, r, links, 3);
  EXPECT_EQ(loose.recall, 1.0);
  EXPECT_DOUBLE_EQ(loose.precision, 5.0 / 7);
}

TEST(Campaign, EnumeratesDeskGrid) {
  CampaignConfig cfg;
  cfg.monitors = {5, 6};
  cfg.sample_sizes = {10000, 50000};
  cfg.seeds = {1, 2, 3, 4, 5};
  const auto cases = enumerate_cases(cfg);
  EXPECT_EQ(cases.size(), 20u);
  EXPECT_EQ(cases.front().id, "m5_n10000_s1");
}

TEST(Campaign, GroundTruthCasesScorePerfectly) {
  CampaignConfig cfg;
  cfg.topology = topology_from_json(read_json_file(fixtures::data_file("desk_topology.json")));
  cfg.seeds = {1, 2};
  cfg.i_max = {3};
  cfg.ground_truth = true;
  cfg.jobs = 2;
  const auto rep = run_campaign(cfg);
  ASSERT_EQ(rep.cases.size(), 2u);
  for (const auto& c : rep.cases) {
    ASSERT_TRUE(c.ok) << c.error;
    EXPECT_EQ(c.stage1.recall, 1.0);
  }
  EXPECT_NE(rep.cases_csv.find("m5_n50000_s1,5,50000,1,3,f1,"), std::string::npos);
  EXPECT_EQ(rep.cases_csv, run_campaign(cfg).cases_csv);
}

TEST(Campaign, FailedCaseIsReportedNotThrown) {
  CampaignConfig cfg;
  cfg.topology = topology_from_json(read_json_file(fixtures::data_file("desk_topology.json")));
  cfg.monitors = {40};  // more monitors than nodes
  cfg.seeds = {1};
  const auto rep = run_campaign(cfg);
  ASSERT_EQ(rep.cases.size(), 1u);
  EXPECT_FALSE(rep.cases[0].ok);
  EXPECT_NE(rep.cases_csv.find(",failed,1"), std::string::npos);
}
