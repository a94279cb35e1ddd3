#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mobius;
using mobius::fixtures::ps;

TEST(Threshold, MatchesBinomialReference) {
  // Values from tests/oracles/kstat_oracle.py (scipy binom.cdf).
  EXPECT_EQ(threshold(5, 3, 0.05, 0.15), 8);
  EXPECT_EQ(threshold(8, 3, 0.05, 0.15), 51);
  EXPECT_EQ(threshold(6, 4, 0.05, 0.15), 12);
  EXPECT_EQ(threshold(10, 3, 0.2, 0.05), 88);
  EXPECT_EQ(threshold(3, 3, 0.05, 0.15), 0);
  EXPECT_THROW(threshold(2, 3, 0.05, 0.15), std::invalid_argument);
  EXPECT_THROW(ThresholdFunction(0.0, 0.15), std::invalid_argument);
  ThresholdFunction tf(0.05, 0.15);
  tf.set_order(3, 0.2, 0.05);
  EXPECT_EQ(tf(10, 3), 88);
  EXPECT_THROW(tf.set_order(4, 0.5, 1.0), std::invalid_argument);
}

TEST(Tighten, PerfectOracleRecoversTheDownClosure) {
  // True support: subsets of {1,2,3,4} and {4,5,6}; start from the full set.
  const int n = 6;
  const std::vector<PathSet> truth = {ps({4, 5, 6}, n), ps({1, 2, 3, 4}, n)};
  auto in_truth = [&](PathSet p) {
    return std::any_of(truth.begin(), truth.end(), [&](PathSet t) { return p.is_subset_of(t); });
  };
  int calls = 0;
  BatchOracle oracle = [&](const std::vector<PathSet>& sets, int) {
    ++calls;
    std::vector<char> out;
    for (PathSet p : sets) out.push_back(in_truth(p));
    return out;
  };
  ThresholdRule all = [](int q, int i) { return static_cast<int>(binomial(q, i)); };
  const auto b = bounding_topology({{PathSet::full(n)}}, 2, 3, all, oracle);
  EXPECT_EQ(b.sets, truth);
  EXPECT_EQ(calls, 2);
}

TEST(Tighten, SmallSetsAreKeptAndOutputIsAntichain) {
  const int n = 4;
  BatchOracle none = per_set_oracle([](PathSet) { return false; });
  ThresholdRule one = [](int, int) { return 1; };
  const auto b = tighten({{ps({1, 2, 3}, n), ps({4}, n)}}, 3, one, none);
  // {1,2,3} fails and splits into pairs, which are below the order and kept.
  EXPECT_EQ(b.sets, (std::vector<PathSet>{ps({4}, n), ps({1, 2}, n), ps({1, 3}, n), ps({2, 3}, n)}));
  EXPECT_TRUE(is_antichain(b.sets));
}

TEST(Cliques, BronKerboschOnKnownGraph) {
  // Edges: 0-1, 0-2, 1-2 (triangle), 2-3, 4 isolated.
  std::vector<Mask> adj = {0b00110, 0b00101, 0b01011, 0b00100, 0};
  const auto c = maximal_cliques(5, adj);
  EXPECT_EQ(c, (std::vector<PathSet>{ps({5}, 5), ps({3, 4}, 5), ps({1, 2, 3}, 5)}));
}

TEST(Cliques, AgreesWithBruteForceOnRandomGraphs) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + trial % 8;
    std::vector<Mask> adj(n, 0);
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        if (rng() % 2) {
          adj[a] |= Mask{1} << b;
          adj[b] |= Mask{1} << a;
        }
    auto is_clique = [&](Mask m) {
      for (Mask x = m; x; x &= x - 1) {
        const int v = std::countr_zero(x);
        if ((m & ~(Mask{1} << v) & ~adj[v]) != 0) return false;
      }
      return true;
    };
    std::vector<PathSet> brute;
    for (Mask m = 1; m < (Mask{1} << n); ++m) {
      if (!is_clique(m)) continue;
      bool maximal = true;
      for (int v = 0; v < n && maximal; ++v)
        if (!(m >> v & 1) && is_clique(m | Mask{1} << v)) maximal = false;
      if (maximal) brute.emplace_back(m, n);
    }
    sort_canonical(brute);
    EXPECT_EQ(maximal_cliques(n, adj), brute);
  }
}

TEST(Assembly, ObservedFirstAndIdentityRowsForLargeMembers) {
  const int n = 5;
  const BoundingTopology b{{ps({1, 2, 3, 4}, n), ps({4, 5}, n)}};
  const auto pr = assemble_structure(b, 2, 3);
  for (int k = 0; k < pr.n_obs; ++k) EXPECT_LE(pr.vars[k].size(), 3);
  ASSERT_EQ(pr.vars.back(), ps({1, 2, 3, 4}, n));
  const auto last = static_cast<Eigen::Index>(pr.vars.size()) - 1;
  EXPECT_EQ(pr.m(last, last), 1.0);
  EXPECT_EQ(pr.m.row(last).cwiseAbs().sum(), 1.0);
  // Five singletons, six pairs under {1,2,3,4} plus {4,5}, and the large member.
  EXPECT_EQ(pr.vars.size(), 5u + 7u + 1u);
  for (Eigen::Index c = 0; c < pr.m.cols(); ++c)
    EXPECT_EQ(pr.a[c], static_cast<double>((pr.m.col(c).array() != 0.0).count()));
  EXPECT_THROW(assemble_structure({{ps({1, 2}, n), ps({1, 2, 3}, n)}}, 2, 3), std::invalid_argument);
}

TEST(Pipeline, GroundTruthRecoversThreePathTree) {
  GroundTruthSource src(fixtures::three_path_routing(), fixtures::three_path_links());
  PipelineParams p;
  p.init = InitMode::FullSet;
  p.i0 = 2;
  p.i_f = 3;
  const auto run = run_sparse_pipeline(src, p);
  EXPECT_EQ(run.result.columns, (std::vector<PathSet>{ps({1}, 3), ps({1, 2}, 3), ps({2, 3}, 3)}));
}

TEST(Pipeline, GroundTruthOnGeneratedScenario) {
  const Scenario sc = generate_scenario(topology_from_json(read_json_file(fixtures::data_file("desk_topology.json"))), 5,
                                        DelayConfig{}, 4);
  GroundTruthSource src(sc.routing, sc.link_dists);
  const auto run = run_sparse_pipeline(src, PipelineParams{});
  EXPECT_TRUE(is_antichain(run.stage1.final.sets));
  const auto truth = true_columns(sc.routing, sc.link_dists, 3);
  for (PathSet c : truth) EXPECT_TRUE(run.stage1.final.covers(c)) << c.to_string();
  EXPECT_EQ(score(run.result.columns, truth).f1, 1.0);
}

TEST(Pipeline, ParameterValidation) {
  PipelineParams p;
  p.i_f = 5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = PipelineParams{};
  p.orders[3].gamma = 1.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = PipelineParams{};
  p.lambda = -1;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  EXPECT_EQ(PipelineParams::for_sample_size(10000).order_params(3).alpha, 1e-10);
  EXPECT_EQ(PipelineParams::for_sample_size(100000).order_params(4).alpha, 1e-10);
}
