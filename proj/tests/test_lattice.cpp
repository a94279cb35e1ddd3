#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mobius;
using mobius::fixtures::ps;

TEST(PathSet, BasicOperations) {
  const PathSet a = ps({1, 3}, 4);
  EXPECT_EQ(a.size(), 2);
  EXPECT_TRUE(a.contains(0));
  EXPECT_FALSE(a.contains(1));
  EXPECT_EQ(a.to_string(), "{p1,p3}");
  EXPECT_EQ((a | ps({2}, 4)).to_string(), "{p1,p2,p3}");
  EXPECT_EQ((a & ps({3, 4}, 4)).to_string(), "{p3}");
  EXPECT_EQ((a - ps({1}, 4)).to_string(), "{p3}");
  EXPECT_TRUE(ps({1}, 4).is_subset_of(a));
  EXPECT_TRUE(a.is_superset_of(ps({3}, 4)));
  EXPECT_EQ(a.with(3).without(0), ps({3, 4}, 4));
  EXPECT_EQ(PathSet::full(3).bits(), 7u);
  EXPECT_THROW(PathSet(8, 3), std::invalid_argument);
  EXPECT_THROW(PathSet::of({5}, 3), std::invalid_argument);
}

TEST(PathSet, CanonicalOrderIsSizeThenMask) {
  const auto sets = lattice_sets(3);
  std::vector<std::string> names;
  for (PathSet p : sets) names.push_back(p.to_string());
  EXPECT_EQ(names, (std::vector<std::string>{"{p1}", "{p2}", "{p3}", "{p1,p2}", "{p1,p3}", "{p2,p3}", "{p1,p2,p3}"}));
}

TEST(PathSet, SubsetEnumeration) {
  int count = 0;
  for_each_nonempty_subset(ps({1, 2, 4}, 5), [&](PathSet) { ++count; });
  EXPECT_EQ(count, 7);
  for (int k = 0; k <= 6; ++k) {
    int c = 0;
    for_each_subset_of_size(PathSet::full(6), k, [&](PathSet p) {
      EXPECT_EQ(p.size(), k);
      ++c;
    });
    EXPECT_EQ(c, static_cast<int>(binomial(6, k)));
  }
  EXPECT_EQ(binomial(10, 3), 120.0);
  EXPECT_EQ(binomial(3, 5), 0.0);
}

TEST(MultiIndex, Representatives) {
  const auto reps = representative_multi_indices(ps({1, 3}, 3), 3);
  ASSERT_EQ(reps.size(), 2u);
  EXPECT_EQ(reps[0].values(), (std::vector<int>{2, 0, 1}));
  EXPECT_EQ(reps[1].values(), (std::vector<int>{1, 0, 2}));
  EXPECT_EQ(representative_multi_indices(PathSet::full(4), 6).size(), 10u);  // C(5,3)
  EXPECT_EQ(canonical_multi_index(ps({2, 3}, 3), 4).values(), (std::vector<int>{0, 3, 1}));
  EXPECT_EQ(canonical_multi_index(ps({2}, 3), 2).support(), ps({2}, 3));
  EXPECT_EQ(MultiIndex({2, 0, 1}).expand(), (std::vector<int>{0, 0, 2}));
  EXPECT_THROW(canonical_multi_index(PathSet::full(3), 2), std::invalid_argument);
  EXPECT_THROW(representative_multi_indices(PathSet::full(3), 2), std::invalid_argument);
}

TEST(Mobius, FastSweepsMatchNaive) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int n = 1; n <= 7; ++n) {
    std::vector<double> g(std::size_t{1} << n, 0.0);
    for (std::size_t m = 1; m < g.size(); ++m) g[m] = u(rng);
    auto fast = g;
    superset_sum_inplace(fast, n);
    const auto naive = superset_sum_naive(g, n, false);
    for (std::size_t m = 1; m < g.size(); ++m) EXPECT_NEAR(fast[m], naive[m], 1e-11);
    auto inv = g;
    superset_mobius_inplace(inv, n);
    const auto naive_inv = superset_sum_naive(g, n, true);
    for (std::size_t m = 1; m < g.size(); ++m) EXPECT_NEAR(inv[m], naive_inv[m], 1e-11);
  }
}

TEST(Mobius, RoundTripOnCumulantVectors) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int n = 2; n <= 6; ++n) {
    CumulantVector<double> g(3, n);
    for (PathSet p : lattice_sets(n)) g.set(p, u(rng));
    const auto back = mobius_inverse(mobius_forward(g));
    for (PathSet p : lattice_sets(n)) EXPECT_NEAR(back.at(p), g.at(p), 1e-12);
  }
}

TEST(Mobius, InversionMatrixThreePaths) {
  const Eigen::MatrixXd expected{{1, 0, 0, -1, -1, 0, 1},  //
                                 {0, 1, 0, -1, 0, -1, 1},  //
                                 {0, 0, 1, 0, -1, -1, 1},  //
                                 {0, 0, 0, 1, 0, 0, -1},   //
                                 {0, 0, 0, 0, 1, 0, -1},   //
                                 {0, 0, 0, 0, 0, 1, -1},   //
                                 {0, 0, 0, 0, 0, 0, 1}};
  const auto sets = lattice_sets(3);
  const Eigen::MatrixXd x = inversion_matrix(sets);
  EXPECT_EQ(x, expected);
  EXPECT_TRUE((x * zeta_matrix(sets)).isIdentity(0));
}

TEST(Mobius, DomainValidation) {
  const std::vector<PathSet> dup = {ps({1}, 2), ps({1}, 2)};
  EXPECT_THROW(inversion_matrix(dup), std::invalid_argument);
  const std::vector<PathSet> with_empty = {PathSet(0, 2)};
  EXPECT_THROW(zeta_matrix(with_empty), std::invalid_argument);
  CumulantVector<double> v(2, 3);
  EXPECT_THROW(v.set(PathSet(0, 3), 1.0), std::invalid_argument);
  v.domain = {ps({1}, 3)};
  EXPECT_THROW(v.set(ps({2}, 3), 1.0), std::invalid_argument);
  EXPECT_THROW(mobius_forward(v), std::invalid_argument);
}

TEST(ModifiedInversion, RejectsNonAntichain) {
  const std::vector<PathSet> b = {ps({1, 2}, 3), ps({1, 2, 3}, 3)};
  EXPECT_FALSE(is_antichain(b));
  EXPECT_THROW(modified_inversion_matrix(b, b, 1), std::invalid_argument);
}

// With g supported on the down-closure of an antichain B and every size-(s+1)
// or larger subset of a B member carrying g = 0 except B itself, the restricted
// rows reproduce full inversion.
TEST(ModifiedInversion, MatchesFullInversionOnRetainedRows) {
  const int n = 5, s = 2;
  const std::vector<PathSet> bounding = {ps({1, 2, 3, 4}, n), ps({4, 5}, n)};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  std::vector<double> g(std::size_t{1} << n, 0.0);
  std::vector<PathSet> support;
  for (PathSet p : lattice_sets(n)) {
    bool under = false, maximal = false;
    for (PathSet b : bounding) {
      under = under || p.is_subset_of(b);
      maximal = maximal || p == b;
    }
    if (!under) continue;
    if (p.size() <= s || maximal) {
      g[p.bits()] = u(rng);
      support.push_back(p);
    }
  }
  auto f = g;
  superset_sum_inplace(f, n);
  const auto mi = modified_inversion_matrix(support, bounding, s);
  Eigen::VectorXd fv(mi.cols.size());
  for (std::size_t c = 0; c < mi.cols.size(); ++c) fv[c] = f[mi.cols[c].bits()];
  const Eigen::VectorXd gv = mi.x * fv;
  for (std::size_t r = 0; r < mi.rows.size(); ++r) EXPECT_NEAR(gv[r], g[mi.rows[r].bits()], 1e-12) << mi.rows[r].to_string();
}
