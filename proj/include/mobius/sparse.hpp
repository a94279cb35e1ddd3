#pragma once

// Sparse Moebius inference. Stage 1 bounds the support of f with low-order
// nonzero tests, stage 2 builds the modified inversion matrix, stage 3 fits a
// generalized lasso and reads columns off the support of g*.

#include "mobius/cumulants.hpp"
#include "mobius/lattice.hpp"
#include "mobius/mia.hpp"
#include "mobius/netmodel.hpp"
#include "mobius/solver.hpp"
#include "mobius/stats.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mobius {

struct BoundingTopology {
  std::vector<PathSet> sets;

  // Every nonempty subset of some member, canonical order.
  std::vector<PathSet> support_estimate() const {
    PathSetSet seen;
    for (PathSet b : sets) {
      if (b.size() > 26) throw std::invalid_argument("bounding set too large to enumerate");
      for_each_nonempty_subset(b, [&](PathSet q) { seen.insert(q); });
    }
    std::vector<PathSet> out(seen.begin(), seen.end());
    sort_canonical(out);
    return out;
  }

  bool covers(PathSet p) const {
    return std::any_of(sets.begin(), sets.end(), [&](PathSet b) { return p.is_subset_of(b); });
  }
};

// Drops members contained in another member; canonical order.
inline std::vector<PathSet> maximal_sets(std::vector<PathSet> sets) {
  sort_canonical(sets);
  sets.erase(std::unique(sets.begin(), sets.end()), sets.end());
  std::vector<PathSet> out;
  for (std::size_t a = 0; a < sets.size(); ++a) {
    bool dominated = false;
    for (std::size_t b = a + 1; b < sets.size() && !dominated; ++b)
      dominated = sets[b] != sets[a] && sets[a].is_subset_of(sets[b]);
    if (!dominated) out.push_back(sets[a]);
  }
  return out;
}

// t(q, i) = max{t : F(t) < gamma}, F the CDF of Binomial(C(q,i), 1 - beta).
// Floored at 0, which like any negative value means "never split".
inline int threshold(int q, int i, double beta, double gamma) {
  if (i < 1 || q < i) throw std::invalid_argument("threshold needs 1 <= i <= q");
  const double trials_d = binomial(q, i);
  if (trials_d > 1e9) throw std::invalid_argument("threshold trial count too large");
  const auto trials = static_cast<long long>(trials_d);
  int t = -1;
  for (long long k = 0; k <= trials; ++k) {
    if (stats::binomial_cdf(k, trials, 1.0 - beta) < gamma)
      t = static_cast<int>(k);
    else
      break;
  }
  return std::max(t, 0);
}

struct OrderParams {
  double alpha = 0.01;  // p-value threshold of the nonzero test
  double beta = 0.05;   // type-II error estimate
  double gamma = 0.15;  // bound on the probability of a false removal
};

class ThresholdFunction {
 public:
  ThresholdFunction() = default;
  ThresholdFunction(double beta, double gamma) : beta_(beta), gamma_(gamma) { validate(); }

  void set_order(int i, double beta, double gamma) {
    overrides_[i] = {beta, gamma};
    validate();
  }

  std::pair<double, double> params(int i) const {
    auto it = overrides_.find(i);
    return it == overrides_.end() ? std::pair{beta_, gamma_} : it->second;
  }

  int operator()(int q, int i) const {
    const auto [b, g] = params(i);
    return threshold(q, i, b, g);
  }

  void validate() const {
    auto check = [](double b, double g) {
      if (!(b > 0 && b < 1) || !(g > 0 && g < 1)) throw std::invalid_argument("beta and gamma must lie in (0,1)");
    };
    check(beta_, gamma_);
    for (const auto& [i, bg] : overrides_) check(bg.first, bg.second);
  }

 private:
  double beta_ = 0.05;
  double gamma_ = 0.15;
  std::map<int, std::pair<double, double>> overrides_;
};

// Threshold rule used by tighten: count needed to keep a size-q set at order i.
using ThresholdRule = std::function<int(int q, int i)>;

// Decides Nonzero(f_i(P)) for a batch of size-i sets.
using BatchOracle = std::function<std::vector<char>(const std::vector<PathSet>&, int order)>;

inline BatchOracle per_set_oracle(std::function<bool(PathSet)> fn) {
  return [fn = std::move(fn)](const std::vector<PathSet>& sets, int) {
    std::vector<char> out;
    out.reserve(sets.size());
    for (PathSet p : sets) out.push_back(fn(p) ? 1 : 0);
    return out;
  };
}

// Algorithm "Tighten": the passing size-i subsets of members vote for their
// supersets; members short of t(|B|, i) votes are split into their
// (|B|-1)-subsets. FIFO queue; the result keeps maximal sets only.
inline BoundingTopology tighten(const BoundingTopology& b, int i, const ThresholdRule& t, const BatchOracle& oracle) {
  if (i < 1) throw std::invalid_argument("order must be positive");
  std::vector<PathSet> candidates;
  {
    PathSetSet seen;
    for (PathSet m : b.sets)
      for_each_subset_of_size(m, i, [&](PathSet p) {
        if (seen.insert(p).second) candidates.push_back(p);
      });
  }
  sort_canonical(candidates);
  const auto passed = candidates.empty() ? std::vector<char>{} : oracle(candidates, i);
  if (passed.size() != candidates.size()) throw std::runtime_error("oracle returned the wrong number of decisions");
  PathSetSet nonzero;
  for (std::size_t k = 0; k < candidates.size(); ++k)
    if (passed[k]) nonzero.insert(candidates[k]);

  std::deque<PathSet> queue(b.sets.begin(), b.sets.end());
  std::vector<PathSet> kept;
  PathSetSet visited;
  auto contained = [](const auto& coll, PathSet p) {
    return std::any_of(coll.begin(), coll.end(), [&](PathSet q) { return p.is_subset_of(q); });
  };
  while (!queue.empty()) {
    const PathSet cur = queue.front();
    queue.pop_front();
    visited.insert(cur);
    bool keep = cur.size() < i;
    if (!keep) {
      int votes = 0;
      for_each_subset_of_size(cur, i, [&](PathSet p) { votes += nonzero.count(p) ? 1 : 0; });
      keep = votes >= t(cur.size(), i);
    }
    if (keep) {
      kept.push_back(cur);
      continue;
    }
    for (int p : cur.elements()) {
      const PathSet sub = cur.without(p);
      if (sub.empty() || visited.count(sub)) continue;
      if (contained(queue, sub) || contained(kept, sub)) continue;
      queue.push_back(sub);
    }
  }
  return {maximal_sets(std::move(kept))};
}

inline BoundingTopology bounding_topology(BoundingTopology b, int i0, int i_f, const ThresholdRule& t,
                                          const BatchOracle& oracle, std::vector<BoundingTopology>* rounds = nullptr) {
  if (i0 > i_f) throw std::invalid_argument("initial order exceeds final order");
  for (int i = i0; i <= i_f; ++i) {
    b = tighten(b, i, t, oracle);
    if (rounds) rounds->push_back(b);
  }
  return b;
}

// Maximal cliques (Bron-Kerbosch with pivoting) of the graph on n paths with
// adjacency bitmasks `adj`. Isolated vertices come out as singletons.
inline std::vector<PathSet> maximal_cliques(int n, const std::vector<Mask>& adj) {
  std::vector<PathSet> out;
  std::function<void(Mask, Mask, Mask)> bk = [&](Mask r, Mask p, Mask x) {
    if (p == 0 && x == 0) {
      out.emplace_back(r, n);
      return;
    }
    const Mask px = p | x;
    int pivot = -1, best = -1;
    for (Mask m = px; m; m &= m - 1) {
      const int u = std::countr_zero(m);
      const int c = std::popcount(p & adj[u]);
      if (c > best) {
        best = c;
        pivot = u;
      }
    }
    for (Mask cand = p & ~adj[pivot]; cand; cand &= cand - 1) {
      const int v = std::countr_zero(cand);
      const Mask bit = Mask{1} << v;
      bk(r | bit, p & adj[v], x & adj[v]);
      p &= ~bit;
      x |= bit;
    }
  };
  if (n > 0) bk(0, PathSet::full_mask(n), 0);
  sort_canonical(out);
  return out;
}

// Initial bounding topology: maximal cliques of the graph whose edges are the
// path pairs with a nonzero covariance.
inline BoundingTopology clique_init(int n, const BatchOracle& oracle) {
  std::vector<PathSet> pairs;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) pairs.push_back(PathSet::of({a, b}, n));
  const auto dec = pairs.empty() ? std::vector<char>{} : oracle(pairs, 2);
  std::vector<Mask> adj(n, 0);
  for (std::size_t k = 0; k < pairs.size(); ++k)
    if (dec[k]) {
      const auto e = pairs[k].elements();
      adj[e[0]] |= Mask{1} << e[1];
      adj[e[1]] |= Mask{1} << e[0];
    }
  return {maximal_cliques(n, adj)};
}

// Where common cumulants come from: resampled data or exact ground truth.
class CumulantSource {
 public:
  virtual ~CumulantSource() = default;
  virtual int paths() const = 0;
  virtual bool exact() const = 0;
  // Nonzero(f_order(P)) for each set at significance alpha.
  virtual std::vector<char> nonzero(const std::vector<PathSet>& sets, int order, double alpha) = 0;
  // (estimate, standard deviation) of f_order(P); sigma is 0 for exact sources.
  virtual std::vector<std::pair<double, double>> estimate(const std::vector<PathSet>& sets, int order) = 0;
};

class SampleSource : public CumulantSource {
 public:
  SampleSource(const DelaySample& sample, NonzeroTestConfig cfg) : sample_(sample), cfg_(cfg) {
    if (sample.rows() == 0) throw std::invalid_argument("empty sample");
    cfg_.validate();
  }

  int paths() const override { return sample_.paths(); }
  bool exact() const override { return false; }

  std::vector<char> nonzero(const std::vector<PathSet>& sets, int order, double alpha) override {
    const auto est = resampled(sets, order);
    std::vector<char> out;
    for (const auto& e : est) out.push_back(nonzero_test(e, alpha).nonzero ? 1 : 0);
    return out;
  }

  std::vector<std::pair<double, double>> estimate(const std::vector<PathSet>& sets, int order) override {
    std::vector<CumulantRequest> req;
    for (PathSet p : sets) req.push_back({p, order});
    const auto full = common_cumulant_estimates(sample_, req);
    const auto spread = resample_estimates(sample_, req, cfg_);
    std::vector<std::pair<double, double>> out;
    for (std::size_t k = 0; k < sets.size(); ++k) out.emplace_back(full[k], spread[k].stddev());
    return out;
  }

  std::vector<EstimateWithSpread> resampled(const std::vector<PathSet>& sets, int order) {
    std::vector<CumulantRequest> req;
    for (PathSet p : sets) req.push_back({p, order});
    return resample_estimates(sample_, req, cfg_);
  }

 private:
  const DelaySample& sample_;
  NonzeroTestConfig cfg_;
};

class GroundTruthSource : public CumulantSource {
 public:
  GroundTruthSource(RoutingMatrix r, std::vector<LinkDistribution> links) : r_(std::move(r)), links_(std::move(links)) {
    if (static_cast<int>(links_.size()) != r_.links())
      throw std::invalid_argument("link distribution count does not match routing matrix columns");
  }

  int paths() const override { return r_.paths(); }
  bool exact() const override { return true; }

  std::vector<char> nonzero(const std::vector<PathSet>& sets, int order, double) override {
    double scale = 0.0;
    for (const auto& l : links_) scale = std::max(scale, std::abs(l.cumulant<double>(order)));
    std::vector<char> out;
    for (PathSet p : sets)
      out.push_back(std::abs(true_common_cumulant(r_, links_, p, order)) > 1e-9 * std::max(1.0, scale) ? 1 : 0);
    return out;
  }

  std::vector<std::pair<double, double>> estimate(const std::vector<PathSet>& sets, int order) override {
    std::vector<std::pair<double, double>> out;
    for (PathSet p : sets) out.emplace_back(true_common_cumulant(r_, links_, p, order), 0.0);
    return out;
  }

 private:
  RoutingMatrix r_;
  std::vector<LinkDistribution> links_;
};

enum class InitMode { Cliques, FullSet };

struct PipelineParams {
  InitMode init = InitMode::Cliques;
  int i0 = 3;
  int i_f = 3;
  int s = -1;  // -1: s = i_f
  int i_max = 3;
  double lambda = 1.0;
  double b = 0.3;
  double alpha2 = 1e-40;             // pairwise covariance test for clique_init
  std::map<int, OrderParams> orders = {{3, {1e-30, 0.05, 0.15}}, {4, {1e-5, 0.05, 0.15}}};
  NonzeroTestConfig test;            // resampling for the nonzero tests and sigma
  SolverOptions solver;

  int size_threshold() const { return s < 0 ? i_f : s; }

  OrderParams order_params(int i) const {
    auto it = orders.find(i);
    if (it != orders.end()) return it->second;
    return {};
  }

  // Defaults from the bounding-topology parameter table for the nearest
  // tabulated sample size (10k, 50k, 100k).
  static PipelineParams for_sample_size(std::size_t n_rows) {
    PipelineParams p;
    p.test.method = ResampleMethod::Bootstrap;
    p.test.replicates = 50;
    if (n_rows <= 25000) {
      p.alpha2 = 1e-20;
      p.orders = {{3, {1e-10, 0.1, 0.15}}, {4, {1e-2, 0.25, 0.3}}};
    } else if (n_rows <= 75000) {
      p.alpha2 = 1e-40;
      p.orders = {{3, {1e-30, 0.05, 0.15}}, {4, {1e-5, 0.05, 0.15}}};
    } else {
      p.alpha2 = 1e-40;
      p.orders = {{3, {1e-30, 0.05, 0.15}}, {4, {1e-10, 0.05, 0.15}}};
    }
    return p;
  }

  void validate() const {
    if (i0 < 1 || i_f < i0) throw std::invalid_argument("need 1 <= i0 <= i_f");
    if (i_f > kMaxKStatisticOrder || i_max > kMaxKStatisticOrder)
      throw std::invalid_argument("cumulant orders above 4 are not supported");
    if (i_max < 1) throw std::invalid_argument("i_max must be positive");
    if (size_threshold() < 1) throw std::invalid_argument("size threshold s must be positive");
    if (!(lambda >= 0) || !(b >= 0)) throw std::invalid_argument("lambda and b must be non-negative");
    if (!(alpha2 > 0 && alpha2 < 1)) throw std::invalid_argument("alpha must lie in (0,1)");
    for (const auto& [i, op] : orders) {
      if (!(op.alpha > 0 && op.alpha < 1)) throw std::invalid_argument("alpha must lie in (0,1)");
      if (!(op.beta > 0 && op.beta < 1) || !(op.gamma > 0 && op.gamma < 1))
        throw std::invalid_argument("beta and gamma must lie in (0,1)");
    }
    test.validate();
  }
};

// Stage-2/3 problem before the (lambda, b) weights are chosen.
struct SparseProblem {
  int n = 0;
  int s = 0;
  int i_max = 0;
  std::vector<PathSet> vars;   // observed sets (|P| <= i_max) first, then unobserved
  int n_obs = 0;
  Eigen::MatrixXd m;           // g = m f; rows indexed like vars
  Eigen::VectorXd f_hat;       // observed estimates
  Eigen::VectorXd sigma;       // observed standard deviations (> 0 unless exact)
  Eigen::VectorXd a;           // a(P): nonzero count of column P
  bool exact = false;

  Eigen::VectorXd weights(double lambda, double b) const {
    Eigen::VectorXd d(a.size());
    for (Eigen::Index k = 0; k < a.size(); ++k) d[k] = lambda * std::pow(a[k], b);
    return d;
  }

  GenLassoSpec spec(double lambda, double b) const {
    GenLassoSpec sp;
    sp.target = f_hat;
    sp.a = exact ? Eigen::VectorXd::Ones(n_obs) : Eigen::VectorXd(sigma.cwiseInverse());
    sp.m = m;
    sp.w = weights(lambda, b);
    sp.equality = exact;
    return sp;
  }
};

// Rows/columns: support-estimate sets of size <= s plus members of B larger
// than s. Members larger than s get identity rows (g(B) = f(B), since B is
// maximal); other rows follow the modified inversion.
inline SparseProblem assemble_structure(const BoundingTopology& b, int s, int i_max) {
  if (!is_antichain(b.sets)) throw std::invalid_argument("bounding topology must be an antichain");
  const auto support = b.support_estimate();
  const ModifiedInversion mi = modified_inversion_matrix(support, b.sets, s);
  SparseProblem pr;
  pr.s = s;
  pr.i_max = i_max;
  pr.n = b.sets.empty() ? 0 : b.sets.front().universe();
  std::vector<int> order;
  for (int k = 0; k < static_cast<int>(mi.cols.size()); ++k)
    if (mi.cols[k].size() <= i_max) order.push_back(k);
  pr.n_obs = static_cast<int>(order.size());
  for (int k = 0; k < static_cast<int>(mi.cols.size()); ++k)
    if (mi.cols[k].size() > i_max) order.push_back(k);
  const auto nv = static_cast<Eigen::Index>(order.size());
  const auto n_small = static_cast<Eigen::Index>(mi.rows.size());
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(nv, nv);
  full.topRows(n_small) = mi.x;
  for (Eigen::Index r = n_small; r < nv; ++r) full(r, r) = 1.0;
  pr.m.resize(nv, nv);
  for (Eigen::Index r = 0; r < nv; ++r)
    for (Eigen::Index c = 0; c < nv; ++c) pr.m(r, c) = full(order[r], order[c]);
  for (int k : order) pr.vars.push_back(mi.cols[k]);
  pr.a.resize(nv);
  for (Eigen::Index c = 0; c < nv; ++c) pr.a[c] = static_cast<double>((pr.m.col(c).array() != 0.0).count());
  return pr;
}

inline SparseProblem assemble_problem(const BoundingTopology& b, int s, int i_max,
                                      const std::vector<std::pair<double, double>>& observed, bool exact) {
  SparseProblem pr = assemble_structure(b, s, i_max);
  if (static_cast<int>(observed.size()) != pr.n_obs) throw std::invalid_argument("missing estimate for an observed set");
  pr.exact = exact;
  pr.f_hat.resize(pr.n_obs);
  pr.sigma.resize(pr.n_obs);
  for (int k = 0; k < pr.n_obs; ++k) {
    pr.f_hat[k] = observed[k].first;
    pr.sigma[k] = observed[k].second;
    if (!exact && !(pr.sigma[k] > 0)) throw std::invalid_argument("standard deviations must be positive");
  }
  return pr;
}

inline double support_threshold(const Eigen::VectorXd& g) {
  return 1e-6 * std::max(1.0, g.size() ? g.cwiseAbs().maxCoeff() : 0.0);
}

struct Stage1Result {
  BoundingTopology initial;
  std::vector<BoundingTopology> rounds;  // after each tighten order
  BoundingTopology final;
};

struct SparseRun {
  Stage1Result stage1;
  SparseProblem problem;
  SolverResult solution;
  MiaResult result;
};

// Stage 1 with the source's nonzero test at the per-order significance.
inline Stage1Result run_stage1(CumulantSource& src, const PipelineParams& p) {
  const int n = src.paths();
  Stage1Result st;
  auto oracle = [&](const std::vector<PathSet>& sets, int order) {
    const double alpha = order == 2 ? p.alpha2 : p.order_params(order).alpha;
    return src.nonzero(sets, order, alpha);
  };
  st.initial = p.init == InitMode::Cliques ? clique_init(n, oracle) : BoundingTopology{{PathSet::full(n)}};
  ThresholdRule rule = [&](int q, int i) {
    const auto op = p.order_params(i);
    return threshold(q, i, op.beta, op.gamma);
  };
  st.final = bounding_topology(st.initial, p.i0, p.i_f, rule, oracle, &st.rounds);
  return st;
}

// Stages 1-2 plus the observed estimates: everything independent of (lambda, b).
struct PreparedSparse {
  Stage1Result stage1;
  SparseProblem problem;
  std::vector<std::string> path_ids;
};

// Stage 2 and the observed estimates for an existing stage-1 result.
inline PreparedSparse prepare_from_stage1(CumulantSource& src, const PipelineParams& p, Stage1Result stage1,
                                          std::vector<std::string> path_ids = {}) {
  p.validate();
  PreparedSparse out;
  out.stage1 = std::move(stage1);
  const auto structure = assemble_structure(out.stage1.final, p.size_threshold(), p.i_max);
  std::vector<PathSet> obs(structure.vars.begin(), structure.vars.begin() + structure.n_obs);
  auto est = obs.empty() ? std::vector<std::pair<double, double>>{} : src.estimate(obs, p.i_max);
  if (!src.exact())
    for (auto& [v, sd] : est)  // constant replicates: keep the quadratic term finite
      if (!(sd > 0)) sd = 1e-12 * std::max(1.0, std::abs(v));
  out.problem = assemble_problem(out.stage1.final, p.size_threshold(), p.i_max, est, src.exact());
  out.path_ids = std::move(path_ids);
  if (out.path_ids.empty())
    for (int j = 0; j < src.paths(); ++j) out.path_ids.push_back("p" + std::to_string(j + 1));
  return out;
}

inline PreparedSparse prepare_sparse(CumulantSource& src, const PipelineParams& p, std::vector<std::string> path_ids = {}) {
  p.validate();
  return prepare_from_stage1(src, p, run_stage1(src, p), std::move(path_ids));
}

inline SparseRun solve_prepared(const PreparedSparse& prep, double lambda, double b, const SolverOptions& opt = {}) {
  SparseRun run;
  run.stage1 = prep.stage1;
  run.problem = prep.problem;
  const auto& pr = prep.problem;
  run.solution = solve(pr.spec(lambda, b), opt);
  MiaResult& r = run.result;
  r.mode = MiaMode::Sparse;
  r.order = pr.i_max;
  r.n = static_cast<int>(prep.path_ids.size());
  r.path_ids = prep.path_ids;
  const double thr = support_threshold(run.solution.g);
  for (std::size_t k = 0; k < pr.vars.size(); ++k) {
    r.f[pr.vars[k]] = run.solution.f[static_cast<Eigen::Index>(k)];
    r.g[pr.vars[k]] = run.solution.g[static_cast<Eigen::Index>(k)];
    if (std::abs(run.solution.g[static_cast<Eigen::Index>(k)]) > thr) r.columns.push_back(pr.vars[k]);
  }
  sort_canonical(r.columns);
  return run;
}

inline SparseRun run_sparse_pipeline(CumulantSource& src, const PipelineParams& p, std::vector<std::string> path_ids = {}) {
  return solve_prepared(prepare_sparse(src, p, std::move(path_ids)), p.lambda, p.b, p.solver);
}

inline SparseRun run_sparse_pipeline(const DelaySample& sample, const PipelineParams& p) {
  SampleSource src(sample, p.test);
  return run_sparse_pipeline(src, p, sample.path_ids());
}

}  // namespace mobius
