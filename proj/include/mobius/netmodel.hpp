#pragma once

// Synthetic networks and their ground truth: topologies, delay assignment,
// monitor selection, shortest-path routing, assumption checks and sampling.

#include "mobius/cumulants.hpp"
#include "mobius/lattice.hpp"
#include "mobius/random.hpp"
#include "mobius/routing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

namespace mobius {

struct TopologyLink {
  std::string id;
  std::string src;
  std::string dst;
  std::optional<LinkDistribution> dist;  // unset: assigned at scenario generation
};

struct Topology {
  bool directed = false;
  std::vector<std::string> nodes;
  std::vector<TopologyLink> links;

  int node_index(const std::string& id) const {
    for (std::size_t j = 0; j < nodes.size(); ++j)
      if (nodes[j] == id) return static_cast<int>(j);
    return -1;
  }

  int link_index(const std::string& id) const {
    for (std::size_t j = 0; j < links.size(); ++j)
      if (links[j].id == id) return static_cast<int>(j);
    return -1;
  }

  void validate() const {
    std::map<std::string, int> seen_nodes, seen_links;
    for (const auto& n : nodes)
      if (seen_nodes[n]++) throw std::invalid_argument("duplicate node id '" + n + "'");
    for (const auto& l : links) {
      if (seen_links[l.id]++) throw std::invalid_argument("duplicate link id '" + l.id + "'");
      if (!seen_nodes.count(l.src) || !seen_nodes.count(l.dst))
        throw std::invalid_argument("link '" + l.id + "' references an unknown node");
      if (l.src == l.dst) throw std::invalid_argument("link '" + l.id + "' is a self-loop");
    }
  }
};

struct Scenario {
  Topology topology;                            // with every used link's distribution set
  std::vector<std::string> monitors;            // empty when paths were user-supplied
  std::vector<std::vector<std::string>> paths;  // link ids per monitor path, in traversal order
  RoutingMatrix routing;                        // columns: used links in topology order
  std::vector<LinkDistribution> link_dists;     // aligned with routing columns
  std::uint64_t seed = 0;
};

inline std::vector<int> common_links(const RoutingMatrix& r, PathSet p) {
  if (p.empty()) throw std::invalid_argument("path set must be nonempty");
  std::vector<int> out;
  for (int l = 0; l < r.links(); ++l)
    if (r.column(l).is_superset_of(p)) out.push_back(l);
  return out;
}

inline std::vector<int> exact_links(const RoutingMatrix& r, PathSet p) {
  if (p.empty()) throw std::invalid_argument("path set must be nonempty");
  std::vector<int> out;
  for (int l = 0; l < r.links(); ++l)
    if (r.column(l) == p) out.push_back(l);
  return out;
}

// f_i(P): sum of kappa_i over the common link set.
template <class T = double>
T true_common_cumulant(const RoutingMatrix& r, std::span<const LinkDistribution> links, PathSet p, int order) {
  T acc(0);
  for (int l : common_links(r, p)) acc += links[l].template cumulant<T>(order);
  return acc;
}

// g_i over the distinct columns of R (the only sets where it can be nonzero).
template <class T = double>
std::map<PathSet, T> true_exact_cumulants(const RoutingMatrix& r, std::span<const LinkDistribution> links, int order) {
  if (static_cast<int>(links.size()) != r.links())
    throw std::invalid_argument("link distribution count does not match routing matrix columns");
  std::map<PathSet, T> out;
  for (int l = 0; l < r.links(); ++l) {
    const PathSet c = r.column(l);
    if (c.empty()) continue;
    auto [it, fresh] = out.try_emplace(c, T(0));
    it->second += links[l].template cumulant<T>(order);
  }
  return out;
}

// All nonempty subsets of columns of R: the sets with nonempty C(P).
inline std::vector<PathSet> column_closure(const RoutingMatrix& r, std::size_t limit = std::size_t{1} << 22) {
  PathSetSet seen;
  for (PathSet c : r.columns()) {
    if (c.empty()) continue;
    if (c.size() >= 40 || (std::size_t{1} << c.size()) > limit)
      throw std::invalid_argument("column closure too large to enumerate");
    for_each_nonempty_subset(c, [&](PathSet q) { seen.insert(q); });
    if (seen.size() > limit) throw std::invalid_argument("column closure too large to enumerate");
  }
  std::vector<PathSet> out(seen.begin(), seen.end());
  sort_canonical(out);
  return out;
}

struct AssumptionReport {
  bool distinct_columns = true;  // Assumption 1
  std::optional<std::pair<int, int>> duplicate_columns;
  bool nonzero_link_cumulants = true;  // Assumption 2
  std::optional<std::pair<int, int>> zero_link_cumulant;  // (link, order)
  bool nonzero_common_cumulants = true;  // Assumption 3
  std::optional<std::pair<PathSet, int>> zero_common_cumulant;  // (set, order)
  bool assumption3_exhaustive = true;

  bool all() const { return distinct_columns && nonzero_link_cumulants && nonzero_common_cumulants; }
};

inline AssumptionReport check_assumptions(const RoutingMatrix& r, std::span<const LinkDistribution> links,
                                          int max_order, std::uint64_t seed = 0) {
  if (static_cast<int>(links.size()) != r.links())
    throw std::invalid_argument("link distribution count does not match routing matrix columns");
  AssumptionReport rep;
  const auto cols = r.columns();
  for (int a = 0; a < r.links() && rep.distinct_columns; ++a)
    for (int b = a + 1; b < r.links(); ++b)
      if (cols[a] == cols[b]) {
        rep.distinct_columns = false;
        rep.duplicate_columns = {a, b};
        break;
      }
  for (int l = 0; l < r.links() && rep.nonzero_link_cumulants; ++l)
    for (int i = 1; i <= max_order; ++i)
      if (links[l].cumulant<double>(i) == 0.0) {
        rep.nonzero_link_cumulants = false;
        rep.zero_link_cumulant = {l, i};
        break;
      }

  auto check_set = [&](PathSet p) {
    for (int i = 1; i <= max_order; ++i)
      if (true_common_cumulant(r, links, p, i) == 0.0) {
        rep.nonzero_common_cumulants = false;
        rep.zero_common_cumulant = {p, i};
        return false;
      }
    return true;
  };

  if (r.paths() <= 20) {
    for (PathSet p : column_closure(r))
      if (!check_set(p)) break;
  } else {
    // Too many sets to enumerate: sample subsets of random columns.
    rep.assumption3_exhaustive = false;
    Rng rng = make_rng(seed, {0xA553u});
    std::uniform_int_distribution<int> pick_col(0, std::max(0, r.links() - 1));
    for (int trial = 0; trial < 20000 && r.links() > 0; ++trial) {
      const PathSet c = cols[pick_col(rng)];
      Mask sub = rng() & c.bits();
      if (sub == 0) sub = c.bits() & (~c.bits() + 1);
      if (sub == 0) continue;
      if (!check_set(PathSet(sub, r.paths()))) break;
    }
  }
  return rep;
}

struct DelayConfig {
  double mean_mu = 10.0;     // link mean delays ~ Normal(mean_mu, sd_mu^2), ms
  double sd_mu = 2.0;
  double min_mu = 0.5;       // truncation point
  double gamma_rate = 0.25;  // Gamma(shape = mu * rate, rate)

  void validate() const {
    if (!(sd_mu >= 0) || !(min_mu > 0) || !(gamma_rate > 0) || !(mean_mu > min_mu))
      throw std::invalid_argument("invalid delay configuration");
  }
};

namespace detail {

struct Arc {
  int to;
  int link;
  double w;
};

// Lexicographically smallest node sequence among minimum-weight paths s -> t.
inline std::vector<int> shortest_path_links(const std::vector<std::vector<Arc>>& out_arcs,
                                            const std::vector<std::vector<Arc>>& in_arcs, int s, int t) {
  const int nn = static_cast<int>(out_arcs.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> d(nn, inf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  d[t] = 0.0;
  pq.emplace(0.0, t);
  while (!pq.empty()) {
    auto [du, u] = pq.top();
    pq.pop();
    if (du > d[u]) continue;
    for (const Arc& a : in_arcs[u]) {  // a.to is the arc's tail here
      const double nd = du + a.w;
      if (nd < d[a.to]) {
        d[a.to] = nd;
        pq.emplace(nd, a.to);
      }
    }
  }
  if (!std::isfinite(d[s])) return {-1};

  std::vector<int> links;
  int u = s;
  while (u != t) {
    int best_node = -1, best_link = -1;
    double best_w = inf;
    for (const Arc& a : out_arcs[u]) {
      if (!std::isfinite(d[a.to])) continue;
      const double slack = a.w + d[a.to] - d[u];
      if (slack > 1e-9 * std::max(1.0, d[u])) continue;
      if (best_node < 0 || a.to < best_node || (a.to == best_node && (a.w < best_w || (a.w == best_w && a.link < best_link)))) {
        best_node = a.to;
        best_link = a.link;
        best_w = a.w;
      }
    }
    if (best_node < 0 || d[best_node] >= d[u]) throw std::runtime_error("shortest-path reconstruction failed");
    links.push_back(best_link);
    u = best_node;
  }
  return links;
}

}  // namespace detail

// Builds the routing matrix over the links used by `paths` (unused links are
// pruned). Every path must be a simple chain of adjacent links.
inline Scenario scenario_from_paths(const Topology& topo, std::vector<std::vector<std::string>> paths,
                                    std::vector<std::string> monitors = {}, std::uint64_t seed = 0,
                                    std::vector<std::string> path_ids = {}) {
  topo.validate();
  if (paths.empty()) throw std::invalid_argument("at least one monitor path is required");
  if (static_cast<int>(paths.size()) > kMaxPaths) throw std::invalid_argument("too many monitor paths");
  std::vector<bool> used(topo.links.size(), false);
  for (std::size_t j = 0; j < paths.size(); ++j) {
    const auto& p = paths[j];
    if (p.empty()) throw std::invalid_argument("monitor path " + std::to_string(j + 1) + " is empty");
    std::vector<std::string> visited;
    std::string at;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const int li = topo.link_index(p[k]);
      if (li < 0) throw std::invalid_argument("monitor path " + std::to_string(j + 1) + " uses unknown link '" + p[k] + "'");
      const auto& link = topo.links[li];
      std::string next;
      if (k == 0) {
        // Orientation of the first link is fixed by the second one, if any.
        at = link.src;
        next = link.dst;
        if (!topo.directed && p.size() > 1) {
          const auto& nl = topo.links[std::max(0, topo.link_index(p[1]))];
          if (link.src == nl.src || link.src == nl.dst) std::swap(at, next);
        }
        visited.push_back(at);
      } else if (link.src == at) {
        next = link.dst;
      } else if (!topo.directed && link.dst == at) {
        next = link.src;
      } else {
        throw std::invalid_argument("monitor path " + std::to_string(j + 1) + " is not a connected chain at link '" + p[k] + "'");
      }
      if (std::find(visited.begin(), visited.end(), next) != visited.end())
        throw std::invalid_argument("monitor path " + std::to_string(j + 1) + " is not simple");
      visited.push_back(next);
      at = next;
      used[li] = true;
    }
  }

  Scenario sc;
  sc.topology = topo;
  sc.monitors = std::move(monitors);
  sc.seed = seed;
  std::vector<int> col_of(topo.links.size(), -1);
  std::vector<std::string> link_ids;
  for (std::size_t l = 0; l < topo.links.size(); ++l)
    if (used[l]) {
      if (!topo.links[l].dist) throw std::invalid_argument("link '" + topo.links[l].id + "' has no delay distribution");
      col_of[l] = static_cast<int>(link_ids.size());
      link_ids.push_back(topo.links[l].id);
      sc.link_dists.push_back(*topo.links[l].dist);
    }
  const int n = static_cast<int>(paths.size()), m = static_cast<int>(link_ids.size());
  std::vector<std::uint8_t> e(static_cast<std::size_t>(n) * m, 0);
  for (int j = 0; j < n; ++j)
    for (const auto& id : paths[j]) e[static_cast<std::size_t>(j) * m + col_of[topo.link_index(id)]] = 1;
  sc.routing = RoutingMatrix(n, m, std::move(e), std::move(path_ids), std::move(link_ids));
  sc.paths = std::move(paths);
  return sc;
}

// Assigns gamma delays to links without an explicit distribution, picks
// monitors uniformly at random and routes one shortest path (mean-delay
// weights) per unordered monitor pair.
inline Scenario generate_scenario(const Topology& skeleton, int n_monitors, const DelayConfig& cfg, std::uint64_t seed) {
  skeleton.validate();
  cfg.validate();
  const int nn = static_cast<int>(skeleton.nodes.size());
  if (n_monitors < 2 || n_monitors > nn) throw std::invalid_argument("monitor count must be between 2 and the node count");
  if (n_monitors * (n_monitors - 1) / 2 > kMaxPaths) throw std::invalid_argument("too many monitor pairs");

  Topology topo = skeleton;
  Rng delay_rng = make_rng(seed, {0xD1u});
  std::normal_distribution<double> mu_dist(cfg.mean_mu, cfg.sd_mu);
  for (auto& l : topo.links) {
    if (l.dist) continue;
    double mu;
    do mu = mu_dist(delay_rng);
    while (!(mu > cfg.min_mu));
    l.dist = LinkDistribution::gamma(mu * cfg.gamma_rate, cfg.gamma_rate);
  }

  Rng mon_rng = make_rng(seed, {0x30u});
  std::vector<int> order(nn);
  for (int j = 0; j < nn; ++j) order[j] = j;
  for (int j = 0; j < n_monitors; ++j) {
    std::uniform_int_distribution<int> pick(j, nn - 1);
    std::swap(order[j], order[pick(mon_rng)]);
  }
  std::vector<int> mons(order.begin(), order.begin() + n_monitors);
  std::sort(mons.begin(), mons.end());

  std::vector<std::vector<detail::Arc>> out_arcs(nn), in_arcs(nn);
  for (std::size_t l = 0; l < topo.links.size(); ++l) {
    const int a = topo.node_index(topo.links[l].src), b = topo.node_index(topo.links[l].dst);
    const double w = topo.links[l].dist->mean();
    out_arcs[a].push_back({b, static_cast<int>(l), w});
    in_arcs[b].push_back({a, static_cast<int>(l), w});
    if (!topo.directed) {
      out_arcs[b].push_back({a, static_cast<int>(l), w});
      in_arcs[a].push_back({b, static_cast<int>(l), w});
    }
  }

  std::vector<std::vector<std::string>> paths;
  std::vector<std::string> path_ids;
  for (int a = 0; a < n_monitors; ++a)
    for (int b = a + 1; b < n_monitors; ++b) {
      const auto links = detail::shortest_path_links(out_arcs, in_arcs, mons[a], mons[b]);
      if (links.size() == 1 && links[0] < 0)
        throw std::invalid_argument("monitors '" + topo.nodes[mons[a]] + "' and '" + topo.nodes[mons[b]] + "' are not connected");
      std::vector<std::string> ids;
      for (int l : links) ids.push_back(topo.links[l].id);
      paths.push_back(std::move(ids));
      path_ids.push_back(topo.nodes[mons[a]] + "-" + topo.nodes[mons[b]]);
    }
  std::vector<std::string> mon_ids;
  for (int v : mons) mon_ids.push_back(topo.nodes[v]);
  return scenario_from_paths(topo, std::move(paths), std::move(mon_ids), seed, std::move(path_ids));
}

// Connected random undirected graph: a random spanning tree plus extra edges
// up to the requested average degree. Links carry no distribution.
inline Topology random_topology(int nodes, double avg_degree, std::uint64_t seed) {
  if (nodes < 2) throw std::invalid_argument("need at least two nodes");
  Topology t;
  for (int j = 0; j < nodes; ++j) t.nodes.push_back("n" + std::to_string(j));
  Rng rng = make_rng(seed, {0x70u});
  std::vector<std::vector<bool>> adj(nodes, std::vector<bool>(nodes, false));
  auto add = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    adj[a][b] = adj[b][a] = true;
    t.links.push_back({"e" + std::to_string(t.links.size()), t.nodes[a], t.nodes[b], std::nullopt});
  };
  for (int j = 1; j < nodes; ++j) add(std::uniform_int_distribution<int>(0, j - 1)(rng), j);
  const auto target = static_cast<std::size_t>(std::llround(avg_degree * nodes / 2.0));
  const std::size_t max_edges = static_cast<std::size_t>(nodes) * (nodes - 1) / 2;
  std::uniform_int_distribution<int> pick(0, nodes - 1);
  while (t.links.size() < std::min(target, max_edges)) {
    const int a = pick(rng), b = pick(rng);
    if (a != b && !adj[a][b]) add(a, b);
  }
  return t;
}

inline constexpr std::size_t kSampleBlockRows = 4096;

// N i.i.d. rows of V = R U. Rows are generated in fixed blocks, each with its
// own derived RNG stream, so the result does not depend on `jobs`.
inline DelaySample sample_delays(const Scenario& sc, std::size_t n_rows, std::uint64_t seed, int jobs = 1) {
  if (n_rows < 1) throw std::invalid_argument("sample size must be positive");
  const RoutingMatrix& r = sc.routing;
  const int n = r.paths(), m = r.links();
  std::vector<std::vector<int>> paths_of_link(m);
  for (int l = 0; l < m; ++l)
    for (int j = 0; j < n; ++j)
      if (r.at(j, l)) paths_of_link[l].push_back(j);

  std::vector<double> cm(n_rows * n, 0.0);
  const std::size_t blocks = (n_rows + kSampleBlockRows - 1) / kSampleBlockRows;
  auto run_block = [&](std::size_t b) {
    Rng rng = make_rng(seed, {0x5A4Du, b});
    const std::size_t lo = b * kSampleBlockRows, hi = std::min(n_rows, lo + kSampleBlockRows);
    for (std::size_t row = lo; row < hi; ++row)
      for (int l = 0; l < m; ++l) {
        const double u = sc.link_dists[l].sample(rng);
        for (int j : paths_of_link[l]) cm[j * n_rows + row] += u;
      }
  };
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(blocks)));
  if (jobs == 1) {
    for (std::size_t b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t b = w; b < blocks; b += jobs) run_block(b);
      });
    for (auto& th : pool) th.join();
  }
  return DelaySample(n_rows, n, std::move(cm), r.path_ids());
}

struct SparsityReport {
  int order = 0;
  std::size_t supp_g = 0;
  std::size_t supp_f = 0;
  double density = 0.0;
  int largest_f_set = 0;
};

inline SparsityReport sparsity_report(const RoutingMatrix& r, std::span<const LinkDistribution> links, int order) {
  SparsityReport rep;
  rep.order = order;
  for (const auto& [p, v] : true_exact_cumulants(r, links, order))
    if (v != 0.0) ++rep.supp_g;
  for (PathSet p : column_closure(r))
    if (true_common_cumulant(r, links, p, order) != 0.0) {
      ++rep.supp_f;
      rep.largest_f_set = std::max(rep.largest_f_set, p.size());
    }
  rep.density = static_cast<double>(rep.supp_f) / (std::ldexp(1.0, r.paths()) - 1.0);
  return rep;
}

}  // namespace mobius
