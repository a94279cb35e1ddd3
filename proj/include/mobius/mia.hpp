#pragma once

// The Moebius Inference Algorithm: estimate the common cumulant vector f,
// invert it to the exact cumulant vector g, and read routing-matrix columns
// off the support of g.

#include "mobius/cumulants.hpp"
#include "mobius/lattice.hpp"
#include "mobius/routing.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace mobius {

enum class MiaMode { Exact, Data, Sparse };

inline std::string mode_name(MiaMode m) {
  switch (m) {
    case MiaMode::Exact: return "exact";
    case MiaMode::Data: return "data";
    case MiaMode::Sparse: return "sparse";
  }
  return "";
}

struct SetTestRecord {
  PathSet set;
  double f_mean = 0.0;
  double f_std_error = 0.0;
  double g_mean = 0.0;
  double g_std_error = 0.0;
  double p_value = 1.0;
  bool accepted = false;
};

struct MiaResult {
  MiaMode mode = MiaMode::Exact;
  int order = 0;
  int n = 0;
  std::vector<std::string> path_ids;
  std::map<PathSet, double> f;
  std::map<PathSet, double> g;
  std::vector<PathSet> columns;  // canonical order, no duplicates
  std::vector<SetTestRecord> tests;

  RoutingMatrix r_hat() const { return RoutingMatrix::from_columns(columns, n, path_ids); }
};

// Canonically ordered, duplicate-free list of the sets accepted by `decide`.
template <class Decide>
std::vector<PathSet> reconstruct(std::span<const PathSet> sets, Decide&& decide) {
  std::vector<PathSet> out;
  for (PathSet p : sets)
    if (decide(p)) out.push_back(p);
  sort_canonical(out);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

template <class T>
struct ExactMia {
  CumulantVector<T> f;
  CumulantVector<T> g;
  std::vector<PathSet> columns;
};

template <class T>
bool exact_nonzero(const T& v, const T& scale) {
  if constexpr (std::is_floating_point_v<T>) {
    return std::abs(v) > 1e-9 * std::max(1.0, static_cast<double>(scale));
  } else {
    (void)scale;
    return v != 0;
  }
}

// Exact mode with a cumulant oracle kappa(alpha). f is filled with one
// canonical representative per set, g = X f via the fast transform.
template <class T, class Oracle>
ExactMia<T> mia_exact(int n, Oracle&& kappa, int order = -1) {
  if (n < 1) throw std::invalid_argument("need at least one path");
  if (order < 0) order = n;
  if (order < n) throw std::invalid_argument("order must be at least the path count for full inference");
  ExactMia<T> out;
  std::vector<T> v(std::size_t{1} << n, T(0));
  for (Mask m = 1; m < v.size(); ++m) v[m] = kappa(canonical_multi_index(PathSet(m, n), order));
  out.f = CumulantVector<T>::from_dense(v, order, n);
  superset_mobius_inplace(v, n);
  out.g = CumulantVector<T>::from_dense(v, order, n);
  T scale(0);
  for (Mask m = 1; m < v.size(); ++m) {
    const T a = v[m] < T(0) ? T(-v[m]) : v[m];
    if (a > scale) scale = a;
  }
  const auto sets = lattice_sets(n);
  out.columns = reconstruct(std::span<const PathSet>(sets), [&](PathSet p) { return exact_nonzero<T>(v[p.bits()], scale); });
  return out;
}

template <class T = double>
ExactMia<T> mia_exact(const RoutingMatrix& r, std::span<const LinkDistribution> links, int order = -1) {
  return mia_exact<T>(r.paths(), [&](const MultiIndex& a) { return mixture_cumulant<T>(r, links, a); }, order);
}

template <class T>
double to_double(const T& v) {
  if constexpr (std::is_floating_point_v<T>)
    return static_cast<double>(v);
  else
    return v.template convert_to<double>();
}

template <class T>
MiaResult to_result(const ExactMia<T>& e, std::vector<std::string> path_ids = {}) {
  MiaResult r;
  r.mode = MiaMode::Exact;
  r.order = e.f.order;
  r.n = e.f.n;
  r.path_ids = std::move(path_ids);
  if (r.path_ids.empty())
    for (int j = 0; j < r.n; ++j) r.path_ids.push_back("p" + std::to_string(j + 1));
  for (const auto& [p, v] : e.f.entries) r.f[p] = to_double(v);
  for (const auto& [p, v] : e.g.entries) r.g[p] = to_double(v);
  r.columns = e.columns;
  return r;
}

inline constexpr int kMaxFullOrderPaths = 4;

using SetDecider = std::function<bool(PathSet, const EstimateWithSpread&)>;

// Data mode: per replicate, estimate f by averaged k-statistics and invert;
// each g(P) is then tested on its replicate values. `decide` replaces the
// t-test when set (used to plug in stub tests).
inline MiaResult mia_data(const DelaySample& sample, const NonzeroTestConfig& cfg, const SetDecider& decide = {}) {
  const int n = sample.paths();
  if (n < 1) throw std::invalid_argument("sample has no paths");
  if (n > kMaxFullOrderPaths)
    throw std::invalid_argument("full-order inference supports at most " + std::to_string(kMaxFullOrderPaths) +
                                " paths; use the sparse pipeline for larger networks");
  cfg.validate();
  const auto sets = lattice_sets(n);
  std::vector<CumulantRequest> req;
  for (PathSet p : sets) req.push_back({p, n});

  const auto per_rep = map_replicates(sample, cfg, [&](const DelaySample& rep) {
    const auto f = common_cumulant_estimates(rep, req);
    std::vector<double> v(std::size_t{1} << n, 0.0);
    for (std::size_t k = 0; k < sets.size(); ++k) v[sets[k].bits()] = f[k];
    superset_mobius_inplace(v, n);
    std::vector<double> both = f;
    for (PathSet p : sets) both.push_back(v[p.bits()]);
    return both;
  });
  const auto summary = summarize_replicates(per_rep);

  MiaResult r;
  r.mode = MiaMode::Data;
  r.order = n;
  r.n = n;
  r.path_ids = sample.path_ids();
  const std::size_t k = sets.size();
  for (std::size_t e = 0; e < k; ++e) {
    const auto& fs = summary[e];
    const auto& gs = summary[k + e];
    SetTestRecord rec;
    rec.set = sets[e];
    rec.f_mean = fs.mean;
    rec.f_std_error = fs.std_error;
    rec.g_mean = gs.mean;
    rec.g_std_error = gs.std_error;
    const auto d = nonzero_test(gs, cfg.p_threshold);
    rec.p_value = d.p_value;
    rec.accepted = decide ? decide(sets[e], gs) : d.nonzero;
    r.f[sets[e]] = fs.mean;
    r.g[sets[e]] = gs.mean;
    if (rec.accepted) r.columns.push_back(sets[e]);
    r.tests.push_back(rec);
  }
  sort_canonical(r.columns);
  return r;
}

}  // namespace mobius
