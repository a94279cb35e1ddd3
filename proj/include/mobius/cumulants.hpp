#pragma once

// Cumulants of link-delay distributions, multivariate k-statistics up to
// order four, the averaged common-cumulant estimator, resampling schemes and
// the Nonzero hypothesis test.

#include "mobius/lattice.hpp"
#include "mobius/random.hpp"
#include "mobius/routing.hpp"
#include "mobius/stats.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mobius {

using Rational = boost::multiprecision::cpp_rational;

class LinkDistribution {
 public:
  enum class Kind { Normal, Exponential, Gamma };

  static LinkDistribution normal(double mean, double variance) {
    if (!(variance > 0)) throw std::invalid_argument("normal variance must be positive");
    return LinkDistribution(Kind::Normal, mean, variance);
  }
  // `rate` is the intensity lambda of the density lambda * exp(-lambda x).
  static LinkDistribution exponential(double rate) {
    if (!(rate > 0)) throw std::invalid_argument("exponential rate must be positive");
    return LinkDistribution(Kind::Exponential, rate, 0.0);
  }
  static LinkDistribution gamma(double shape, double rate) {
    if (!(shape > 0) || !(rate > 0)) throw std::invalid_argument("gamma shape and rate must be positive");
    return LinkDistribution(Kind::Gamma, shape, rate);
  }

  Kind kind() const { return kind_; }
  // Normal: (mean, variance); Exponential: (rate, unused); Gamma: (shape, rate).
  double first() const { return a_; }
  double second() const { return b_; }

  std::string kind_name() const {
    switch (kind_) {
      case Kind::Normal: return "normal";
      case Kind::Exponential: return "exponential";
      case Kind::Gamma: return "gamma";
    }
    return "";
  }

  // i-th cumulant; T is double or Rational (parameters converted exactly).
  template <class T = double>
  T cumulant(int i) const {
    if (i < 1) throw std::invalid_argument("cumulant order must be positive");
    T fact(1);
    for (int j = 2; j < i; ++j) fact *= T(j);
    switch (kind_) {
      case Kind::Normal:
        if (i == 1) return T(a_);
        if (i == 2) return T(b_);
        return T(0);
      case Kind::Exponential: {
        T rate(a_), p(1);
        for (int j = 0; j < i; ++j) p *= rate;
        return fact / p;
      }
      case Kind::Gamma: {
        T rate(b_), p(1);
        for (int j = 0; j < i; ++j) p *= rate;
        return T(a_) * fact / p;
      }
    }
    return T(0);
  }

  double mean() const { return cumulant<double>(1); }

  template <class Gen>
  double sample(Gen& g) const {
    switch (kind_) {
      case Kind::Normal: return std::normal_distribution<double>(a_, std::sqrt(b_))(g);
      case Kind::Exponential: return std::exponential_distribution<double>(a_)(g);
      case Kind::Gamma: return std::gamma_distribution<double>(a_, 1.0 / b_)(g);
    }
    return 0.0;
  }

  friend bool operator==(const LinkDistribution&, const LinkDistribution&) = default;

 private:
  LinkDistribution(Kind k, double a, double b) : kind_(k), a_(a), b_(b) {}
  Kind kind_ = Kind::Normal;
  double a_ = 0.0;
  double b_ = 1.0;
};

inline double analytic_cumulant(const LinkDistribution& d, int i) { return d.cumulant<double>(i); }

// kappa_alpha(R U) for independent links U: the sum of kappa_{|alpha|}(U_l)
// over links traversed by every path in supp(alpha).
template <class T = double>
T mixture_cumulant(const RoutingMatrix& r, std::span<const LinkDistribution> links, const MultiIndex& alpha) {
  if (static_cast<int>(links.size()) != r.links())
    throw std::invalid_argument("link distribution count does not match routing matrix columns");
  if (alpha.dim() != r.paths()) throw std::invalid_argument("multi-index length does not match path count");
  const int order = alpha.size();
  if (order < 1) throw std::invalid_argument("multi-index must have positive size");
  const PathSet supp = alpha.support();
  T acc(0);
  for (int l = 0; l < r.links(); ++l)
    if (r.column(l).is_superset_of(supp)) acc += links[l].template cumulant<T>(order);
  return acc;
}

// N observations of n path delays, stored column-major.
class DelaySample {
 public:
  DelaySample() = default;

  DelaySample(std::size_t rows, int paths, std::vector<double> column_major, std::vector<std::string> path_ids = {})
      : rows_(rows), paths_(paths), data_(std::move(column_major)), path_ids_(std::move(path_ids)) {
    if (paths < 0 || paths > kMaxPaths) throw std::invalid_argument("path count out of range");
    if (data_.size() != rows * static_cast<std::size_t>(paths))
      throw std::invalid_argument("sample data size does not match dimensions");
    for (double v : data_)
      if (!std::isfinite(v)) throw std::invalid_argument("sample contains missing or non-finite values");
    if (path_ids_.empty())
      for (int j = 0; j < paths; ++j) path_ids_.push_back("p" + std::to_string(j + 1));
    if (static_cast<int>(path_ids_.size()) != paths)
      throw std::invalid_argument("path label count does not match sample columns");
  }

  static DelaySample from_rows(const std::vector<std::vector<double>>& rows, std::vector<std::string> path_ids = {}) {
    const int n = rows.empty() ? static_cast<int>(path_ids.size()) : static_cast<int>(rows.front().size());
    std::vector<double> cm(rows.size() * n);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (static_cast<int>(rows[r].size()) != n) throw std::invalid_argument("ragged sample rows");
      for (int j = 0; j < n; ++j) cm[j * rows.size() + r] = rows[r][j];
    }
    return DelaySample(rows.size(), n, std::move(cm), std::move(path_ids));
  }

  std::size_t rows() const { return rows_; }
  int paths() const { return paths_; }
  double at(std::size_t r, int j) const { return data_[j * rows_ + r]; }
  std::span<const double> column(int j) const { return {data_.data() + j * rows_, rows_}; }
  const std::vector<std::string>& path_ids() const { return path_ids_; }
  const std::vector<double>& column_major() const { return data_; }

  DelaySample select_rows(std::span<const std::size_t> idx) const {
    std::vector<double> cm(idx.size() * paths_);
    for (int j = 0; j < paths_; ++j) {
      const double* src = data_.data() + j * rows_;
      double* dst = cm.data() + j * idx.size();
      for (std::size_t r = 0; r < idx.size(); ++r) dst[r] = src[idx[r]];
    }
    return DelaySample(idx.size(), paths_, std::move(cm), path_ids_);
  }

 private:
  std::size_t rows_ = 0;
  int paths_ = 0;
  std::vector<double> data_;
  std::vector<std::string> path_ids_;
};

inline constexpr int kMaxKStatisticOrder = 4;

// Centers a sample once and evaluates k-statistics from central product sums:
//   k2 = S_ab / (N-1)
//   k3 = N S_abc / ((N-1)(N-2))
//   k4 = N [(N+1) S_abcd - (N-1)/N (S_ab S_cd + S_ac S_bd + S_ad S_bc)] / ((N-1)(N-2)(N-3))
// Not thread-safe: pair sums are cached lazily.
class KStatistics {
 public:
  explicit KStatistics(const DelaySample& s) : rows_(s.rows()), paths_(s.paths()) {
    means_.resize(paths_);
    centered_.resize(s.column_major().size());
    for (int j = 0; j < paths_; ++j) {
      auto col = s.column(j);
      double m = 0.0;
      for (double v : col) m += v;
      m = rows_ ? m / static_cast<double>(rows_) : 0.0;
      means_[j] = m;
      double* dst = centered_.data() + j * rows_;
      for (std::size_t r = 0; r < rows_; ++r) dst[r] = col[r] - m;
    }
    pair_sums_.assign(static_cast<std::size_t>(paths_) * paths_, std::numeric_limits<double>::quiet_NaN());
  }

  std::size_t rows() const { return rows_; }
  int paths() const { return paths_; }

  double k_statistic(const MultiIndex& alpha) const {
    if (alpha.dim() != paths_) throw std::invalid_argument("multi-index length does not match sample paths");
    const std::vector<int> v = alpha.expand();
    const int order = static_cast<int>(v.size());
    if (order < 1) throw std::invalid_argument("multi-index must have positive size");
    if (order > kMaxKStatisticOrder) throw std::invalid_argument("order not supported");
    if (order == 1) {
      if (rows_ < 1) throw std::invalid_argument("sample too small");
      return means_[v[0]];
    }
    if (rows_ <= static_cast<std::size_t>(order)) throw std::invalid_argument("sample too small");
    const double n = static_cast<double>(rows_);
    switch (order) {
      case 2: return pair(v[0], v[1]) / (n - 1.0);
      case 3: return n * product_sum(v) / ((n - 1.0) * (n - 2.0));
      default: {
        const double s4 = product_sum(v);
        const double pp = pair(v[0], v[1]) * pair(v[2], v[3]) + pair(v[0], v[2]) * pair(v[1], v[3]) +
                          pair(v[0], v[3]) * pair(v[1], v[2]);
        return n * ((n + 1.0) * s4 - (n - 1.0) / n * pp) / ((n - 1.0) * (n - 2.0) * (n - 3.0));
      }
    }
  }

  // Simple average of k-statistics over every representative multi-index.
  double common_cumulant(PathSet p, int order) const {
    if (order > kMaxKStatisticOrder) throw std::invalid_argument("order not supported");
    const auto reps = representative_multi_indices(PathSet(p.bits(), paths_), order);
    double acc = 0.0;
    for (const auto& a : reps) acc += k_statistic(a);
    return acc / static_cast<double>(reps.size());
  }

 private:
  const double* col(int j) const { return centered_.data() + j * rows_; }

  double pair(int a, int b) const {
    double& slot = pair_sums_[static_cast<std::size_t>(a) * paths_ + b];
    if (std::isnan(slot)) {
      const double *x = col(a), *y = col(b);
      double s = 0.0;
      for (std::size_t r = 0; r < rows_; ++r) s += x[r] * y[r];
      slot = s;
      pair_sums_[static_cast<std::size_t>(b) * paths_ + a] = s;
    }
    return slot;
  }

  double product_sum(const std::vector<int>& v) const {
    double s = 0.0;
    if (v.size() == 3) {
      const double *x = col(v[0]), *y = col(v[1]), *z = col(v[2]);
      for (std::size_t r = 0; r < rows_; ++r) s += x[r] * y[r] * z[r];
    } else {
      const double *x = col(v[0]), *y = col(v[1]), *z = col(v[2]), *w = col(v[3]);
      for (std::size_t r = 0; r < rows_; ++r) s += x[r] * y[r] * z[r] * w[r];
    }
    return s;
  }

  std::size_t rows_;
  int paths_;
  std::vector<double> means_;
  std::vector<double> centered_;
  mutable std::vector<double> pair_sums_;
};

inline double k_statistic(const DelaySample& sample, const MultiIndex& alpha) {
  return KStatistics(sample).k_statistic(alpha);
}

inline double common_cumulant_estimate(const DelaySample& sample, PathSet p, int order) {
  if (p.size() > order) throw std::invalid_argument("no representative multi-index exists");
  return KStatistics(sample).common_cumulant(p, order);
}

struct CumulantRequest {
  PathSet set;
  int order = 1;
};

inline std::vector<double> common_cumulant_estimates(const DelaySample& sample, std::span<const CumulantRequest> req) {
  KStatistics ks(sample);
  std::vector<double> out;
  out.reserve(req.size());
  for (const auto& q : req) out.push_back(ks.common_cumulant(q.set, q.order));
  return out;
}

enum class ResampleMethod { SampleSplit, Bootstrap };

struct NonzeroTestConfig {
  ResampleMethod method = ResampleMethod::Bootstrap;
  int replicates = 50;
  double p_threshold = 0.01;
  std::uint64_t seed = 0;

  void validate() const {
    if (replicates < 2) throw std::invalid_argument("at least two replicates are required");
    if (!(p_threshold > 0.0 && p_threshold < 1.0)) throw std::invalid_argument("p-value threshold must lie in (0,1)");
  }
};

struct EstimateWithSpread {
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<double> replicates;

  static EstimateWithSpread from_replicates(std::vector<double> reps) {
    EstimateWithSpread e;
    e.mean = stats::mean(reps);
    e.std_error = stats::stddev(reps) / std::sqrt(static_cast<double>(reps.size()));
    e.replicates = std::move(reps);
    return e;
  }

  // Spread of a single replicate.
  double stddev() const { return std_error * std::sqrt(static_cast<double>(replicates.size())); }
};

// Row indices of replicate b: contiguous blocks in original order for
// splitting (sizes differ by at most one), N draws with replacement for the
// bootstrap.
inline std::vector<std::size_t> replicate_rows(std::size_t n_rows, const NonzeroTestConfig& cfg, int b) {
  cfg.validate();
  const auto m = static_cast<std::size_t>(cfg.replicates);
  std::vector<std::size_t> idx;
  if (cfg.method == ResampleMethod::SampleSplit) {
    if (n_rows < 2 * m)
      throw std::invalid_argument("sample of " + std::to_string(n_rows) + " rows too small for " +
                                  std::to_string(m) + " splits");
    const std::size_t base = n_rows / m, extra = n_rows % m;
    const std::size_t bb = static_cast<std::size_t>(b);
    const std::size_t begin = bb * base + std::min(bb, extra);
    const std::size_t len = base + (bb < extra ? 1 : 0);
    idx.resize(len);
    for (std::size_t r = 0; r < len; ++r) idx[r] = begin + r;
  } else {
    if (n_rows == 0) throw std::invalid_argument("cannot bootstrap an empty sample");
    Rng rng = make_rng(cfg.seed, {0xB007u, static_cast<std::uint64_t>(b)});
    std::uniform_int_distribution<std::size_t> pick(0, n_rows - 1);
    idx.resize(n_rows);
    for (auto& r : idx) r = pick(rng);
  }
  return idx;
}

// Evaluates fn on every replicate; result[b] is fn's output on replicate b.
template <class Fn>
std::vector<std::vector<double>> map_replicates(const DelaySample& sample, const NonzeroTestConfig& cfg, Fn&& fn) {
  cfg.validate();
  std::vector<std::vector<double>> out;
  out.reserve(cfg.replicates);
  for (int b = 0; b < cfg.replicates; ++b) {
    const auto idx = replicate_rows(sample.rows(), cfg, b);
    out.push_back(fn(sample.select_rows(idx)));
  }
  return out;
}

// Transposes per-replicate vectors into one spread summary per entry.
inline std::vector<EstimateWithSpread> summarize_replicates(const std::vector<std::vector<double>>& per_rep) {
  if (per_rep.empty()) return {};
  const std::size_t k = per_rep.front().size();
  std::vector<EstimateWithSpread> out;
  out.reserve(k);
  for (std::size_t e = 0; e < k; ++e) {
    std::vector<double> reps;
    reps.reserve(per_rep.size());
    for (const auto& r : per_rep) reps.push_back(r[e]);
    out.push_back(EstimateWithSpread::from_replicates(std::move(reps)));
  }
  return out;
}

inline std::vector<EstimateWithSpread> resample_estimates(const DelaySample& sample,
                                                          std::span<const CumulantRequest> req,
                                                          const NonzeroTestConfig& cfg) {
  auto per_rep = map_replicates(sample, cfg, [&](const DelaySample& rep) { return common_cumulant_estimates(rep, req); });
  return summarize_replicates(per_rep);
}

inline EstimateWithSpread resample_estimates(const DelaySample& sample, PathSet p, int order,
                                             const NonzeroTestConfig& cfg) {
  const CumulantRequest r{p, order};
  return resample_estimates(sample, std::span<const CumulantRequest>(&r, 1), cfg).front();
}

struct NonzeroDecision {
  bool nonzero = false;
  double p_value = 1.0;
};

// Two-sided one-sample t-test of "replicate mean = 0" with M-1 degrees of
// freedom. Constant replicates: p = 1 if they are all zero, else p = 0.
inline NonzeroDecision nonzero_test(const EstimateWithSpread& est, double p_threshold) {
  const std::size_t m = est.replicates.size();
  if (m < 2) throw std::invalid_argument("nonzero test needs at least two replicates");
  if (est.std_error == 0.0) {
    if (est.mean == 0.0) return {false, 1.0};
    return {true, 0.0};
  }
  const double t = est.mean / est.std_error;
  const double p = stats::student_t_two_sided(t, static_cast<double>(m - 1));
  return {p < p_threshold, p};
}

inline NonzeroDecision nonzero_test(const EstimateWithSpread& est, const NonzeroTestConfig& cfg) {
  cfg.validate();
  return nonzero_test(est, cfg.p_threshold);
}

}  // namespace mobius
