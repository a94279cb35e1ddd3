#pragma once

// Subset-lattice combinatorics over a set of n monitor paths: path sets,
// multi-indices, superset-sum (zeta) and Moebius transforms, and the dense
// inversion matrices used by the inference algorithms.

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace mobius {

using Mask = std::uint64_t;

inline constexpr int kMaxPaths = 62;

class PathSet {
 public:
  PathSet() = default;

  PathSet(Mask bits, int n) : bits_(bits), n_(n) {
    if (n < 0 || n > kMaxPaths)
      throw std::invalid_argument("path count out of range: " + std::to_string(n));
    if (n < 64 && (bits >> n) != 0)
      throw std::invalid_argument("path set bits exceed universe of " + std::to_string(n));
  }

  static PathSet full(int n) { return PathSet(full_mask(n), n); }

  static PathSet of(std::initializer_list<int> members, int n) {
    return of(std::span<const int>(members.begin(), members.size()), n);
  }

  static PathSet of(std::span<const int> members, int n) {
    Mask m = 0;
    for (int j : members) {
      if (j < 0 || j >= n) throw std::invalid_argument("path index out of range");
      m |= Mask{1} << j;
    }
    return PathSet(m, n);
  }

  static constexpr Mask full_mask(int n) { return n >= 64 ? ~Mask{0} : (Mask{1} << n) - 1; }

  Mask bits() const { return bits_; }
  int universe() const { return n_; }
  int size() const { return std::popcount(bits_); }
  bool empty() const { return bits_ == 0; }
  bool contains(int j) const { return j >= 0 && j < n_ && ((bits_ >> j) & 1U); }
  bool is_subset_of(PathSet o) const { return (bits_ & ~o.bits_) == 0; }
  bool is_superset_of(PathSet o) const { return o.is_subset_of(*this); }

  PathSet operator|(PathSet o) const { return PathSet(bits_ | o.bits_, std::max(n_, o.n_)); }
  PathSet operator&(PathSet o) const { return PathSet(bits_ & o.bits_, std::max(n_, o.n_)); }
  PathSet operator-(PathSet o) const { return PathSet(bits_ & ~o.bits_, std::max(n_, o.n_)); }
  PathSet without(int j) const { return PathSet(bits_ & ~(Mask{1} << j), n_); }
  PathSet with(int j) const { return PathSet(bits_ | (Mask{1} << j), n_); }

  std::vector<int> elements() const {
    std::vector<int> out;
    out.reserve(size());
    for (Mask m = bits_; m != 0; m &= m - 1) out.push_back(std::countr_zero(m));
    return out;
  }

  // 1-based labels, e.g. "{p1,p3}".
  std::string to_string() const {
    std::string s = "{";
    bool first = true;
    for (int j : elements()) {
      if (!first) s += ",";
      s += "p" + std::to_string(j + 1);
      first = false;
    }
    return s + "}";
  }

  friend bool operator==(PathSet a, PathSet b) { return a.bits_ == b.bits_; }

  // Cardinality first, then numeric bitmask.
  friend std::strong_ordering operator<=>(PathSet a, PathSet b) {
    if (auto c = a.size() <=> b.size(); c != 0) return c;
    return a.bits_ <=> b.bits_;
  }

 private:
  Mask bits_ = 0;
  int n_ = 0;
};

struct PathSetHash {
  std::size_t operator()(PathSet p) const noexcept { return std::hash<Mask>{}(p.bits()); }
};

using PathSetSet = std::unordered_set<PathSet, PathSetHash>;

// Non-empty subsets of [0, n) in canonical order.
inline std::vector<PathSet> lattice_sets(int n) {
  if (n > 26) throw std::invalid_argument("full lattice too large to enumerate");
  std::vector<PathSet> out;
  out.reserve((std::size_t{1} << n) - 1);
  for (Mask m = 1; m <= PathSet::full_mask(n); ++m) out.emplace_back(m, n);
  std::sort(out.begin(), out.end());
  return out;
}

inline void sort_canonical(std::vector<PathSet>& sets) { std::sort(sets.begin(), sets.end()); }

// Calls fn(PathSet) for every non-empty subset of p.
template <class Fn>
void for_each_nonempty_subset(PathSet p, Fn&& fn) {
  const Mask full = p.bits();
  for (Mask sub = full; sub != 0; sub = (sub - 1) & full) fn(PathSet(sub, p.universe()));
}

// Calls fn(PathSet) for every size-k subset of p.
template <class Fn>
void for_each_subset_of_size(PathSet p, int k, Fn&& fn) {
  const std::vector<int> el = p.elements();
  const int q = static_cast<int>(el.size());
  if (k < 0 || k > q) return;
  std::vector<int> idx(k);
  for (int j = 0; j < k; ++j) idx[j] = j;
  while (true) {
    Mask m = 0;
    for (int j : idx) m |= Mask{1} << el[j];
    fn(PathSet(m, p.universe()));
    int j = k - 1;
    while (j >= 0 && idx[j] == q - k + j) --j;
    if (j < 0) break;
    ++idx[j];
    for (int r = j + 1; r < k; ++r) idx[r] = idx[r - 1] + 1;
  }
}

inline double binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int j = 1; j <= k; ++j) r = r * (n - k + j) / j;
  return std::round(r);
}

class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> mult) : mult_(std::move(mult)) {
    if (static_cast<int>(mult_.size()) > kMaxPaths)
      throw std::invalid_argument("multi-index longer than supported path count");
    for (int v : mult_)
      if (v < 0) throw std::invalid_argument("multi-index entries must be non-negative");
  }

  int dim() const { return static_cast<int>(mult_.size()); }
  int operator[](int j) const { return mult_[j]; }
  const std::vector<int>& values() const { return mult_; }

  int size() const {
    int s = 0;
    for (int v : mult_) s += v;
    return s;
  }

  PathSet support() const {
    Mask m = 0;
    for (int j = 0; j < dim(); ++j)
      if (mult_[j] >= 1) m |= Mask{1} << j;
    return PathSet(m, dim());
  }

  // Path indices repeated by multiplicity, ascending: (2,1,0) -> [0,0,1].
  std::vector<int> expand() const {
    std::vector<int> out;
    for (int j = 0; j < dim(); ++j)
      for (int r = 0; r < mult_[j]; ++r) out.push_back(j);
    return out;
  }

  std::string to_string() const {
    std::string s = "(";
    for (int j = 0; j < dim(); ++j) s += (j ? "," : "") + std::to_string(mult_[j]);
    return s + ")";
  }

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

 private:
  std::vector<int> mult_;
};

// All multi-indices alpha with supp(alpha) = p and |alpha| = order, in
// lexicographically descending order of multiplicities. The first entry puts
// all excess multiplicity on the lowest-indexed path.
inline std::vector<MultiIndex> representative_multi_indices(PathSet p, int order) {
  const int k = p.size();
  if (k < 1 || order < k) throw std::invalid_argument("no representative multi-index exists");
  const std::vector<int> el = p.elements();
  std::vector<MultiIndex> out;
  std::vector<int> parts(k, 1);
  // Enumerate compositions of `order` into k positive parts.
  std::function<void(int, int)> rec = [&](int pos, int remaining) {
    if (pos == k - 1) {
      parts[pos] = remaining;
      std::vector<int> mult(p.universe(), 0);
      for (int j = 0; j < k; ++j) mult[el[j]] = parts[j];
      out.emplace_back(std::move(mult));
      return;
    }
    for (int v = remaining - (k - 1 - pos); v >= 1; --v) {
      parts[pos] = v;
      rec(pos + 1, remaining - v);
    }
  };
  rec(0, order);
  return out;
}

inline MultiIndex canonical_multi_index(PathSet p, int order) {
  const int k = p.size();
  if (k < 1 || order < k) throw std::invalid_argument("no representative multi-index exists");
  std::vector<int> mult(p.universe(), 0);
  const std::vector<int> el = p.elements();
  for (int j : el) mult[j] = 1;
  mult[el.front()] += order - k;
  return MultiIndex(std::move(mult));
}

// Sparse map from non-empty path sets to values of one cumulant order. An
// empty `domain` means the full lattice; otherwise keys are restricted to it.
template <class T = double>
struct CumulantVector {
  int order = 1;
  int n = 0;
  std::map<PathSet, T> entries;
  std::vector<PathSet> domain;

  CumulantVector() = default;
  CumulantVector(int order_, int n_) : order(order_), n(n_) {
    if (order_ < 1) throw std::invalid_argument("cumulant order must be positive");
  }

  bool full_lattice() const { return domain.empty(); }

  T at(PathSet p) const {
    auto it = entries.find(p);
    return it == entries.end() ? T(0) : it->second;
  }

  void set(PathSet p, T v) {
    if (p.empty()) throw std::invalid_argument("cumulant vectors have no empty-set entry");
    if (!full_lattice() && std::find(domain.begin(), domain.end(), p) == domain.end())
      throw std::invalid_argument("path set " + p.to_string() + " outside declared domain");
    entries[p] = std::move(v);
  }

  // Dense array indexed by bitmask (index 0 unused).
  std::vector<T> dense() const {
    if (n > 26) throw std::invalid_argument("full lattice too large for dense form");
    std::vector<T> v(std::size_t{1} << n, T(0));
    for (const auto& [p, x] : entries) v[p.bits()] = x;
    return v;
  }

  static CumulantVector from_dense(const std::vector<T>& v, int order, int n) {
    CumulantVector out(order, n);
    for (Mask m = 1; m < v.size(); ++m) out.entries.emplace(PathSet(m, n), v[m]);
    return out;
  }

  // Values in canonical set order over the full lattice.
  std::vector<T> ordered_values() const {
    std::vector<T> out;
    for (PathSet p : lattice_sets(n)) out.push_back(at(p));
    return out;
  }
};

// f(P) = sum over Q >= P of g(Q), in O(n 2^n).
template <class T>
void superset_sum_inplace(std::vector<T>& v, int n) {
  for (int b = 0; b < n; ++b) {
    const Mask bit = Mask{1} << b;
    for (Mask m = 0; m < v.size(); ++m)
      if (!(m & bit)) v[m] += v[m | bit];
  }
}

// g(P) = sum over Q >= P of (-1)^{|Q|-|P|} f(Q), in O(n 2^n).
template <class T>
void superset_mobius_inplace(std::vector<T>& v, int n) {
  for (int b = 0; b < n; ++b) {
    const Mask bit = Mask{1} << b;
    for (Mask m = 0; m < v.size(); ++m)
      if (!(m & bit)) v[m] -= v[m | bit];
  }
}

// Direct O(3^n) double loop; reference for the fast sweeps.
template <class T>
std::vector<T> superset_sum_naive(const std::vector<T>& g, int n, bool alternating) {
  const Mask full = PathSet::full_mask(n);
  std::vector<T> out(g.size(), T(0));
  for (Mask p = 1; p <= full; ++p) {
    const Mask rest = full & ~p;
    T acc(0);
    for (Mask extra = rest;; extra = (extra - 1) & rest) {
      const Mask q = p | extra;
      if (alternating && (std::popcount(extra) & 1))
        acc -= g[q];
      else
        acc += g[q];
      if (extra == 0) break;
    }
    out[p] = acc;
  }
  return out;
}

template <class T>
CumulantVector<T> mobius_forward(const CumulantVector<T>& g) {
  if (!g.full_lattice()) throw std::invalid_argument("mobius_forward needs a full-lattice vector");
  std::vector<T> v = g.dense();
  superset_sum_inplace(v, g.n);
  return CumulantVector<T>::from_dense(v, g.order, g.n);
}

template <class T>
CumulantVector<T> mobius_inverse(const CumulantVector<T>& f) {
  if (!f.full_lattice()) throw std::invalid_argument("mobius_inverse needs a full-lattice vector");
  std::vector<T> v = f.dense();
  superset_mobius_inplace(v, f.n);
  return CumulantVector<T>::from_dense(v, f.order, f.n);
}

inline void require_distinct_nonempty(std::span<const PathSet> domain) {
  PathSetSet seen;
  for (PathSet p : domain) {
    if (p.empty()) throw std::invalid_argument("empty path set in domain");
    if (!seen.insert(p).second)
      throw std::invalid_argument("duplicate path set " + p.to_string() + " in domain");
  }
}

// X(P, Q) = (-1)^{|Q|-|P|} when Q contains P, else 0.
inline Eigen::MatrixXd inversion_matrix(std::span<const PathSet> domain) {
  require_distinct_nonempty(domain);
  const auto k = static_cast<Eigen::Index>(domain.size());
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < k; ++c)
      if (domain[c].is_superset_of(domain[r]))
        x(r, c) = ((domain[c].size() - domain[r].size()) % 2) ? -1.0 : 1.0;
  return x;
}

// Z(P, Q) = 1 when Q contains P.
inline Eigen::MatrixXd zeta_matrix(std::span<const PathSet> domain) {
  require_distinct_nonempty(domain);
  const auto k = static_cast<Eigen::Index>(domain.size());
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < k; ++c)
      if (domain[c].is_superset_of(domain[r])) z(r, c) = 1.0;
  return z;
}

inline bool is_antichain(std::span<const PathSet> sets) {
  for (std::size_t a = 0; a < sets.size(); ++a)
    for (std::size_t b = 0; b < sets.size(); ++b)
      if (a != b && sets[a].is_subset_of(sets[b])) return false;
  return true;
}

struct ModifiedInversion {
  std::vector<PathSet> rows;  // support-estimate sets with |P| <= s
  std::vector<PathSet> cols;  // rows, then bounding sets larger than s
  Eigen::MatrixXd x;
};

// Moebius inversion restricted to small sets. Every bounding set B larger than
// s stands in for all of its unmeasured non-maximal subsets through the
// coefficient -(-1)^{s-|P|} C(|B|-|P|-1, s-|P|); bounding sets of size <= s
// keep their ordinary coefficient.
inline ModifiedInversion modified_inversion_matrix(std::span<const PathSet> support_estimate,
                                                   std::span<const PathSet> bounding, int s) {
  if (s < 1) throw std::invalid_argument("size threshold must be positive");
  if (!is_antichain(bounding)) throw std::invalid_argument("bounding topology must be an antichain");
  require_distinct_nonempty(support_estimate);

  ModifiedInversion out;
  for (PathSet p : support_estimate)
    if (p.size() <= s) out.rows.push_back(p);
  sort_canonical(out.rows);
  out.cols = out.rows;
  std::vector<PathSet> large;
  for (PathSet b : bounding)
    if (b.size() > s) large.push_back(b);
  sort_canonical(large);
  out.cols.insert(out.cols.end(), large.begin(), large.end());

  const auto nr = static_cast<Eigen::Index>(out.rows.size());
  const auto nc = static_cast<Eigen::Index>(out.cols.size());
  out.x = Eigen::MatrixXd::Zero(nr, nc);
  for (Eigen::Index r = 0; r < nr; ++r) {
    const PathSet p = out.rows[r];
    for (Eigen::Index c = 0; c < nc; ++c) {
      const PathSet q = out.cols[c];
      if (!q.is_superset_of(p)) continue;
      if (q.size() <= s) {
        out.x(r, c) = ((q.size() - p.size()) % 2) ? -1.0 : 1.0;
      } else {
        const int gap = s - p.size();
        const double sign = (gap % 2) ? -1.0 : 1.0;
        out.x(r, c) = -sign * binomial(q.size() - p.size() - 1, gap);
      }
    }
  }
  return out;
}

}  // namespace mobius
