#pragma once

#include "mobius/lattice.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mobius {

// Binary n x m incidence of monitor paths (rows) and links (columns).
class RoutingMatrix {
 public:
  RoutingMatrix() = default;

  RoutingMatrix(int n, int m, std::vector<std::uint8_t> entries, std::vector<std::string> path_ids = {},
                std::vector<std::string> link_ids = {})
      : n_(n), m_(m), entries_(std::move(entries)), path_ids_(std::move(path_ids)), link_ids_(std::move(link_ids)) {
    if (n < 0 || m < 0 || n > kMaxPaths) throw std::invalid_argument("routing matrix dimensions out of range");
    if (entries_.size() != static_cast<std::size_t>(n) * m)
      throw std::invalid_argument("routing matrix entry count does not match dimensions");
    for (auto v : entries_)
      if (v > 1) throw std::invalid_argument("routing matrix entries must be 0 or 1");
    if (path_ids_.empty())
      for (int j = 0; j < n; ++j) path_ids_.push_back("p" + std::to_string(j + 1));
    if (link_ids_.empty())
      for (int l = 0; l < m; ++l) link_ids_.push_back("l" + std::to_string(l + 1));
    if (static_cast<int>(path_ids_.size()) != n || static_cast<int>(link_ids_.size()) != m)
      throw std::invalid_argument("routing matrix label count does not match dimensions");
  }

  static RoutingMatrix from_rows(const std::vector<std::vector<int>>& rows) {
    const int n = static_cast<int>(rows.size());
    const int m = n ? static_cast<int>(rows.front().size()) : 0;
    std::vector<std::uint8_t> e;
    for (const auto& row : rows) {
      if (static_cast<int>(row.size()) != m) throw std::invalid_argument("ragged routing matrix rows");
      for (int v : row) e.push_back(static_cast<std::uint8_t>(v));
    }
    return RoutingMatrix(n, m, std::move(e));
  }

  // One column per path set; column order follows `cols`.
  static RoutingMatrix from_columns(const std::vector<PathSet>& cols, int n, std::vector<std::string> path_ids = {}) {
    const int m = static_cast<int>(cols.size());
    std::vector<std::uint8_t> e(static_cast<std::size_t>(n) * m, 0);
    for (int l = 0; l < m; ++l)
      for (int j : cols[l].elements()) e[static_cast<std::size_t>(j) * m + l] = 1;
    return RoutingMatrix(n, m, std::move(e), std::move(path_ids));
  }

  int paths() const { return n_; }
  int links() const { return m_; }
  int at(int j, int l) const { return entries_[static_cast<std::size_t>(j) * m_ + l]; }
  const std::vector<std::uint8_t>& entries() const { return entries_; }
  const std::vector<std::string>& path_ids() const { return path_ids_; }
  const std::vector<std::string>& link_ids() const { return link_ids_; }

  // Characteristic set of link l: the paths that traverse it.
  PathSet column(int l) const {
    Mask m = 0;
    for (int j = 0; j < n_; ++j)
      if (at(j, l)) m |= Mask{1} << j;
    return PathSet(m, n_);
  }

  std::vector<PathSet> columns() const {
    std::vector<PathSet> out;
    out.reserve(m_);
    for (int l = 0; l < m_; ++l) out.push_back(column(l));
    return out;
  }

  friend bool operator==(const RoutingMatrix& a, const RoutingMatrix& b) {
    return a.n_ == b.n_ && a.m_ == b.m_ && a.entries_ == b.entries_;
  }

 private:
  int n_ = 0;
  int m_ = 0;
  std::vector<std::uint8_t> entries_;
  std::vector<std::string> path_ids_;
  std::vector<std::string> link_ids_;
};

}  // namespace mobius
