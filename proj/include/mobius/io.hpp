#pragma once

// File formats: topology and scenario JSON, sample CSV, and JSON encodings of
// cumulant vectors and routing matrices.

#include "mobius/cumulants.hpp"
#include "mobius/netmodel.hpp"

#include <json.hpp>

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mobius {

using json = nlohmann::ordered_json;

// Bad input: malformed files, schema violations, missing files.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace io_detail {

inline const json& field(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw InputError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw InputError(path + "." + key + ": missing");
  return *it;
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw InputError(path + ": expected a number");
  return j.get<double>();
}

inline std::string text(const json& j, const std::string& path) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw InputError(path + ": expected a string");
}

inline const json& array(const json& j, const std::string& path) {
  if (!j.is_array()) throw InputError(path + ": expected an array");
  return j;
}

}  // namespace io_detail

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline void write_json_file(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

inline json dist_to_json(const LinkDistribution& d) {
  switch (d.kind()) {
    case LinkDistribution::Kind::Normal: return {{"kind", "normal"}, {"mean", d.first()}, {"variance", d.second()}};
    case LinkDistribution::Kind::Exponential: return {{"kind", "exponential"}, {"rate", d.first()}};
    case LinkDistribution::Kind::Gamma: return {{"kind", "gamma"}, {"shape", d.first()}, {"rate", d.second()}};
  }
  return {};
}

inline LinkDistribution dist_from_json(const json& j, const std::string& path) {
  using namespace io_detail;
  const std::string kind = text(field(j, "kind", path), path + ".kind");
  try {
    if (kind == "normal")
      return LinkDistribution::normal(number(field(j, "mean", path), path + ".mean"),
                                      number(field(j, "variance", path), path + ".variance"));
    if (kind == "exponential") return LinkDistribution::exponential(number(field(j, "rate", path), path + ".rate"));
    if (kind == "gamma")
      return LinkDistribution::gamma(number(field(j, "shape", path), path + ".shape"),
                                     number(field(j, "rate", path), path + ".rate"));
  } catch (const InputError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw InputError(path + ": " + e.what());
  }
  throw InputError(path + ".kind: unknown distribution '" + kind + "'");
}

inline json topology_to_json(const Topology& t) {
  json links = json::array();
  for (const auto& l : t.links) {
    json e = {{"id", l.id}, {"src", l.src}, {"dst", l.dst}};
    if (l.dist) e["dist"] = dist_to_json(*l.dist);
    links.push_back(std::move(e));
  }
  return {{"directed", t.directed}, {"nodes", t.nodes}, {"links", std::move(links)}};
}

inline Topology topology_from_json(const json& j, const std::string& path = "$") {
  using namespace io_detail;
  Topology t;
  if (j.is_object() && j.contains("directed")) {
    if (!j["directed"].is_boolean()) throw InputError(path + ".directed: expected a boolean");
    t.directed = j["directed"].get<bool>();
  }
  const json& nodes = array(field(j, "nodes", path), path + ".nodes");
  for (std::size_t k = 0; k < nodes.size(); ++k) t.nodes.push_back(text(nodes[k], path + ".nodes[" + std::to_string(k) + "]"));
  const json& links = array(field(j, "links", path), path + ".links");
  for (std::size_t k = 0; k < links.size(); ++k) {
    const std::string lp = path + ".links[" + std::to_string(k) + "]";
    TopologyLink l;
    l.id = text(field(links[k], "id", lp), lp + ".id");
    l.src = text(field(links[k], "src", lp), lp + ".src");
    l.dst = text(field(links[k], "dst", lp), lp + ".dst");
    if (links[k].contains("dist")) l.dist = dist_from_json(links[k]["dist"], lp + ".dist");
    t.links.push_back(std::move(l));
  }
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(path + ": " + e.what());
  }
  return t;
}

// Optional explicit monitor paths stored alongside a topology.
inline std::vector<std::vector<std::string>> paths_from_json(const json& j, const std::string& path) {
  using namespace io_detail;
  std::vector<std::vector<std::string>> out;
  const json& arr = array(j, path);
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const std::string pp = path + "[" + std::to_string(k) + "]";
    std::vector<std::string> ids;
    const json& inner = array(arr[k], pp);
    for (std::size_t q = 0; q < inner.size(); ++q) ids.push_back(text(inner[q], pp + "[" + std::to_string(q) + "]"));
    out.push_back(std::move(ids));
  }
  return out;
}

inline std::vector<std::string> strings_from_json(const json& j, const std::string& path) {
  std::vector<std::string> out;
  const json& arr = io_detail::array(j, path);
  for (std::size_t k = 0; k < arr.size(); ++k) out.push_back(io_detail::text(arr[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

inline json routing_to_json(const RoutingMatrix& r) {
  json rows = json::array();
  for (int j = 0; j < r.paths(); ++j) {
    json row = json::array();
    for (int l = 0; l < r.links(); ++l) row.push_back(r.at(j, l));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json scenario_to_json(const Scenario& sc) {
  json j = topology_to_json(sc.topology);
  j["monitors"] = sc.monitors;
  j["path_ids"] = sc.routing.path_ids();
  j["paths"] = sc.paths;
  j["link_ids"] = sc.routing.link_ids();
  j["routing_matrix"] = routing_to_json(sc.routing);
  j["seed"] = sc.seed;
  return j;
}

inline Scenario scenario_from_json(const json& j, const std::string& path = "$") {
  using namespace io_detail;
  Topology t = topology_from_json(j, path);
  auto paths = paths_from_json(field(j, "paths", path), path + ".paths");
  std::vector<std::string> monitors, path_ids;
  if (j.contains("monitors")) monitors = strings_from_json(j["monitors"], path + ".monitors");
  if (j.contains("path_ids")) path_ids = strings_from_json(j["path_ids"], path + ".path_ids");
  std::uint64_t seed = 0;
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw InputError(path + ".seed: expected a non-negative integer");
    seed = j["seed"].get<std::uint64_t>();
  }
  Scenario sc;
  try {
    sc = scenario_from_paths(t, std::move(paths), std::move(monitors), seed, std::move(path_ids));
  } catch (const std::invalid_argument& e) {
    throw InputError(path + ": " + e.what());
  }
  if (j.contains("routing_matrix") && routing_to_json(sc.routing) != j["routing_matrix"])
    throw InputError(path + ".routing_matrix: does not match the listed paths");
  return sc;
}

inline std::string sample_to_csv(const DelaySample& s) {
  std::string out;
  out.reserve(s.rows() * s.paths() * 20 + 64);
  for (int j = 0; j < s.paths(); ++j) {
    if (j) out += ',';
    out += s.path_ids()[j];
  }
  out += '\n';
  for (std::size_t r = 0; r < s.rows(); ++r) {
    for (int j = 0; j < s.paths(); ++j) {
      if (j) out += ',';
      out += format_double(s.at(r, j));
    }
    out += '\n';
  }
  return out;
}

inline void write_sample_csv(const std::string& path, const DelaySample& s) { write_text_file(path, sample_to_csv(s)); }

inline DelaySample read_sample_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw InputError(path + ":1: missing header row");
  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(l);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!l.empty() && l.back() == ',') cells.emplace_back();
    return cells;
  };
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> ids = split(line);
  const int n = static_cast<int>(ids.size());
  if (n == 0) throw InputError(path + ":1: empty header row");
  std::vector<std::vector<double>> cols(n);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t pos = 0;
    for (int j = 0; j < n; ++j) {
      const std::size_t end = line.find(',', pos);
      const bool last = j == n - 1;
      if (last != (end == std::string::npos))
        throw InputError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(n) + " fields");
      const std::string cell = line.substr(pos, last ? std::string::npos : end - pos);
      char* stop = nullptr;
      errno = 0;
      const double v = std::strtod(cell.c_str(), &stop);
      if (cell.empty() || *stop != '\0' || errno == ERANGE || !std::isfinite(v))
        throw InputError(path + ":" + std::to_string(lineno) + ": invalid value '" + cell + "' in column " + ids[j]);
      cols[j].push_back(v);
      pos = end + 1;
    }
  }
  const std::size_t rows = cols[0].size();
  std::vector<double> cm;
  cm.reserve(rows * n);
  for (auto& c : cols) cm.insert(cm.end(), c.begin(), c.end());
  return DelaySample(rows, n, std::move(cm), std::move(ids));
}

// {"<bitmask>": value, ...} in canonical set order.
inline json cumulants_to_json(const std::map<PathSet, double>& v) {
  json j = json::object();
  for (const auto& [p, x] : v) j[std::to_string(p.bits())] = x;
  return j;
}

inline json pathsets_to_json(std::span<const PathSet> sets) {
  json j = json::array();
  for (PathSet p : sets) {
    json members = json::array();
    for (int e : p.elements()) members.push_back(e + 1);
    j.push_back(std::move(members));
  }
  return j;
}

inline std::vector<PathSet> pathsets_from_json(const json& j, int n, const std::string& path) {
  std::vector<PathSet> out;
  const json& arr = io_detail::array(j, path);
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const std::string pp = path + "[" + std::to_string(k) + "]";
    Mask m = 0;
    for (const auto& e : io_detail::array(arr[k], pp)) {
      if (!e.is_number_integer() || e.get<int>() < 1 || e.get<int>() > n) throw InputError(pp + ": path index out of range");
      m |= Mask{1} << (e.get<int>() - 1);
    }
    out.emplace_back(m, n);
  }
  return out;
}

}  // namespace mobius
