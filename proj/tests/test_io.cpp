#include "test_support.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace mobius;
using mobius::fixtures::ps;

namespace {

std::string write_temp(const std::string& dir, const std::string& name, const std::string& text) {
  const std::string p = dir + "/" + name;
  std::ofstream(p) << text;
  return p;
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Io, ScenarioRoundTrip) {
  const Scenario sc = generate_scenario(random_topology(20, 4, 3), 5, DelayConfig{}, 3);
  const json j = scenario_to_json(sc);
  const Scenario back = scenario_from_json(json::parse(j.dump()));
  EXPECT_EQ(back.routing, sc.routing);
  EXPECT_EQ(back.link_dists, sc.link_dists);
  EXPECT_EQ(back.monitors, sc.monitors);
  EXPECT_EQ(back.seed, sc.seed);
  EXPECT_EQ(scenario_to_json(back).dump(), j.dump());
}

TEST(Io, ScenarioRejectsInconsistentMatrix) {
  const Scenario sc = scenario_from_paths(topology_from_json(read_json_file(fixtures::data_file("section3d_topology.json"))),
                                          {{"l1", "l2"}, {"l1", "l3"}, {"l3"}});
  json j = scenario_to_json(sc);
  j["routing_matrix"][0][0] = 0;
  EXPECT_NE(error_of([&] { scenario_from_json(j); }).find("routing_matrix"), std::string::npos);
}

TEST(Io, TopologyErrorsNameTheField) {
  json j = {{"nodes", {"a", "b"}}, {"links", {{{"id", "x"}, {"src", "a"}, {"dst", "b"}, {"dist", {{"kind", "gamma"}, {"shape", -1}, {"rate", 1}}}}}}};
  EXPECT_NE(error_of([&] { topology_from_json(j); }).find("$.links[0].dist"), std::string::npos);
  j["links"][0]["dist"] = {{"kind", "cauchy"}};
  EXPECT_NE(error_of([&] { topology_from_json(j); }).find("unknown distribution"), std::string::npos);
  j["links"][0].erase("dist");
  j["links"][0]["dst"] = "z";
  EXPECT_NE(error_of([&] { topology_from_json(j); }).find("unknown node"), std::string::npos);
  EXPECT_NE(error_of([&] { topology_from_json(json{{"links", json::array()}}); }).find("$.nodes: missing"), std::string::npos);
}

TEST(Io, DistributionsRoundTrip) {
  for (const auto& d : {LinkDistribution::normal(1, 2), LinkDistribution::exponential(3), LinkDistribution::gamma(4, 5)})
    EXPECT_EQ(dist_from_json(dist_to_json(d), "$"), d);
}

TEST(Io, SampleCsvRoundTripIsExact) {
  const auto dir = fixtures::scratch_dir("io_csv");
  const auto s = DelaySample::from_rows({{0.1, 1e-300}, {1.0 / 3, -2.5e10}, {7, 8}}, {"a-b", "a-c"});
  write_sample_csv(dir + "/s.csv", s);
  const auto back = read_sample_csv(dir + "/s.csv");
  EXPECT_EQ(back.column_major(), s.column_major());
  EXPECT_EQ(back.path_ids(), s.path_ids());
}

TEST(Io, SampleCsvErrorsCarryLineNumbers) {
  const auto dir = fixtures::scratch_dir("io_csv_err");
  EXPECT_NE(error_of([&] { read_sample_csv(write_temp(dir, "a.csv", "p1,p2\n1,2\n3\n")); }).find("a.csv:3: expected 2 fields"),
            std::string::npos);
  EXPECT_NE(error_of([&] { read_sample_csv(write_temp(dir, "b.csv", "p1,p2\n1,2\n3,nan\n")); }).find("b.csv:3: invalid value"),
            std::string::npos);
  EXPECT_NE(error_of([&] { read_sample_csv(write_temp(dir, "c.csv", "p1,p2\n1,\n")); }).find("c.csv:2"), std::string::npos);
  EXPECT_NE(error_of([&] { read_sample_csv(dir + "/missing.csv"); }).find("cannot open"), std::string::npos);
}

TEST(Io, PathSetsUseOneBasedMembers) {
  const std::vector<PathSet> sets = {ps({1, 3}, 4), ps({4}, 4)};
  const json j = pathsets_to_json(sets);
  EXPECT_EQ(j.dump(), "[[1,3],[4]]");
  EXPECT_EQ(pathsets_from_json(j, 4, "$"), sets);
  EXPECT_THROW(pathsets_from_json(json::parse("[[5]]"), 4, "$"), InputError);
  EXPECT_EQ(cumulants_to_json({{ps({1, 2}, 2), 0.5}, {ps({2}, 2), 1.0}}).dump(), R"({"2":1.0,"3":0.5})");
}

TEST(Io, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3, 1e-300, 123456789.123456789}) EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
}
