#pragma once

// The `mobius` command-line front end. run_cli() is the whole program minus
// main(), so tests can drive it in-process.

#include "mobius/mobius.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace mobius::cli {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kSeedEnv = "MOBIUS_SEED";

enum ExitCode { kOk = 0, kRuntimeError = 1, kUsageError = 2 };

class Fnv1a {
 public:
  void add(std::string_view s) {
    for (unsigned char c : s) {
      h_ ^= c;
      h_ *= 0x100000001b3ULL;
    }
    // Separator so ("ab","c") and ("a","bc") differ.
    h_ ^= 0xff;
    h_ *= 0x100000001b3ULL;
  }
  void add_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    add(ss.str());
  }
  std::string hex() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h_));
    return buf;
  }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Collects what a command read and wrote, then emits manifest.json.
class Manifest {
 public:
  Manifest(std::string command, std::string out_dir) : command_(std::move(command)), dir_(std::move(out_dir)) {
    digest_.add(command_);
  }

  void arg(const std::string& name, const std::string& value) {
    args_[name] = value;
    digest_.add(name);
    digest_.add(value);
  }
  void input(const std::string& path) {
    inputs_.push_back(path);
    digest_.add_file(path);
  }
  void seed(const std::string& name, std::uint64_t v) { seeds_[name] = v; }
  std::string path(const std::string& file) {
    outputs_.push_back(file);
    return (std::filesystem::path(dir_) / file).string();
  }

  void write() {
    json j;
    j["command"] = command_;
    j["tool_version"] = kToolVersion;
    j["config_digest"] = digest_.hex();
    j["args"] = args_;
    j["seeds"] = seeds_;
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    j["created_utc"] = utc_now();
    write_json_file((std::filesystem::path(dir_) / "manifest.json").string(), j);
  }

 private:
  std::string command_, dir_;
  Fnv1a digest_;
  json args_ = json::object();
  json seeds_ = json::object();
  std::vector<std::string> inputs_, outputs_;
};

inline void make_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
}

inline std::string fmt_num(double v) { return format_double(v); }

inline std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// ---- configuration files -------------------------------------------------

inline ResampleMethod method_from_string(const std::string& s, const std::string& path) {
  if (s == "bootstrap") return ResampleMethod::Bootstrap;
  if (s == "split") return ResampleMethod::SampleSplit;
  throw InputError(path + ": unknown resampling method '" + s + "' (expected bootstrap or split)");
}

inline double num_field(const json& j, const char* key, double def, const std::string& path) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number()) throw InputError(path + "." + key + ": expected a number");
  return j[key].get<double>();
}

inline int int_field(const json& j, const char* key, int def, const std::string& path) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number_integer()) throw InputError(path + "." + key + ": expected an integer");
  return j[key].get<int>();
}

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& path) {
  if (!j.is_object()) throw InputError(path + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw InputError(path + "." + it.key() + ": unknown key");
  }
}

// Pipeline parameters; `n_rows` selects the table defaults when requested.
inline PipelineParams pipeline_from_json(const json& j, std::size_t n_rows, const std::string& path = "$") {
  check_keys(j, {"table_defaults", "init", "i0", "i_f", "s", "i_max", "lambda", "b", "alpha2", "orders", "test", "solver"}, path);
  const bool table = !j.contains("table_defaults") || j["table_defaults"].get<bool>();
  PipelineParams p = table ? PipelineParams::for_sample_size(n_rows) : PipelineParams{};
  if (j.contains("init")) {
    const auto s = j["init"].get<std::string>();
    if (s == "cliques")
      p.init = InitMode::Cliques;
    else if (s == "full")
      p.init = InitMode::FullSet;
    else
      throw InputError(path + ".init: expected cliques or full");
  }
  p.i0 = int_field(j, "i0", p.i0, path);
  p.i_f = int_field(j, "i_f", p.i_f, path);
  p.s = int_field(j, "s", p.s, path);
  p.i_max = int_field(j, "i_max", p.i_max, path);
  p.lambda = num_field(j, "lambda", p.lambda, path);
  p.b = num_field(j, "b", p.b, path);
  p.alpha2 = num_field(j, "alpha2", p.alpha2, path);
  if (j.contains("orders")) {
    if (!j["orders"].is_object()) throw InputError(path + ".orders: expected an object keyed by order");
    for (auto it = j["orders"].begin(); it != j["orders"].end(); ++it) {
      const std::string op = path + ".orders." + it.key();
      int order = 0;
      try {
        order = std::stoi(it.key());
      } catch (...) {
        throw InputError(op + ": key must be an integer order");
      }
      check_keys(*it, {"alpha", "beta", "gamma"}, op);
      OrderParams cur = p.order_params(order);
      cur.alpha = num_field(*it, "alpha", cur.alpha, op);
      cur.beta = num_field(*it, "beta", cur.beta, op);
      cur.gamma = num_field(*it, "gamma", cur.gamma, op);
      p.orders[order] = cur;
    }
  }
  if (j.contains("test")) {
    const json& t = j["test"];
    check_keys(t, {"method", "replicates", "seed"}, path + ".test");
    if (t.contains("method")) p.test.method = method_from_string(t["method"].get<std::string>(), path + ".test.method");
    p.test.replicates = int_field(t, "replicates", p.test.replicates, path + ".test");
    if (t.contains("seed")) p.test.seed = t["seed"].get<std::uint64_t>();
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    check_keys(s, {"max_iters", "tol", "rho"}, path + ".solver");
    p.solver.max_iters = int_field(s, "max_iters", p.solver.max_iters, path + ".solver");
    p.solver.tol = num_field(s, "tol", p.solver.tol, path + ".solver");
    p.solver.rho = num_field(s, "rho", p.solver.rho, path + ".solver");
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(path + ": " + e.what());
  }
  return p;
}

inline json pipeline_to_json(const PipelineParams& p) {
  json orders = json::object();
  for (const auto& [i, op] : p.orders) orders[std::to_string(i)] = {{"alpha", op.alpha}, {"beta", op.beta}, {"gamma", op.gamma}};
  return {{"init", p.init == InitMode::Cliques ? "cliques" : "full"},
          {"i0", p.i0},
          {"i_f", p.i_f},
          {"s", p.size_threshold()},
          {"i_max", p.i_max},
          {"lambda", p.lambda},
          {"b", p.b},
          {"alpha2", p.alpha2},
          {"orders", orders},
          {"test",
           {{"method", p.test.method == ResampleMethod::Bootstrap ? "bootstrap" : "split"},
            {"replicates", p.test.replicates},
            {"seed", p.test.seed}}},
          {"solver", {{"max_iters", p.solver.max_iters}, {"tol", p.solver.tol}, {"rho", p.solver.rho}}}};
}

inline std::vector<double> grid_from_json(const json& j, const std::string& path) {
  if (j.is_array()) {
    std::vector<double> v;
    for (const auto& x : j) {
      if (!x.is_number()) throw InputError(path + ": expected numbers");
      v.push_back(x.get<double>());
    }
    if (v.empty()) throw InputError(path + ": empty grid");
    return v;
  }
  check_keys(j, {"from", "to", "step"}, path);
  try {
    return grid_values(num_field(j, "from", 0.0, path), num_field(j, "to", 0.0, path), num_field(j, "step", 1.0, path));
  } catch (const std::invalid_argument& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline std::string resolve(const std::string& base_file, const std::string& rel) {
  const std::filesystem::path p(rel);
  if (p.is_absolute()) return rel;
  return (std::filesystem::path(base_file).parent_path() / p).string();
}

inline DelayConfig delays_from_json(const json& j, const std::string& path) {
  check_keys(j, {"mean_mu", "sd_mu", "min_mu", "gamma_rate"}, path);
  DelayConfig d;
  d.mean_mu = num_field(j, "mean_mu", d.mean_mu, path);
  d.sd_mu = num_field(j, "sd_mu", d.sd_mu, path);
  d.min_mu = num_field(j, "min_mu", d.min_mu, path);
  d.gamma_rate = num_field(j, "gamma_rate", d.gamma_rate, path);
  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(path + ": " + e.what());
  }
  return d;
}

template <class T>
std::vector<T> list_field(const json& j, const char* key, std::vector<T> def, const std::string& path) {
  if (!j.contains(key)) return def;
  const json& v = j[key];
  std::vector<T> out;
  auto one = [&](const json& x) {
    if (!x.is_number_integer() || x.get<long long>() < 0) throw InputError(path + "." + key + ": expected non-negative integers");
    out.push_back(x.get<T>());
  };
  if (v.is_array())
    for (const auto& x : v) one(x);
  else
    one(v);
  if (out.empty()) throw InputError(path + "." + key + ": empty list");
  return out;
}

// ---- result encoding -----------------------------------------------------

inline json result_to_json(const MiaResult& r) {
  json tests = json::array();
  for (const auto& t : r.tests)
    tests.push_back({{"set", pathsets_to_json(std::vector<PathSet>{t.set})[0]},
                     {"bitmask", t.set.bits()},
                     {"f_mean", t.f_mean},
                     {"f_std_error", t.f_std_error},
                     {"g_mean", t.g_mean},
                     {"g_std_error", t.g_std_error},
                     {"p_value", t.p_value},
                     {"accepted", t.accepted}});
  return {{"mode", mode_name(r.mode)},
          {"order", r.order},
          {"n", r.n},
          {"path_ids", r.path_ids},
          {"f", cumulants_to_json(r.f)},
          {"g", cumulants_to_json(r.g)},
          {"columns", pathsets_to_json(r.columns)},
          {"routing_matrix", routing_to_json(r.r_hat())},
          {"tests", tests}};
}

// Columns and path count from a result file, or ground-truth columns from a
// scenario file (at the given cumulant order).
inline std::pair<std::vector<PathSet>, int> columns_from_file(const std::string& path, int order) {
  const json j = read_json_file(path);
  if (j.contains("links") && j.contains("paths")) {
    const Scenario sc = scenario_from_json(j, path);
    return {true_columns(sc.routing, sc.link_dists, std::max(order, 1)), sc.routing.paths()};
  }
  if (!j.contains("columns") || !j.contains("n")) throw InputError(path + ": expected a scenario or a result file");
  const int n = j["n"].get<int>();
  return {pathsets_from_json(j["columns"], n, path + ".columns"), n};
}

// ---- commands ------------------------------------------------------------

struct Common {
  std::string out_dir;
  std::uint64_t seed = 1;
  int jobs = 1;
};

inline int default_jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

inline void cmd_generate(const std::string& topology_file, int monitors, std::size_t samples, const Common& c,
                         std::ostream& out) {
  make_out_dir(c.out_dir);
  Manifest man("generate", c.out_dir);
  man.input(topology_file);
  man.arg("monitors", std::to_string(monitors));
  man.arg("samples", std::to_string(samples));
  man.arg("seed", std::to_string(c.seed));
  man.seed("seed", c.seed);

  const json tj = read_json_file(topology_file);
  Topology topo = topology_from_json(tj, topology_file);
  Scenario sc;
  if (tj.contains("paths")) {
    std::vector<std::string> ids;
    if (tj.contains("path_ids")) ids = strings_from_json(tj["path_ids"], topology_file + ".path_ids");
    try {
      sc = scenario_from_paths(topo, paths_from_json(tj["paths"], topology_file + ".paths"), {}, c.seed, ids);
    } catch (const InputError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw InputError(topology_file + ": " + e.what());
    }
  } else {
    if (monitors < 2) throw InputError("--monitors is required when the topology lists no explicit paths");
    sc = generate_scenario(topo, monitors, DelayConfig{}, derive_seed(c.seed, {0x5Cu}));
    sc.seed = c.seed;
  }
  const DelaySample sample = sample_delays(sc, samples, derive_seed(c.seed, {0x5A3Bu}), c.jobs);
  write_json_file(man.path("scenario.json"), scenario_to_json(sc));
  write_sample_csv(man.path("sample.csv"), sample);
  man.write();
  out << "wrote " << sc.routing.paths() << " paths x " << samples << " samples to " << c.out_dir << "\n";
}

struct MiaArgs {
  std::string scenario, sample;
  bool exact = false, data = false, use_float = false;
  int splits = 0, bootstrap = 0;
  double alpha = 0.01;
};

inline void cmd_mia(const MiaArgs& a, const Common& c, std::ostream& out) {
  if (a.exact == a.data) throw InputError("choose exactly one of --exact or --data");
  if (a.exact && a.scenario.empty()) throw InputError("--exact needs --scenario");
  if (a.data && a.sample.empty()) throw InputError("--data needs --sample");
  if (a.splits > 0 && a.bootstrap > 0) throw InputError("choose at most one of --splits and --bootstrap");
  make_out_dir(c.out_dir);
  Manifest man("mia", c.out_dir);
  json result;
  if (a.exact) {
    man.input(a.scenario);
    man.arg("mode", a.use_float ? "exact-float" : "exact-rational");
    const Scenario sc = scenario_from_json(read_json_file(a.scenario), a.scenario);
    if (sc.routing.paths() > 20) throw InputError("exact inference enumerates 2^n sets; at most 20 paths supported");
    if (a.use_float) {
      result = result_to_json(to_result(mia_exact<double>(sc.routing, sc.link_dists), sc.routing.path_ids()));
    } else {
      const auto e = mia_exact<Rational>(sc.routing, sc.link_dists);
      result = result_to_json(to_result(e, sc.routing.path_ids()));
      json fx = json::object(), gx = json::object();
      for (const auto& [p, v] : e.f.entries) fx[std::to_string(p.bits())] = v.str();
      for (const auto& [p, v] : e.g.entries) gx[std::to_string(p.bits())] = v.str();
      result["f_exact"] = fx;
      result["g_exact"] = gx;
    }
  } else {
    man.input(a.sample);
    NonzeroTestConfig cfg;
    cfg.p_threshold = a.alpha;
    cfg.seed = c.seed;
    if (a.splits > 0) {
      cfg.method = ResampleMethod::SampleSplit;
      cfg.replicates = a.splits;
    } else {
      cfg.method = ResampleMethod::Bootstrap;
      cfg.replicates = a.bootstrap > 0 ? a.bootstrap : 50;
    }
    man.arg("method", cfg.method == ResampleMethod::Bootstrap ? "bootstrap" : "split");
    man.arg("replicates", std::to_string(cfg.replicates));
    man.arg("alpha", fmt_num(cfg.p_threshold));
    man.arg("seed", std::to_string(c.seed));
    man.seed("resample", c.seed);
    const DelaySample s = read_sample_csv(a.sample);
    result = result_to_json(mia_data(s, cfg));
  }
  write_json_file(man.path("result.json"), result);
  man.write();
  out << "recovered " << result["columns"].size() << " columns\n";
}

struct SparseArgs {
  std::string sample, scenario, config;
  bool ground_truth = false;
  std::optional<int> i_max, s, i0, i_f;
  std::optional<double> lambda, b;
  std::optional<std::string> init;
};

inline void cmd_sparse(const SparseArgs& a, const Common& c, std::ostream& out) {
  if (a.ground_truth == !a.sample.empty()) throw InputError("use either --sample or --scenario with --ground-truth-cumulants");
  if (a.ground_truth && a.scenario.empty()) throw InputError("--ground-truth-cumulants needs --scenario");
  make_out_dir(c.out_dir);
  Manifest man("sparse", c.out_dir);
  std::optional<DelaySample> sample;
  std::optional<Scenario> sc;
  std::size_t n_rows = 50000;
  if (a.ground_truth) {
    man.input(a.scenario);
    sc = scenario_from_json(read_json_file(a.scenario), a.scenario);
  } else {
    man.input(a.sample);
    sample = read_sample_csv(a.sample);
    n_rows = sample->rows();
  }
  json cfg = json::object();
  if (!a.config.empty()) {
    man.input(a.config);
    cfg = read_json_file(a.config);
  }
  if (a.i_max) cfg["i_max"] = *a.i_max;
  if (a.s) cfg["s"] = *a.s;
  if (a.i0) cfg["i0"] = *a.i0;
  if (a.i_f) cfg["i_f"] = *a.i_f;
  if (a.lambda) cfg["lambda"] = *a.lambda;
  if (a.b) cfg["b"] = *a.b;
  if (a.init) cfg["init"] = *a.init;
  if (!cfg.contains("test")) cfg["test"] = json::object();
  if (!cfg["test"].contains("seed")) cfg["test"]["seed"] = c.seed;
  const PipelineParams p = pipeline_from_json(cfg, n_rows, a.config.empty() ? "$" : a.config);
  man.arg("params", pipeline_to_json(p).dump());
  man.arg("ground_truth", a.ground_truth ? "true" : "false");
  man.seed("test", p.test.seed);

  std::unique_ptr<CumulantSource> src;
  std::vector<std::string> ids;
  if (a.ground_truth) {
    src = std::make_unique<GroundTruthSource>(sc->routing, sc->link_dists);
    ids = sc->routing.path_ids();
  } else {
    src = std::make_unique<SampleSource>(*sample, p.test);
    ids = sample->path_ids();
  }
  const SparseRun run = run_sparse_pipeline(*src, p, ids);
  json result = result_to_json(run.result);
  result["params"] = pipeline_to_json(p);
  result["bounding_topology"] = pathsets_to_json(run.stage1.final.sets);
  json rounds = json::array();
  for (std::size_t k = 0; k < run.stage1.rounds.size(); ++k)
    rounds.push_back({{"order", p.i0 + static_cast<int>(k)}, {"sets", pathsets_to_json(run.stage1.rounds[k].sets)}});
  result["stage1"] = {{"initial", pathsets_to_json(run.stage1.initial.sets)}, {"rounds", rounds}};
  result["solver"] = {{"converged", run.solution.converged},
                      {"iterations", run.solution.iterations},
                      {"objective", run.solution.objective},
                      {"polished", run.solution.polished},
                      {"pinned", run.solution.pinned.size()},
                      {"support_threshold", support_threshold(run.solution.g)}};
  write_json_file(man.path("result.json"), result);
  write_json_file(man.path("bounding_topology.json"),
                  {{"n", src->paths()}, {"sets", pathsets_to_json(run.stage1.final.sets)}});
  man.write();
  out << "bounding topology: " << run.stage1.final.sets.size() << " sets; recovered " << run.result.columns.size()
      << " columns\n";
}

inline void cmd_eval(const std::string& result_file, const std::string& truth_file, bool harmonic, const Common& c,
                     std::ostream& out) {
  make_out_dir(c.out_dir);
  Manifest man("eval", c.out_dir);
  man.input(result_file);
  man.input(truth_file);
  const json rj = read_json_file(result_file);
  const int order = rj.contains("order") && rj["order"].is_number_integer() ? rj["order"].get<int>() : 1;
  const auto [est, n_est] = columns_from_file(result_file, order);
  const auto [truth, n_truth] = columns_from_file(truth_file, order);
  if (n_est != n_truth) throw InputError("result and truth have different path counts");
  const ScoreReport s = score(est, truth);
  json j = {{"precision", s.precision},
            {"recall", s.recall},
            {"f1", s.f1},
            {"matched", pathsets_to_json(s.matched)},
            {"missed", pathsets_to_json(s.missed)},
            {"spurious", pathsets_to_json(s.spurious)}};
  if (harmonic) j["f1_harmonic"] = s.f1_harmonic;
  write_json_file(man.path("score.json"), j);
  man.write();
  out << "precision " << short_num(s.precision) << " recall " << short_num(s.recall) << " f1 " << short_num(s.f1) << "\n";
}

inline CampaignConfig campaign_from_json(const std::string& file) {
  const json j = read_json_file(file);
  check_keys(j, {"name", "topology", "monitors", "sample_sizes", "seeds", "i_max", "ground_truth", "pipeline", "delays"}, file);
  CampaignConfig cfg;
  if (j.contains("name")) cfg.name = j["name"].get<std::string>();
  if (!j.contains("topology") || !j["topology"].is_string()) throw InputError(file + ".topology: expected a file path");
  const std::string tfile = resolve(file, j["topology"].get<std::string>());
  cfg.topology = topology_from_json(read_json_file(tfile), tfile);
  cfg.monitors = list_field<int>(j, "monitors", cfg.monitors, file);
  cfg.sample_sizes = list_field<std::size_t>(j, "sample_sizes", cfg.sample_sizes, file);
  cfg.seeds = list_field<std::uint64_t>(j, "seeds", cfg.seeds, file);
  cfg.i_max = list_field<int>(j, "i_max", cfg.i_max, file);
  cfg.ground_truth = j.value("ground_truth", false);
  const json pj = j.value("pipeline", json::object());
  cfg.use_table_defaults = !pj.contains("table_defaults") || pj["table_defaults"].get<bool>();
  cfg.params = pipeline_from_json(pj, 50000, file + ".pipeline");
  if (j.contains("delays")) cfg.delays = delays_from_json(j["delays"], file + ".delays");
  return cfg;
}

inline void cmd_campaign(const std::string& config_file, const Common& c, std::ostream& out) {
  CampaignConfig cfg = campaign_from_json(config_file);
  cfg.jobs = c.jobs;
  make_out_dir(c.out_dir);
  Manifest man("campaign", c.out_dir);
  man.input(config_file);
  const json j = read_json_file(config_file);
  man.input(resolve(config_file, j["topology"].get<std::string>()));
  for (auto s : cfg.seeds) man.seed("case_" + std::to_string(s), s);
  const CampaignReport rep = run_campaign(cfg);
  write_text_file(man.path("cases.csv"), rep.cases_csv);
  write_text_file(man.path("stage1.csv"), rep.stage1_csv);
  write_text_file(man.path("sparsity.csv"), rep.sparsity_csv);
  int failed = 0;
  for (const auto& r : rep.cases) {
    write_json_file(man.path("case_" + r.c.id + ".json"), r.bundle);
    failed += r.ok ? 0 : 1;
  }
  man.write();
  out << rep.cases.size() << " cases, " << failed << " failed\n";
}

inline void cmd_grid_search(const std::string& config_file, const Common& c, std::ostream& out) {
  const json j = read_json_file(config_file);
  check_keys(j, {"topology", "monitors", "samples", "seeds", "ground_truth", "lambda", "b", "pipeline", "delays"}, config_file);
  if (!j.contains("topology") || !j["topology"].is_string()) throw InputError(config_file + ".topology: expected a file path");
  const std::string tfile = resolve(config_file, j["topology"].get<std::string>());
  const Topology topo = topology_from_json(read_json_file(tfile), tfile);
  const int monitors = int_field(j, "monitors", 5, config_file);
  const auto samples = static_cast<std::size_t>(int_field(j, "samples", 50000, config_file));
  const auto seeds = list_field<std::uint64_t>(j, "seeds", {1, 2, 3, 4, 5}, config_file);
  const bool gt = j.value("ground_truth", false);
  const auto lambdas = grid_from_json(j.value("lambda", json{{"from", 0.0}, {"to", 4.0}, {"step", 0.2}}), config_file + ".lambda");
  const auto bs = grid_from_json(j.value("b", json{{"from", 0.0}, {"to", 1.0}, {"step", 0.1}}), config_file + ".b");
  const DelayConfig delays = j.contains("delays") ? delays_from_json(j["delays"], config_file + ".delays") : DelayConfig{};
  const json pj = j.value("pipeline", json::object());
  const PipelineParams base = pipeline_from_json(pj, samples, config_file + ".pipeline");

  make_out_dir(c.out_dir);
  Manifest man("grid-search", c.out_dir);
  man.input(config_file);
  man.input(tfile);

  std::vector<GridCase> cases(seeds.size());
  parallel_for(seeds.size(), c.jobs, [&](std::size_t k) {
    const Scenario sc = generate_scenario(topo, monitors, delays, derive_seed(seeds[k], {0x5Cu, static_cast<std::uint64_t>(monitors)}));
    PipelineParams p = base;
    p.test.seed = derive_seed(seeds[k], {0x7E57u, samples});
    cases[k].truth = true_columns(sc.routing, sc.link_dists, p.i_max);
    if (gt) {
      GroundTruthSource src(sc.routing, sc.link_dists);
      cases[k].prepared = prepare_sparse(src, p, sc.routing.path_ids());
    } else {
      const DelaySample s = sample_delays(sc, samples, derive_seed(seeds[k], {0x5A3Bu, samples}));
      SampleSource src(s, p.test);
      cases[k].prepared = prepare_sparse(src, p, sc.routing.path_ids());
    }
  });
  for (auto s : seeds) man.seed("case_" + std::to_string(s), s);
  const GridResult g = grid_search(cases, lambdas, bs, base.solver, c.jobs);
  std::ostringstream csv;
  csv << "lambda,b,mean_f1\n";
  for (const auto& gp : g.table) csv << fmt_num(gp.lambda) << "," << fmt_num(gp.b) << "," << fmt_num(gp.mean_f1) << "\n";
  write_text_file(man.path("grid.csv"), csv.str());
  write_json_file(man.path("best.json"), {{"lambda", g.best.lambda}, {"b", g.best.b}, {"mean_f1", g.best.mean_f1}, {"f1", g.best.f1}});
  man.write();
  out << "best lambda " << short_num(g.best.lambda) << " b " << short_num(g.best.b) << " mean F1 " << short_num(g.best.mean_f1) << "\n";
}

// ---- entry point ---------------------------------------------------------

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Routing-matrix inference from end-to-end path delays", "mobius"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Common common;
  auto add_common = [&](CLI::App* sub, bool with_jobs) {
    sub->add_option("--out", common.out_dir, "Output directory")->required();
    sub->add_option("--seed", common.seed, "Root RNG seed")->envname(kSeedEnv)->default_val(1);
    if (with_jobs) sub->add_option("--jobs", common.jobs, "Worker threads (default: logical cores)")->default_val(default_jobs());
  };

  std::string topology;
  int monitors = 0;
  std::size_t samples = 10000;
  auto* gen = app.add_subcommand("generate", "Build a scenario and sample path delays");
  gen->add_option("--topology", topology, "Topology JSON (may list explicit monitor paths)")->required();
  gen->add_option("--monitors", monitors, "Number of monitor nodes");
  gen->add_option("--samples", samples, "Number of delay samples")->default_val(10000);
  add_common(gen, true);

  MiaArgs mia;
  auto* mia_cmd = app.add_subcommand("mia", "Full Moebius inference (exact or from data)");
  mia_cmd->add_option("--scenario", mia.scenario, "Scenario JSON (exact mode)");
  mia_cmd->add_option("--sample", mia.sample, "Sample CSV (data mode)");
  mia_cmd->add_flag("--exact", mia.exact, "Use analytic cumulants from the scenario");
  mia_cmd->add_flag("--data", mia.data, "Estimate cumulants from the sample");
  mia_cmd->add_flag("--float", mia.use_float, "Exact mode in floating point instead of rationals");
  mia_cmd->add_option("--splits", mia.splits, "Sample-splitting replicates");
  mia_cmd->add_option("--bootstrap", mia.bootstrap, "Bootstrap replicates (default 50)");
  mia_cmd->add_option("--alpha", mia.alpha, "p-value threshold of the nonzero test")->default_val(0.01);
  add_common(mia_cmd, false);

  SparseArgs sp;
  auto* sp_cmd = app.add_subcommand("sparse", "Sparse Moebius inference pipeline");
  sp_cmd->add_option("--sample", sp.sample, "Sample CSV");
  sp_cmd->add_option("--scenario", sp.scenario, "Scenario JSON (with --ground-truth-cumulants)");
  sp_cmd->add_option("--config", sp.config, "Pipeline config JSON");
  sp_cmd->add_flag("--ground-truth-cumulants", sp.ground_truth, "Use exact cumulants and the equality-constrained solver");
  sp_cmd->add_option("--i-max", sp.i_max, "Largest cumulant order estimated");
  sp_cmd->add_option("--s", sp.s, "Size threshold of the hard sparsity heuristic");
  sp_cmd->add_option("--i0", sp.i0, "First tightening order");
  sp_cmd->add_option("--if", sp.i_f, "Last tightening order");
  sp_cmd->add_option("--lambda", sp.lambda, "Overall L1 weight");
  sp_cmd->add_option("--b", sp.b, "Exponent of the L1 weights");
  sp_cmd->add_option("--init", sp.init, "Initial bounding topology: cliques or full");
  add_common(sp_cmd, false);

  std::string result_file, truth_file;
  bool harmonic = false;
  auto* ev = app.add_subcommand("eval", "Score a recovered routing matrix");
  ev->add_option("--result", result_file, "Result JSON")->required();
  ev->add_option("--truth", truth_file, "Scenario or result JSON holding the true columns")->required();
  ev->add_flag("--harmonic", harmonic, "Also report the harmonic-mean F1");
  add_common(ev, false);

  std::string campaign_cfg;
  auto* camp = app.add_subcommand("campaign", "Run an experiment campaign");
  camp->add_option("--config", campaign_cfg, "Campaign config JSON")->required();
  add_common(camp, true);

  std::string grid_cfg;
  auto* grid = app.add_subcommand("grid-search", "Tune lambda and b on a set of scenarios");
  grid->add_option("--config", grid_cfg, "Grid-search config JSON")->required();
  add_common(grid, true);

  std::vector<std::string> argv_store = {"mobius"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }
  if (common.jobs < 1) {
    err << "error: --jobs must be positive\n";
    return kUsageError;
  }

  try {
    if (gen->parsed())
      cmd_generate(topology, monitors, samples, common, out);
    else if (mia_cmd->parsed())
      cmd_mia(mia, common, out);
    else if (sp_cmd->parsed())
      cmd_sparse(sp, common, out);
    else if (ev->parsed())
      cmd_eval(result_file, truth_file, harmonic, common, out);
    else if (camp->parsed())
      cmd_campaign(campaign_cfg, common, out);
    else if (grid->parsed())
      cmd_grid_search(grid_cfg, common, out);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kOk;
}

}  // namespace mobius::cli
