// Command-line front end: generate, train, cluster, evaluate, experiment.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <mpcml/mpcml.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mpcml;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::optional<int> jobs;
};

ExperimentConfig load_config(const Common& c) {
  ExperimentConfig cfg;
  if (!c.config.empty()) {
    std::ifstream in(c.config);
    if (!in) throw std::runtime_error("cannot open config " + c.config);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw FormatError(c.config + ": " + e.what());
    }
    cfg = experiment_config_from_json(j);
  }
  if (c.seed) cfg.seed = *c.seed;
  if (c.jobs) cfg.jobs = *c.jobs;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* app, Common& c, bool with_out = true) {
  app->add_option("--config", c.config, "experiment JSON config");
  app->add_option("--seed", c.seed, "master seed (overrides the config)");
  if (with_out) app->add_option("--out", c.out, "output directory");
  app->add_option("--jobs", c.jobs, "worker threads (env MPCML_JOBS also honoured)");
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

std::string stem_of(std::size_t r) {
  std::ostringstream ss;
  ss << "snapshot_" << std::setw(4) << std::setfill('0') << r;
  return ss.str();
}

int cmd_generate(const Common& c) {
  const auto cfg = load_config(c);
  if (cfg.input) throw std::invalid_argument("generate: the config names an input, nothing to generate");
  const auto snaps = make_realizations(cfg);
  fs::create_directories(c.out);
  for (std::size_t r = 0; r < snaps.size(); ++r) save_snapshot(c.out, stem_of(r), snaps[r]);
  std::cout << json{{"snapshots", snaps.size()}, {"out", c.out}}.dump() << '\n';
  return 0;
}

int cmd_train(const Common& c) {
  const auto cfg = load_config(c);
  const auto snaps = make_realizations(cfg);
  const auto tm = train_metrics(cfg, snaps);
  json summary = {{"training_samples", tm.training_samples}, {"metrics", json::array()}};
  for (const auto& [name, a] : tm.metrics) {
    const fs::path p = fs::path(c.out) / ("metric_" + name + ".json");
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    save_metric(p, a);
    summary["metrics"].push_back(p.string());
  }
  std::cout << summary.dump() << '\n';
  return 0;
}

int cmd_cluster(const Common& c, const std::string& input, const std::string& metric,
                const std::string& algorithm) {
  const auto cfg = load_config(c);
  const Scheme scheme = cfg.scheme();
  MetricMatrix a;
  if (metric == "mcd") a = mcd_matrix(cfg.mcd_xi, scheme);
  else if (metric == "delay-only") a = delay_only_matrix(cfg.delay_only_weight, scheme);
  else a = load_metric(metric);

  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    for (const auto& e : fs::directory_iterator(input))
      if (e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(input);
  }
  if (files.empty()) throw std::invalid_argument("cluster: no snapshot CSV under " + input);

  json summary = json::array();
  for (std::size_t r = 0; r < files.size(); ++r) {
    const Snapshot s = load_snapshot_csv(files[r], cfg.cluster_size_threshold);
    const auto res = cluster_snapshot(s, algorithm, a, scheme, Rng::derive(cfg.seed, detail::kClusterSeed, r), cfg);
    const fs::path p = fs::path(c.out) / (files[r].stem().string() + "_" + algorithm + ".csv");
    auto os = open_out(p);
    os << "index,truth,pred\n";
    const auto truth = s.labels();
    for (std::size_t i = 0; i < truth.size(); ++i) os << i << ',' << truth[i] << ',' << res.assignment[i] << '\n';
    summary.push_back({{"file", p.string()}, {"clusters_found", res.n_found}, {"iterations", res.iterations}});
  }
  std::cout << summary.dump() << '\n';
  return 0;
}

// Assignment files are the "index,truth,pred" CSVs written by `cluster`.
FReport evaluate_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "index,truth,pred")
    throw FormatError(p.string() + ":1: expected header index,truth,pred");
  std::vector<int> truth, pred;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_commas(line);
    if (cells.size() != 3) throw FormatError(p.string() + ":" + std::to_string(lineno) + ": expected 3 fields");
    try {
      truth.push_back(std::stoi(std::string(cells[1])));
      pred.push_back(std::stoi(std::string(cells[2])));
    } catch (const std::exception&) {
      throw FormatError(p.string() + ":" + std::to_string(lineno) + ": non-integer label");
    }
  }
  return f_measure(truth, pred);
}

int cmd_evaluate(const std::vector<std::string>& inputs) {
  std::vector<FReport> reps;
  json out = {{"files", json::array()}};
  for (const auto& in : inputs) {
    reps.push_back(evaluate_file(in));
    out["files"].push_back({{"file", in}, {"f", reps.back().overall_f}});
  }
  const auto sum = aggregate(reps);
  out["mean_f"] = sum.mean;
  out["sd_f"] = sum.sd;
  out["count"] = sum.count;
  std::cout << out.dump() << '\n';
  return 0;
}

int cmd_experiment(const Common& c) {
  const auto cfg = load_config(c);
  const auto rep = run_experiment(cfg);
  const fs::path csv = fs::path(c.out) / ("results_" + cfg.sweep.parameter + ".csv");
  {
    auto os = open_out(csv);
    write_results_csv(os, rep.rows);
  }
  json trained = json::array();
  for (std::size_t i = 0; i < rep.trained.size(); ++i) {
    json t = {{"sweep_value", cfg.sweep.values[i]}, {"training_samples", rep.trained[i].training_samples}};
    for (const auto& [name, a] : rep.trained[i].metrics) t["metrics"][name] = metric_to_json(a);
    trained.push_back(t);
  }
  {
    auto os = open_out(fs::path(c.out) / ("report_" + cfg.sweep.parameter + ".json"));
    os << json{{"notes", rep.notes}, {"trained", trained}}.dump(2) << '\n';
  }
  std::cout << json{{"results", csv.string()}, {"rows", rep.rows.size()}, {"excluded_notes", rep.notes.size()}}.dump()
            << '\n';
  return 0;
}

void error_line(const std::string& kind, const std::string& msg) {
  std::cerr << json{{"error", kind}, {"message", msg}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multipath component clustering with learned distance metrics"};
  app.require_subcommand(1);

  Common gen, tr, cl, ex;
  auto* g = app.add_subcommand("generate", "write synthetic snapshots (CSV + JSON sidecar)");
  add_common(g, gen);
  auto* t = app.add_subcommand("train", "train the learned metrics and write them as JSON");
  add_common(t, tr);

  std::string cl_input, cl_metric = "mcd", cl_alg = "kpowermeans";
  auto* c = app.add_subcommand("cluster", "cluster snapshot CSVs under one metric");
  add_common(c, cl);
  c->add_option("--input", cl_input, "snapshot CSV or directory")->required();
  c->add_option("--metric", cl_metric, "mcd, delay-only, or a metric JSON file");
  c->add_option("--algorithm", cl_alg, "kmeans, kpowermeans or dbscan")
      ->check(CLI::IsMember(kAlgorithmNames));

  std::vector<std::string> ev_inputs;
  auto* e = app.add_subcommand("evaluate", "F measure of assignment CSVs written by cluster");
  e->add_option("inputs", ev_inputs, "assignment CSV files")->required();

  auto* x = app.add_subcommand("experiment", "run a full sweep and write results CSV");
  add_common(x, ex);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    error_line("usage", err.what());
    return 2;
  }

  try {
    if (*g) return cmd_generate(gen);
    if (*t) return cmd_train(tr);
    if (*c) return cmd_cluster(cl, cl_input, cl_metric, cl_alg);
    if (*e) return cmd_evaluate(ev_inputs);
    if (*x) return cmd_experiment(ex);
  } catch (const FormatError& err) {
    error_line("format", err.what());
    return 3;
  } catch (const std::invalid_argument& err) {
    error_line("invalid_argument", err.what());
    return 4;
  } catch (const std::exception& err) {
    error_line("runtime", err.what());
    return 1;
  }
  return 0;
}
