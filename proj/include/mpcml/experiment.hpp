#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "channel_synth.hpp"
#include "clustering.hpp"
#include "core_metric.hpp"
#include "evaluation.hpp"
#include "io.hpp"
#include "metric_learning.hpp"
#include "rng.hpp"

namespace mpcml {

inline const std::vector<std::string> kMetricNames = {"mcd", "mmc-diag", "lmnn-full", "delay-only"};
inline const std::vector<std::string> kAlgorithmNames = {"kmeans", "kpowermeans", "dbscan"};
inline const std::vector<std::string> kSweepNames = {"none",    "n_clusters", "angle_noise_deg",
                                                     "s_train", "m_train",    "n_train"};

struct Sweep {
  std::string parameter = "none";
  std::vector<double> values = {0.0};
};

struct ExperimentConfig {
  std::string model = "modified";  ///< "modified" or "legacy"
  GenConfig generator;
  std::optional<std::string> input;  ///< snapshot file, directory or glob instead of generation
  std::size_t cluster_size_threshold = 15;
  int realizations = 200;
  int n_train = 5, m_train = 5, s_train = 1;
  bool with_aod = false;
  std::vector<std::string> metrics = kMetricNames;
  std::vector<std::string> algorithms = kAlgorithmNames;
  Sweep sweep;
  std::uint64_t seed = 1;
  double angle_noise_deg = 0.0;
  /// MCD delay factor. With mcd_gamma_from_data the per-snapshot
  /// gamma = tau_std / max_delay_difference^2 is used and xi = zeta * gamma.
  double mcd_xi = 1.0;
  bool mcd_gamma_from_data = false;
  double mcd_zeta = 1.0;
  double delay_only_weight = 1e18;  ///< 1/ns^2, keeps transformed delays O(1)
  LmnnConfig lmnn;
  double mmc_tol = 1e-10;
  int mmc_max_iters = 200;
  DbscanParams dbscan;
  int kmeans_max_iters = 100;
  int jobs = 0;  ///< 0: MPCML_JOBS or hardware concurrency

  Scheme scheme() const { return with_aod ? Scheme::WithAod : Scheme::WithoutAod; }

  void validate() const {
    if (realizations < 1) throw std::invalid_argument("realizations must be >= 1");
    if (n_train < 1 || m_train < 1 || s_train < 1)
      throw std::invalid_argument("training budget values must be >= 1");
    if (model != "modified" && model != "legacy")
      throw std::invalid_argument("unknown generator model '" + model + "'");
    if (metrics.empty() || algorithms.empty())
      throw std::invalid_argument("metrics and algorithms must be non-empty");
    for (const auto& m : metrics)
      if (std::find(kMetricNames.begin(), kMetricNames.end(), m) == kMetricNames.end())
        throw std::invalid_argument("unknown metric '" + m + "'");
    for (const auto& a : algorithms)
      if (std::find(kAlgorithmNames.begin(), kAlgorithmNames.end(), a) == kAlgorithmNames.end())
        throw std::invalid_argument("unknown algorithm '" + a + "'");
    if (std::find(kSweepNames.begin(), kSweepNames.end(), sweep.parameter) == kSweepNames.end())
      throw std::invalid_argument("unknown sweep parameter '" + sweep.parameter + "'");
    if (sweep.values.empty()) throw std::invalid_argument("sweep values must be non-empty");
    if (input && sweep.parameter != "none" && sweep.parameter != "s_train" &&
        sweep.parameter != "m_train" && sweep.parameter != "n_train")
      throw std::invalid_argument("sweep '" + sweep.parameter + "' requires generated data");
    if (!(mcd_xi > 0.0) || !(mcd_zeta > 0.0)) throw std::invalid_argument("MCD factors must be positive");
    lmnn.validate();
    dbscan.validate();
  }
};

struct ResultRow {
  std::string sweep_parameter;
  double sweep_value = 0.0;
  std::string algorithm;
  std::string metric;
  double mean_f = 0.0;
  double sd_f = 0.0;
  std::size_t realizations = 0;  ///< realizations that produced a score
  std::uint64_t seed = 0;
  std::size_t excluded = 0;  ///< realizations whose clustering failed
};

/// Learned metrics and bookkeeping for one sweep value.
struct TrainedMetrics {
  std::map<std::string, MetricMatrix> metrics;
  std::size_t training_samples = 0;
};

struct ExperimentReport {
  std::vector<ResultRow> rows;
  std::vector<TrainedMetrics> trained;  ///< one per sweep value
  std::vector<std::string> notes;       ///< excluded realizations and their errors
};

// ---------------------------------------------------------------------------

struct TrainingSet {
  LabeledSet labeled;
  PairSets pairs;
  std::vector<std::size_t> snapshot_indices;
};

/// Picks s_train snapshots, n_train clusters in each (among clusters with at
/// least m_train MPCs) and m_train MPCs per cluster, uniformly at random.
inline TrainingSet sample_training_set(std::span<const Snapshot> snapshots, int n_train, int m_train,
                                       int s_train, std::uint64_t seed, Scheme scheme) {
  if (n_train < 1 || m_train < 1 || s_train < 1)
    throw std::invalid_argument("training budget values must be >= 1");
  if (snapshots.size() < static_cast<std::size_t>(s_train))
    throw std::invalid_argument("training needs " + std::to_string(s_train) + " snapshots, only " +
                                std::to_string(snapshots.size()) + " available");
  Rng rng(Rng::derive(seed, 0x7472616eULL));
  std::vector<std::size_t> snap_idx(snapshots.size());
  std::iota(snap_idx.begin(), snap_idx.end(), std::size_t{0});
  rng.shuffle(snap_idx);
  snap_idx.resize(static_cast<std::size_t>(s_train));
  std::sort(snap_idx.begin(), snap_idx.end());

  TrainingSet ts;
  ts.snapshot_indices = snap_idx;
  int next_label = 0;
  for (std::size_t si : snap_idx) {
    const Snapshot& s = snapshots[si];
    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < s.mpcs.size(); ++i)
      if (s.mpcs[i].label) members[*s.mpcs[i].label].push_back(i);
    std::vector<int> eligible;
    for (const auto& [lab, idx] : members)
      if (idx.size() >= static_cast<std::size_t>(m_train)) eligible.push_back(lab);
    if (eligible.size() < static_cast<std::size_t>(n_train))
      throw std::invalid_argument("snapshot " + std::to_string(si) + " has " +
                                  std::to_string(eligible.size()) + " clusters with >= " +
                                  std::to_string(m_train) + " MPCs; " + std::to_string(n_train) +
                                  " needed");
    rng.shuffle(eligible);
    eligible.resize(static_cast<std::size_t>(n_train));
    std::sort(eligible.begin(), eligible.end());
    for (int lab : eligible) {
      auto idx = members[lab];
      rng.shuffle(idx);
      idx.resize(static_cast<std::size_t>(m_train));
      std::sort(idx.begin(), idx.end());
      for (std::size_t i : idx) {
        ts.labeled.features.push_back(embed(s.mpcs[i], scheme));
        ts.labeled.labels.push_back(next_label);
      }
      ++next_label;
    }
  }
  ts.pairs = PairSets::from_labels(ts.labeled);
  return ts;
}

namespace detail {

enum ExperimentTag : std::uint64_t {
  kRealizationSeed = 11,
  kNoiseSeed = 12,
  kTrainSeed = 13,
  kClusterSeed = 14,
};

inline int resolve_jobs(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MPCML_JOBS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/// Runs fn(i) for i in [0, n) on `jobs` threads; results are placed by index
/// so the output does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

struct SweepPoint {
  ExperimentConfig cfg;  // config with the sweep value applied
  double value = 0.0;
};

inline SweepPoint apply_sweep(const ExperimentConfig& base, double v) {
  SweepPoint p{base, v};
  const auto& name = base.sweep.parameter;
  auto as_int = [&](const char* what) {
    const double r = std::round(v);
    if (std::abs(r - v) > 1e-9 || r < 1) throw std::invalid_argument(std::string(what) + " sweep needs positive integers");
    return static_cast<int>(r);
  };
  if (name == "n_clusters") p.cfg.generator.n_clusters = as_int("n_clusters");
  else if (name == "angle_noise_deg") p.cfg.angle_noise_deg = v;
  else if (name == "s_train") p.cfg.s_train = as_int("s_train");
  else if (name == "m_train") p.cfg.m_train = as_int("m_train");
  else if (name == "n_train") p.cfg.n_train = as_int("n_train");
  return p;
}

}  // namespace detail

/// Realizations for one configuration: generated (with optional angle
/// noise) or loaded from disk.
inline std::vector<Snapshot> make_realizations(const ExperimentConfig& cfg) {
  if (cfg.input) {
    auto snaps = load_labeled_mpcs(*cfg.input, cfg.cluster_size_threshold);
    if (static_cast<int>(snaps.size()) > cfg.realizations) snaps.resize(static_cast<std::size_t>(cfg.realizations));
    return snaps;
  }
  std::vector<Snapshot> out(static_cast<std::size_t>(cfg.realizations));
  detail::parallel_for(out.size(), detail::resolve_jobs(cfg.jobs), [&](std::size_t r) {
    GenConfig g = cfg.generator;
    g.seed = Rng::derive(cfg.seed, detail::kRealizationSeed, r);
    Snapshot s = cfg.model == "legacy" ? generate_legacy_snapshot(g) : generate_snapshot(g);
    if (cfg.angle_noise_deg > 0.0)
      s = add_angle_noise(s, cfg.angle_noise_deg * kDeg, Rng::derive(cfg.seed, detail::kNoiseSeed, r));
    out[r] = std::move(s);
  });
  return out;
}

/// Trains every learned metric requested by cfg on one sampled training set.
inline TrainedMetrics train_metrics(const ExperimentConfig& cfg, std::span<const Snapshot> snaps) {
  TrainedMetrics tm;
  const Scheme scheme = cfg.scheme();
  const bool need_training =
      std::count(cfg.metrics.begin(), cfg.metrics.end(), "mmc-diag") +
          std::count(cfg.metrics.begin(), cfg.metrics.end(), "lmnn-full") >
      0;
  if (!cfg.mcd_gamma_from_data) tm.metrics.emplace("mcd", mcd_matrix(cfg.mcd_xi, scheme));
  tm.metrics.emplace("delay-only", delay_only_matrix(cfg.delay_only_weight, scheme));
  if (!need_training) return tm;

  const TrainingSet ts = sample_training_set(snaps, cfg.n_train, cfg.m_train, cfg.s_train,
                                             Rng::derive(cfg.seed, detail::kTrainSeed), scheme);
  tm.training_samples = ts.labeled.size();
  for (const auto& name : cfg.metrics) {
    try {
      if (name == "mmc-diag") tm.metrics.emplace(name, mmc_learn_diagonal(ts.pairs, cfg.mmc_tol, cfg.mmc_max_iters));
      if (name == "lmnn-full") {
        LmnnConfig lc = cfg.lmnn;
        if (lc.init && lc.init->dim() != feature_dim(scheme))
          throw std::invalid_argument("LMNN init metric dimension does not match the feature scheme");
        tm.metrics.emplace(name, lmnn_learn(ts.labeled, lc));
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("training " + name + " failed: " + e.what());
    }
  }
  return tm;
}

/// Clusters one snapshot with one algorithm under one metric.
inline ClusterAssignment cluster_snapshot(const Snapshot& s, const std::string& algorithm,
                                          const MetricMatrix& a, Scheme scheme, std::uint64_t seed,
                                          const ExperimentConfig& cfg) {
  if (a.dim() != feature_dim(scheme))
    throw std::invalid_argument("metric dimension " + std::to_string(a.dim()) +
                                " does not match feature scheme " + to_string(scheme));
  const Eigen::MatrixXd x = stack(embed_all(s.mpcs, scheme));
  if (algorithm == "kmeans") return kmeans(x, s.n_clusters, a, seed, cfg.kmeans_max_iters);
  if (algorithm == "kpowermeans") {
    const auto p = s.powers();
    return kpowermeans(x, p, s.n_clusters, a, seed, cfg.kmeans_max_iters);
  }
  if (algorithm == "dbscan") return dbscan(x, a, cfg.dbscan);
  throw std::invalid_argument("unknown algorithm '" + algorithm + "'");
}

/// Full protocol: per sweep value, build realizations, train the metrics
/// once, then cluster and score every realization x algorithm x metric.
inline ExperimentReport run_experiment(const ExperimentConfig& base) {
  base.validate();
  ExperimentReport report;
  const Scheme scheme = base.scheme();
  const int jobs = detail::resolve_jobs(base.jobs);

  for (double v : base.sweep.values) {
    const auto point = detail::apply_sweep(base, v);
    const ExperimentConfig& cfg = point.cfg;
    cfg.generator.validate();
    const auto snaps = make_realizations(cfg);
    if (snaps.empty()) throw std::runtime_error("no realizations available");
    TrainedMetrics tm = train_metrics(cfg, snaps);

    const std::size_t n_alg = cfg.algorithms.size(), n_met = cfg.metrics.size();
    struct Cell {
      std::optional<double> f;
      std::string error;
    };
    std::vector<Cell> cells(snaps.size() * n_alg * n_met);
    detail::parallel_for(snaps.size(), jobs, [&](std::size_t r) {
      const Snapshot& s = snaps[r];
      const auto truth = s.labels();
      const std::uint64_t cseed = Rng::derive(cfg.seed, detail::kClusterSeed, r);
      for (std::size_t ai = 0; ai < n_alg; ++ai)
        for (std::size_t mi = 0; mi < n_met; ++mi) {
          Cell& cell = cells[(r * n_alg + ai) * n_met + mi];
          try {
            const auto& mname = cfg.metrics[mi];
            MetricMatrix a;
            if (mname == "mcd" && cfg.mcd_gamma_from_data)
              a = mcd_matrix(McdParams(cfg.mcd_zeta, default_gamma(s.mpcs)).xi(), scheme);
            else
              a = tm.metrics.at(mname);
            const auto pred = cluster_snapshot(s, cfg.algorithms[ai], a, scheme, cseed, cfg);
            cell.f = f_measure(truth, pred.assignment).overall_f;
          } catch (const std::exception& e) {
            cell.error = e.what();
          }
        }
    });

    for (std::size_t ai = 0; ai < n_alg; ++ai)
      for (std::size_t mi = 0; mi < n_met; ++mi) {
        std::vector<FReport> reps;
        std::size_t excluded = 0;
        for (std::size_t r = 0; r < snaps.size(); ++r) {
          const Cell& c = cells[(r * n_alg + ai) * n_met + mi];
          if (c.f) {
            FReport fr;
            fr.overall_f = *c.f;
            reps.push_back(fr);
          } else {
            ++excluded;
            report.notes.push_back("sweep " + format_double(v) + " realization " + std::to_string(r) +
                                   " " + cfg.algorithms[ai] + "/" + cfg.metrics[mi] + ": " + c.error);
          }
        }
        ResultRow row;
        row.sweep_parameter = base.sweep.parameter;
        row.sweep_value = v;
        row.algorithm = cfg.algorithms[ai];
        row.metric = cfg.metrics[mi];
        row.seed = base.seed;
        row.excluded = excluded;
        if (!reps.empty()) {
          const auto sum = aggregate(reps);
          row.mean_f = sum.mean;
          row.sd_f = sum.sd;
          row.realizations = sum.count;
        }
        report.rows.push_back(row);
      }
    report.trained.push_back(std::move(tm));
  }
  return report;
}

inline constexpr std::string_view kResultHeader =
    "sweep_value,algorithm,metric,mean_f,sd_f,realizations,seed,excluded";

inline void write_results_csv(std::ostream& os, std::span<const ResultRow> rows) {
  os << kResultHeader << '\n';
  for (const auto& r : rows)
    os << format_double(r.sweep_value) << ',' << r.algorithm << ',' << r.metric << ','
       << format_double(r.mean_f) << ',' << format_double(r.sd_f) << ',' << r.realizations << ','
       << r.seed << ',' << r.excluded << '\n';
}

// ---------------------------------------------------------------------------
// Experiment config JSON.

inline ExperimentConfig experiment_config_from_json(const json& j) {
  static const std::set<std::string> known = {
      "model",     "generator",  "input",   "cluster_size_threshold", "realizations",
      "n_train",   "m_train",    "s_train", "with_aod",               "metrics",
      "algorithms", "sweep",     "seed",    "angle_noise_deg",        "mcd",
      "delay_only_weight", "lmnn", "mmc",   "dbscan",                 "kmeans_max_iters",
      "jobs"};
  ExperimentConfig c;
  try {
    for (const auto& [k, v] : j.items())
      if (!known.count(k)) throw FormatError("unknown config key '" + k + "'");
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("model", c.model);
    if (j.contains("generator")) c.generator = j.at("generator").get<GenConfig>();
    if (j.contains("input")) c.input = j.at("input").get<std::string>();
    get("cluster_size_threshold", c.cluster_size_threshold);
    get("realizations", c.realizations);
    get("n_train", c.n_train);
    get("m_train", c.m_train);
    get("s_train", c.s_train);
    get("with_aod", c.with_aod);
    get("metrics", c.metrics);
    get("algorithms", c.algorithms);
    get("seed", c.seed);
    get("angle_noise_deg", c.angle_noise_deg);
    get("delay_only_weight", c.delay_only_weight);
    get("kmeans_max_iters", c.kmeans_max_iters);
    get("jobs", c.jobs);
    if (j.contains("sweep")) {
      const auto& s = j.at("sweep");
      c.sweep.parameter = s.value("parameter", std::string("none"));
      if (s.contains("values")) {
        c.sweep.values = s.at("values").get<std::vector<double>>();
      } else if (s.contains("from")) {
        const double from = s.at("from").get<double>(), to = s.at("to").get<double>();
        const double step = s.value("step", 1.0);
        if (!(step > 0.0) || to < from) throw FormatError("sweep range must satisfy from <= to, step > 0");
        c.sweep.values.clear();
        for (double v = from; v <= to + 1e-9 * std::max(1.0, std::abs(to)); v += step) c.sweep.values.push_back(v);
      }
    }
    if (j.contains("mcd")) {
      const auto& m = j.at("mcd");
      c.mcd_xi = m.value("xi", c.mcd_xi);
      c.mcd_zeta = m.value("zeta", c.mcd_zeta);
      c.mcd_gamma_from_data = m.value("gamma", std::string("fixed")) == "data";
    }
    if (j.contains("lmnn")) {
      const auto& l = j.at("lmnn");
      c.lmnn.k = l.value("k", c.lmnn.k);
      c.lmnn.mu = l.value("mu", c.lmnn.mu);
      c.lmnn.max_iters = l.value("max_iters", c.lmnn.max_iters);
      c.lmnn.step_init = l.value("step_init", c.lmnn.step_init);
      c.lmnn.refresh_period = l.value("refresh_period", c.lmnn.refresh_period);
      c.lmnn.tol = l.value("tol", c.lmnn.tol);
      c.lmnn.smoothing_init = l.value("smoothing_init", c.lmnn.smoothing_init);
      c.lmnn.smoothing_final = l.value("smoothing_final", c.lmnn.smoothing_final);
      if (l.contains("init")) c.lmnn.init = metric_from_json(l.at("init"));
    }
    if (j.contains("mmc")) {
      c.mmc_tol = j.at("mmc").value("tol", c.mmc_tol);
      c.mmc_max_iters = j.at("mmc").value("max_iters", c.mmc_max_iters);
    }
    if (j.contains("dbscan")) {
      const auto& d = j.at("dbscan");
      c.dbscan.min_pts = d.value("min_pts", c.dbscan.min_pts);
      if (d.contains("eps") && !d.at("eps").is_null()) {
        if (d.at("eps").is_string()) {
          if (d.at("eps").get<std::string>() != "auto") throw FormatError("dbscan eps must be a number or \"auto\"");
        } else {
          c.dbscan.eps = d.at("eps").get<double>();
        }
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("experiment config: ") + e.what());
  }
  return c;
}

}  // namespace mpcml
