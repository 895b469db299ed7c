#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include <mpcml/mpcml.hpp>

using namespace mpcml;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mpcml_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::string row(double tau, double power, int label) {
  std::ostringstream s;
  s << tau << ',' << power << ",0.1,1.0,0.2,1.5," << label << '\n';
  return s.str();
}

}  // namespace

TEST(SnapshotCsv, RoundTrip) {
  GenConfig g;
  g.seed = 12;
  g.n_clusters = 7;
  const auto s = generate_snapshot(g);
  const auto dir = scratch("roundtrip");
  save_snapshot(dir, "snap", s);
  const auto back = load_snapshot_csv(dir / "snap.csv");
  ASSERT_EQ(back.mpcs.size(), s.mpcs.size());
  for (std::size_t i = 0; i < s.mpcs.size(); ++i) {
    const auto &a = s.mpcs[i], &b = back.mpcs[i];
    for (auto [x, y] : {std::pair{a.tau, b.tau}, {a.power, b.power}, {a.aaod, b.aaod}, {a.zaod, b.zaod},
                        {a.aaoa, b.aaoa}, {a.zaoa, b.zaoa}})
      EXPECT_NEAR(x, y, 1e-12 * std::max(1.0, std::abs(x)));
    EXPECT_EQ(a.label, b.label);
  }
  EXPECT_EQ(back.n_clusters, 7);
  EXPECT_EQ(back.meta.config.seed, 12u);
  EXPECT_EQ(back.meta.model, "modified");
}

TEST(SnapshotCsv, ClusterSizeFilter) {
  const auto dir = scratch("filter");
  std::string text = std::string(kSnapshotHeader) + "\n";
  for (int i = 0; i < 16; ++i) text += row(1e-9 * i, 0.1, 4);
  for (int i = 0; i < 10; ++i) text += row(1e-9 * i, 0.1, 9);
  write(dir / "m.csv", text);
  const auto kept = load_labeled_mpcs(dir / "m.csv", 15);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].n_clusters, 1);
  EXPECT_EQ(kept[0].mpcs.size(), 16u);
  EXPECT_EQ(*kept[0].mpcs[0].label, 0);
  EXPECT_EQ(load_labeled_mpcs(dir / "m.csv", 0)[0].n_clusters, 2);
  // Exactly the threshold size is dropped ("more than" 15).
  std::string edge = std::string(kSnapshotHeader) + "\n";
  for (int i = 0; i < 15; ++i) edge += row(1e-9 * i, 0.1, 0);
  for (int i = 0; i < 16; ++i) edge += row(1e-9 * i, 0.1, 1);
  write(dir / "e.csv", edge);
  EXPECT_EQ(load_labeled_mpcs(dir / "e.csv", 15)[0].mpcs.size(), 16u);
}

TEST(SnapshotCsv, ErrorsNameTheLine) {
  const auto dir = scratch("errors");
  write(dir / "neg.csv", std::string(kSnapshotHeader) + "\n" + row(0, 1, 0) + row(0, -1, 0));
  try {
    load_snapshot_csv(dir / "neg.csv");
    FAIL() << "expected a format error";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("negative power"), std::string::npos);
  }
  write(dir / "hdr.csv", "a,b,c\n1,2,3\n");
  EXPECT_THROW(load_snapshot_csv(dir / "hdr.csv"), FormatError);
  write(dir / "empty.csv", "");
  EXPECT_THROW(load_snapshot_csv(dir / "empty.csv"), FormatError);
  write(dir / "short.csv", std::string(kSnapshotHeader) + "\n1,2,3\n");
  EXPECT_THROW(load_snapshot_csv(dir / "short.csv"), FormatError);
  write(dir / "nan.csv", std::string(kSnapshotHeader) + "\n1,abc,0,0,0,0,0\n");
  EXPECT_THROW(load_snapshot_csv(dir / "nan.csv"), FormatError);
}

TEST(SnapshotCsv, GlobAndDirectory) {
  const auto dir = scratch("glob");
  GenConfig g;
  for (int r = 0; r < 3; ++r) {
    g.seed = r;
    save_snapshot(dir, "snap_" + std::to_string(r), generate_snapshot(g));
  }
  write(dir / "other.txt", "ignored");
  EXPECT_EQ(load_labeled_mpcs(dir, 0).size(), 3u);
  EXPECT_EQ(load_labeled_mpcs(dir / "snap_*.csv", 0).size(), 3u);
  EXPECT_THROW(load_labeled_mpcs(dir / "none_*.csv", 0), std::runtime_error);
}

TEST(MetricJson, RoundTripAndChecks) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(4, 4);
  m(0, 0) = 3e17;
  m(0, 1) = m(1, 0) = 1e8;
  const MetricMatrix a(m);
  EXPECT_EQ(metric_from_json(metric_to_json(a)), a);
  auto j = metric_to_json(a);
  j["scheme"] = "with_aod";
  EXPECT_THROW(metric_from_json(j), FormatError);
  j = metric_to_json(a);
  j["entries"].erase(0);
  EXPECT_THROW(metric_from_json(j), FormatError);
}

TEST(Sampler, CountsPairsAndDeterminism) {
  GenConfig g;
  std::vector<Snapshot> snaps;
  for (int r = 0; r < 4; ++r) {
    g.seed = 100 + r;
    snaps.push_back(generate_snapshot(g));
  }
  const auto ts = sample_training_set(snaps, 5, 5, 1, 7, Scheme::WithoutAod);
  EXPECT_EQ(ts.labeled.size(), 25u);
  EXPECT_EQ(ts.pairs.same.size(), 5u * 10u);
  EXPECT_EQ(ts.pairs.different.size(), 25u * 24u / 2u - 50u);
  const auto big = sample_training_set(snaps, 8, 10, 3, 7, Scheme::WithAod);
  EXPECT_EQ(big.labeled.size(), 240u);
  EXPECT_EQ(big.labeled.features[0].dim(), 7);
  EXPECT_EQ(big.snapshot_indices.size(), 3u);
  const auto whole = sample_training_set(snaps, 2, 20, 1, 3, Scheme::WithoutAod);
  EXPECT_EQ(whole.labeled.size(), 40u);
  const auto again = sample_training_set(snaps, 5, 5, 1, 7, Scheme::WithoutAod);
  EXPECT_EQ(again.labeled.labels, ts.labeled.labels);
  for (std::size_t i = 0; i < ts.labeled.size(); ++i)
    EXPECT_EQ(again.labeled.features[i].coords, ts.labeled.features[i].coords);
  EXPECT_THROW(sample_training_set(snaps, 5, 21, 1, 7, Scheme::WithoutAod), std::invalid_argument);
  EXPECT_THROW(sample_training_set(snaps, 5, 5, 5, 7, Scheme::WithoutAod), std::invalid_argument);
}

TEST(Experiment, TrainingSeesExactBudget) {
  ExperimentConfig c;
  c.realizations = 3;
  c.n_train = 4;
  c.m_train = 6;
  c.s_train = 2;
  c.metrics = {"mmc-diag", "mcd"};
  c.algorithms = {"kmeans"};
  c.jobs = 1;
  const auto rep = run_experiment(c);
  ASSERT_EQ(rep.trained.size(), 1u);
  EXPECT_EQ(rep.trained[0].training_samples, 48u);
  EXPECT_EQ(rep.rows.size(), 2u);
}

TEST(Experiment, ByteIdenticalCsvAcrossRunsAndThreads) {
  ExperimentConfig c;
  c.realizations = 4;
  c.metrics = {"mcd", "delay-only", "mmc-diag", "lmnn-full"};
  c.lmnn.max_iters = 50;
  c.sweep = {"n_clusters", {5, 8}};
  auto csv = [](const ExperimentConfig& cfg) {
    std::ostringstream os;
    const auto rep = run_experiment(cfg);
    write_results_csv(os, rep.rows);
    return os.str();
  };
  c.jobs = 1;
  const auto a = csv(c);
  c.jobs = 3;
  EXPECT_EQ(csv(c), a);
  EXPECT_EQ(a.substr(0, kResultHeader.size()), kResultHeader);
  c.seed = 2;
  EXPECT_NE(csv(c), a);
}

TEST(Experiment, RowsAreBoundedAndComplete) {
  ExperimentConfig c;
  c.realizations = 3;
  c.with_aod = true;
  c.lmnn.max_iters = 30;
  c.sweep = {"angle_noise_deg", {0, 30}};
  c.jobs = 1;
  const auto rep = run_experiment(c);
  EXPECT_EQ(rep.rows.size(), 2u * 3u * 4u);
  for (const auto& r : rep.rows) {
    EXPECT_GE(r.mean_f, 0.0);
    EXPECT_LE(r.mean_f, 1.0);
    EXPECT_EQ(r.realizations + r.excluded, 3u);
  }
  for (const auto& t : rep.trained) EXPECT_EQ(t.metrics.at("lmnn-full").dim(), 7);
}

TEST(Experiment, DimensionMismatchIsAnError) {
  ExperimentConfig c;
  c.realizations = 1;
  c.metrics = {"lmnn-full"};
  c.lmnn.init = mcd_matrix(1.0, Scheme::WithAod);
  EXPECT_THROW(run_experiment(c), std::runtime_error);
  GenConfig g;
  const auto s = generate_snapshot(g);
  EXPECT_THROW(cluster_snapshot(s, "kmeans", mcd_matrix(1.0, Scheme::WithAod), Scheme::WithoutAod, 1, c),
               std::invalid_argument);
}

TEST(Experiment, LoadsFromFiles) {
  const auto dir = scratch("input");
  GenConfig g;
  for (int r = 0; r < 3; ++r) {
    g.seed = 40 + r;
    save_snapshot(dir, "s" + std::to_string(r), generate_snapshot(g));
  }
  ExperimentConfig c;
  c.input = dir.string();
  c.realizations = 10;
  c.metrics = {"mcd", "mmc-diag"};
  c.algorithms = {"kpowermeans"};
  c.jobs = 1;
  const auto rep = run_experiment(c);
  EXPECT_EQ(rep.rows[0].realizations, 3u);
}

TEST(ConfigJson, ParsesAndRejects) {
  const auto j = json::parse(R"({
    "model": "legacy", "realizations": 7, "with_aod": true,
    "generator": {"n_clusters": 12, "cluster_ds_s": 1e-9},
    "sweep": {"parameter": "n_clusters", "from": 10, "to": 30, "step": 10},
    "lmnn": {"k": 2, "max_iters": 1000, "tol": 1e-12},
    "dbscan": {"eps": "auto", "min_pts": 4},
    "mcd": {"xi": 2.0}
  })");
  const auto c = experiment_config_from_json(j);
  EXPECT_EQ(c.model, "legacy");
  EXPECT_EQ(c.realizations, 7);
  EXPECT_TRUE(c.with_aod);
  EXPECT_EQ(c.generator.n_clusters, 12);
  EXPECT_EQ(c.sweep.values, (std::vector<double>{10, 20, 30}));
  EXPECT_EQ(c.lmnn.k, 2);
  EXPECT_EQ(c.lmnn.tol, 1e-12);
  EXPECT_FALSE(c.dbscan.eps.has_value());
  EXPECT_EQ(c.dbscan.min_pts, 4);
  EXPECT_EQ(c.mcd_xi, 2.0);
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"bogus": 1})")), FormatError);
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"generator": {"nclusters": 1}})")), FormatError);
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"realizations": "x"})")), FormatError);
  ExperimentConfig bad;
  bad.metrics = {"euclid"};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}
