// Acceptance run: one PASS/FAIL line per criterion.
//
//   mpcml_acceptance [--only NAME] [--unit-tests PATH]
//
// Every threshold, configuration and seed used below is fixed here.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <mpcml/mpcml.hpp>

using namespace mpcml;

namespace {

constexpr std::uint64_t kSeed = 1;
constexpr int kRealizations = 50;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(prec) << v;
  return s.str();
}

std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(2) << v;
  return s.str();
}

// LMNN run to convergence: the library default stopping rule (relative
// change 1e-7 per step) halts while the step size is still growing.
LmnnConfig converged_lmnn() {
  LmnnConfig c;
  c.max_iters = 200000;
  c.tol = 1e-12;
  return c;
}

// Modified-model generator used by the relative criteria.
GenConfig modified_generator() {
  GenConfig g;
  g.intra_angle_spread_rad = 0.2618;  // 15 degrees
  g.delay_spread_s = 100e-9;
  g.max_excess_delay_s = 2e-6;
  return g;
}

using Table = std::map<std::pair<std::string, std::string>, double>;  // (algorithm, metric) -> mean F

Table mean_f(const ExperimentReport& rep) {
  Table t;
  for (const auto& r : rep.rows) t[{r.algorithm, r.metric}] = r.mean_f;
  return t;
}

Outcome prop1() {
  const auto t0 = Clock::now();
  Rng r(kSeed);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    auto draw = [&] {
      Mpc m;
      m.tau = r.uniform(0.0, 1.0);  // large enough that the delay term matters
      m.aaod = r.uniform(0.0, kTwoPi);
      m.aaoa = r.uniform(0.0, kTwoPi);
      m.zaod = r.uniform(0.0, std::numbers::pi);
      m.zaoa = r.uniform(0.0, std::numbers::pi);
      return m;
    };
    const Mpc a = draw(), b = draw();
    const double xi = 10.0 * r.uniform_open0();
    for (Scheme s : {Scheme::WithAod, Scheme::WithoutAod}) {
      const double want = mcd(a, b, McdParams::from_xi(xi), s);
      const double got = mahalanobis(embed(a, s), embed(b, s), mcd_matrix(xi, s));
      worst = std::max(worst, std::abs(got - want) / (1.0 + got));
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 1.0, "max |diff|/(1+d) = " + sci(worst) + ", " + fmt(secs, 3) + " s"};
}

Outcome prop2() {
  const auto t0 = Clock::now();
  Rng r(kSeed + 1);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const int d = k % 2 ? 7 : 4;
    Eigen::MatrixXd b(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) b(i, j) = r.normal();
    const MetricMatrix a(b.transpose() * b);
    Eigen::VectorXd x(d), y(d);
    for (int i = 0; i < d; ++i) {
      x(i) = r.normal();
      y(i) = r.normal();
    }
    const Eigen::MatrixXd s = sqrt_transform(a);
    const double want = mahalanobis(FeatureVector(x), FeatureVector(y), a);
    worst = std::max(worst, std::abs((s * x - s * y).norm() - want) / want);
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-8 && secs < 1.0, "max relative diff = " + sci(worst) + ", " + fmt(secs, 3) + " s"};
}

Outcome legacy() {
  const auto t0 = Clock::now();
  ExperimentConfig c;
  c.model = "legacy";
  c.generator.n_clusters = 30;
  c.generator.intra_angle_spread_rad = 0.2618;
  c.generator.delay_spread_s = 300e-9;
  c.generator.cluster_ds_s = 1e-9;
  c.generator.max_excess_delay_s = 1e-5;
  c.realizations = kRealizations;
  c.seed = kSeed;
  c.metrics = {"lmnn-full"};
  c.algorithms = {"kpowermeans"};
  c.lmnn = converged_lmnn();
  const auto rep = run_experiment(c);
  const double f = rep.rows.at(0).mean_f;

  // Angle-block mass against the delay entry, in units where every feature
  // coordinate of the training set has unit spread.
  const auto snaps = make_realizations(c);
  const auto ts = sample_training_set(snaps, c.n_train, c.m_train, c.s_train,
                                      Rng::derive(c.seed, detail::kTrainSeed), c.scheme());
  const Eigen::VectorXd s = detail::feature_scale(stack(ts.labeled.features));
  const Eigen::MatrixXd a = detail::to_scaled_metric(rep.trained.at(0).metrics.at("lmnn-full").entries(), s);
  const auto d = a.rows();
  const double ratio = a.bottomRightCorner(d - 1, d - 1).cwiseAbs().sum() / a(0, 0);
  const double secs = seconds_since(t0);
  return {f >= 0.95 && ratio < 0.01 && secs < 300.0,
          "F(LMNN, KPowerMeans) = " + fmt(f) + " (>= 0.95), angle/delay mass = " + sci(ratio) +
              " (< 0.01), " + fmt(secs, 1) + " s"};
}

Outcome modified() {
  const auto t0 = Clock::now();
  ExperimentConfig c;
  c.generator = modified_generator();
  c.realizations = kRealizations;
  c.seed = kSeed;
  c.metrics = {"mcd", "mmc-diag", "lmnn-full"};
  c.sweep = {"n_clusters", {10, 20, 30}};
  c.lmnn = converged_lmnn();
  const auto rep = run_experiment(c);
  bool ok = true;
  std::ostringstream s;
  for (double n : c.sweep.values) {
    ExperimentReport one;
    for (const auto& r : rep.rows)
      if (r.sweep_value == n) one.rows.push_back(r);
    const auto t = mean_f(one);
    s << "\n    N=" << n << ":";
    for (const auto& alg : c.algorithms) {
      const double m = t.at({alg, "mcd"}), l = t.at({alg, "lmnn-full"}), d = t.at({alg, "mmc-diag"});
      const bool here = l >= m + 0.10 && d >= m + 0.05;
      ok &= here;
      s << " " << alg << " MCD " << fmt(m, 3) << " LMNN " << fmt(l, 3) << " MMC " << fmt(d, 3)
        << (here ? "" : " [short]") << ";";
    }
  }
  const double secs = seconds_since(t0);
  ok &= secs < 900.0;
  return {ok, "LMNN >= MCD + 0.10 and MMC >= MCD + 0.05, " + fmt(secs, 1) + " s" + s.str()};
}

Outcome budget() {
  const auto t0 = Clock::now();
  auto run = [](int n, int m, int s) {
    ExperimentConfig c;
    c.generator = modified_generator();
    c.generator.n_clusters = 20;
    c.realizations = kRealizations;
    c.seed = kSeed;
    c.n_train = n;
    c.m_train = m;
    c.s_train = s;
    c.metrics = {"lmnn-full"};
    c.algorithms = {"kpowermeans"};
    c.lmnn = converged_lmnn();
    return run_experiment(c).rows.at(0).mean_f;
  };
  const double small = run(5, 5, 1), large = run(8, 10, 3);
  const double secs = seconds_since(t0);
  return {std::abs(small - large) <= 0.03 && secs < 1200.0,
          "F(5,5,1) = " + fmt(small) + ", F(8,10,3) = " + fmt(large) + ", |diff| = " + fmt(std::abs(small - large)) +
              " (<= 0.03), " + fmt(secs, 1) + " s"};
}

Outcome angle_noise() {
  const auto t0 = Clock::now();
  ExperimentConfig c;
  c.generator = modified_generator();
  c.generator.n_clusters = 20;
  c.realizations = kRealizations;
  c.seed = kSeed;
  c.angle_noise_deg = 40.0;
  c.metrics = {"mcd", "lmnn-full", "delay-only"};
  c.algorithms = {"kmeans", "kpowermeans"};
  c.lmnn = converged_lmnn();
  const auto t = mean_f(run_experiment(c));
  bool ok = true;
  std::ostringstream s;
  for (const auto& alg : c.algorithms) {
    const double m = t.at({alg, "mcd"}), l = t.at({alg, "lmnn-full"}), d = t.at({alg, "delay-only"});
    ok &= l >= m + 0.2 && std::abs(l - d) <= 0.05;
    s << "\n    " << alg << ": LMNN " << fmt(l, 3) << " MCD " << fmt(m, 3) << " delay-only " << fmt(d, 3);
  }
  const double secs = seconds_since(t0);
  ok &= secs < 900.0;
  return {ok, "LMNN >= MCD + 0.2 and |LMNN - delay-only| <= 0.05, " + fmt(secs, 1) + " s" + s.str()};
}

std::string g_unit_tests;

Outcome properties() {
  if (g_unit_tests.empty()) return {false, "no unit test binary given (--unit-tests PATH)"};
  const auto t0 = Clock::now();
  const std::string cmd = "\"" + g_unit_tests + "\" --gtest_brief=1 > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  const double secs = seconds_since(t0);
  return {rc == 0 && secs < 120.0, "unit suite exit " + std::to_string(rc) + ", " + fmt(secs, 1) + " s (< 120 s)"};
}

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) only = argv[++i];
    else if (a == "--unit-tests" && i + 1 < argc) g_unit_tests = argv[++i];
    else {
      std::cerr << "usage: " << argv[0] << " [--only NAME] [--unit-tests PATH]\n";
      return 2;
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"mcd-is-mahalanobis", prop1}, {"sqrt-transform-equivalence", prop2},
      {"legacy-degeneracy", legacy}, {"modified-improvement", modified},
      {"training-budget", budget},   {"angle-noise", angle_noise},
      {"property-suites", properties}};

  int failed = 0, ran = 0;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && only != name) continue;
    ++ran;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  if (ran == 0) {
    std::cerr << "unknown criterion '" << only << "'\n";
    return 2;
  }
  return failed ? 1 : 0;
}
