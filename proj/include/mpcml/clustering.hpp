#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "core_metric.hpp"
#include "metric_learning.hpp"
#include "rng.hpp"

namespace mpcml {

inline constexpr int kNoise = -1;

struct ClusterAssignment {
  std::vector<int> assignment;  ///< cluster id per sample, kNoise for DBSCAN noise
  int n_found = 0;
  int iterations = 0;
  std::vector<double> objective_trace;  ///< within-cluster SSE per Lloyd iteration
  int zero_power_fallbacks = 0;         ///< KPowerMeans centroids that used the plain mean
};

struct DbscanParams {
  std::optional<double> eps;  ///< neighbourhood radius; empty selects auto_eps
  int min_pts = 5;

  void validate() const {
    if (eps && !(*eps > 0.0)) throw std::invalid_argument("DBSCAN eps must be positive");
    if (min_pts < 1) throw std::invalid_argument("DBSCAN min_pts must be >= 1");
  }
};

namespace detail {

/// Renumbers ids (noise untouched) by order of first appearance.
inline int compact_labels(std::vector<int>& ids) {
  std::vector<int> map;
  int next = 0;
  for (int& id : ids) {
    if (id < 0) continue;
    if (static_cast<std::size_t>(id) >= map.size()) map.resize(static_cast<std::size_t>(id) + 1, -1);
    if (map[static_cast<std::size_t>(id)] < 0) map[static_cast<std::size_t>(id)] = next++;
    id = map[static_cast<std::size_t>(id)];
  }
  return next;
}

inline std::vector<std::size_t> kmeanspp_seeds(const Eigen::MatrixXd& y, int k, Rng& rng) {
  const auto n = static_cast<std::size_t>(y.rows());
  std::vector<std::size_t> seeds;
  std::vector<double> mind(n, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(n, false);
  auto pick = [&](std::size_t idx) {
    seeds.push_back(idx);
    chosen[idx] = true;
    for (std::size_t i = 0; i < n; ++i)
      mind[i] = std::min(mind[i], (y.row(static_cast<Eigen::Index>(i)) -
                                   y.row(static_cast<Eigen::Index>(idx))).squaredNorm());
  };
  pick(static_cast<std::size_t>(rng.below(n)));
  while (seeds.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (!chosen[i]) total += mind[i];
    std::size_t idx = n;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i] || mind[i] <= 0.0) continue;
        idx = i;
        r -= mind[i];
        if (r < 0.0) break;
      }
    } else {
      // Every remaining point coincides with a seed: pick uniformly.
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) rest.push_back(i);
      idx = rest[static_cast<std::size_t>(rng.below(rest.size()))];
    }
    pick(idx);
  }
  return seeds;
}

// Lloyd iterations in an already transformed frame. Empty weights means
// unweighted centroids.
inline ClusterAssignment lloyd(const Eigen::MatrixXd& y, std::span<const double> weights, int k,
                               std::uint64_t seed, int max_iters) {
  const Eigen::Index n = y.rows();
  if (k < 1) throw std::invalid_argument("K must be >= 1");
  if (k > n) throw std::invalid_argument("K (" + std::to_string(k) + ") exceeds the number of samples (" +
                                         std::to_string(n) + ")");
  if (!weights.empty() && static_cast<Eigen::Index>(weights.size()) != n)
    throw std::invalid_argument("powers and features differ in length");
  for (double w : weights)
    if (!(w >= 0.0)) throw std::invalid_argument("powers must be non-negative");

  Rng rng(seed);
  const auto seeds = kmeanspp_seeds(y, k, rng);
  Eigen::MatrixXd centers(k, y.cols());
  for (int c = 0; c < k; ++c) centers.row(c) = y.row(static_cast<Eigen::Index>(seeds[static_cast<std::size_t>(c)]));

  ClusterAssignment res;
  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  std::vector<double> dist(static_cast<std::size_t>(n), 0.0);
  for (int it = 0; it < std::max(1, max_iters); ++it) {
    bool changed = false;
    double sse = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (y.row(i) - centers.row(c)).squaredNorm();
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (assign[static_cast<std::size_t>(i)] != best) changed = true;
      assign[static_cast<std::size_t>(i)] = best;
      dist[static_cast<std::size_t>(i)] = bd;
      sse += bd;
    }
    res.objective_trace.push_back(sse);
    res.iterations = it + 1;
    if (!changed || it + 1 >= max_iters) break;

    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(k, y.cols());
    Eigen::MatrixXd plain = Eigen::MatrixXd::Zero(k, y.cols());
    std::vector<double> wsum(static_cast<std::size_t>(k), 0.0);
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(assign[static_cast<std::size_t>(i)]);
      const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(i)];
      sum.row(static_cast<Eigen::Index>(c)) += w * y.row(i);
      plain.row(static_cast<Eigen::Index>(c)) += y.row(i);
      wsum[c] += w;
      ++count[c];
    }
    for (int c = 0; c < k; ++c) {
      const auto cu = static_cast<std::size_t>(c);
      if (count[cu] == 0) {
        // Reseed at the point farthest from its own centroid.
        const auto far = static_cast<Eigen::Index>(
            std::max_element(dist.begin(), dist.end()) - dist.begin());
        centers.row(c) = y.row(far);
        dist[static_cast<std::size_t>(far)] = 0.0;
      } else if (wsum[cu] > 0.0) {
        centers.row(c) = sum.row(c) / wsum[cu];
      } else {
        centers.row(c) = plain.row(c) / count[cu];
        ++res.zero_power_fallbacks;
      }
    }
  }
  res.n_found = compact_labels(assign);
  res.assignment = std::move(assign);
  return res;
}

}  // namespace detail

/// KMeans in the A^{1/2}-transformed frame (rows of `features` are samples).
inline ClusterAssignment kmeans(const Eigen::MatrixXd& features, int k, const MetricMatrix& a,
                                std::uint64_t seed, int max_iters = 100) {
  if (features.cols() != a.dim()) throw std::invalid_argument("kmeans: feature/metric dimension mismatch");
  return detail::lloyd(transform_rows(features, sqrt_transform(a)), {}, k, seed, max_iters);
}

/// KMeans with power-weighted centroids.
inline ClusterAssignment kpowermeans(const Eigen::MatrixXd& features, std::span<const double> powers,
                                     int k, const MetricMatrix& a, std::uint64_t seed,
                                     int max_iters = 100) {
  if (features.cols() != a.dim())
    throw std::invalid_argument("kpowermeans: feature/metric dimension mismatch");
  if (static_cast<Eigen::Index>(powers.size()) != features.rows())
    throw std::invalid_argument("kpowermeans: powers and features differ in length");
  return detail::lloyd(transform_rows(features, sqrt_transform(a)), powers, k, seed, max_iters);
}

namespace detail {

inline Eigen::MatrixXd pairwise_dist(const Eigen::MatrixXd& x, const MetricMatrix& a) {
  if (x.cols() != a.dim()) throw std::invalid_argument("DBSCAN: feature/metric dimension mismatch");
  Eigen::MatrixXd d = pairwise_sq(x, a.entries());
  return d.cwiseSqrt();
}

inline double auto_eps_from(const Eigen::MatrixXd& dist, int min_pts) {
  const Eigen::Index n = dist.rows();
  if (n < 2) return 1.0;
  const auto rank = static_cast<std::size_t>(std::min<Eigen::Index>(min_pts, n - 1));
  std::vector<double> kth;
  kth.reserve(static_cast<std::size_t>(n));
  std::vector<double> row;
  for (Eigen::Index i = 0; i < n; ++i) {
    row.clear();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) row.push_back(dist(i, j));
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(rank - 1), row.end());
    kth.push_back(row[rank - 1]);
  }
  std::sort(kth.begin(), kth.end());
  const std::size_t m = kth.size();
  const double med = m % 2 ? kth[m / 2] : 0.5 * (kth[m / 2 - 1] + kth[m / 2]);
  // All-coincident data would otherwise give eps = 0.
  return med > 0.0 ? med : std::numeric_limits<double>::min();
}

inline ClusterAssignment dbscan_on(const Eigen::MatrixXd& dist, double eps, int min_pts) {
  const auto n = static_cast<std::size_t>(dist.rows());
  constexpr int kUnvisited = -2;
  std::vector<int> label(n, kUnvisited);
  auto neighbours = [&](std::size_t p) {
    std::vector<std::size_t> out;
    for (std::size_t q = 0; q < n; ++q)
      if (dist(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) <= eps) out.push_back(q);
    return out;
  };
  int cluster = 0;
  for (std::size_t p = 0; p < n; ++p) {
    if (label[p] != kUnvisited) continue;
    auto seeds = neighbours(p);
    if (static_cast<int>(seeds.size()) < min_pts) {
      label[p] = kNoise;
      continue;
    }
    label[p] = cluster;
    std::deque<std::size_t> queue(seeds.begin(), seeds.end());
    while (!queue.empty()) {
      const std::size_t q = queue.front();
      queue.pop_front();
      if (label[q] == kNoise) label[q] = cluster;  // border point
      if (label[q] != kUnvisited) continue;
      label[q] = cluster;
      auto nq = neighbours(q);
      if (static_cast<int>(nq.size()) >= min_pts) queue.insert(queue.end(), nq.begin(), nq.end());
    }
    ++cluster;
  }
  ClusterAssignment res;
  res.assignment = std::move(label);
  res.n_found = cluster;
  res.iterations = 1;
  return res;
}

}  // namespace detail

/// Median distance from each sample to its min_pts-th nearest other sample.
inline double auto_eps(const Eigen::MatrixXd& features, const MetricMatrix& a, int min_pts) {
  return detail::auto_eps_from(detail::pairwise_dist(features, a), min_pts);
}

/// Density-based clustering with the learned distance as neighbourhood
/// predicate (distance <= eps, the sample itself included); scan order is
/// input order.
inline ClusterAssignment dbscan(const Eigen::MatrixXd& features, const MetricMatrix& a,
                                const DbscanParams& params) {
  params.validate();
  const Eigen::MatrixXd dist = detail::pairwise_dist(features, a);
  const double eps = params.eps ? *params.eps : detail::auto_eps_from(dist, params.min_pts);
  return detail::dbscan_on(dist, eps, params.min_pts);
}

}  // namespace mpcml
