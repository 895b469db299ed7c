#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "core_metric.hpp"

namespace mpcml {

using IndexPair = std::pair<std::size_t, std::size_t>;

/// Features with ground-truth cluster ids.
struct LabeledSet {
  std::vector<FeatureVector> features;
  std::vector<int> labels;

  std::size_t size() const { return features.size(); }

  void validate() const {
    if (features.size() != labels.size())
      throw std::invalid_argument("labeled set: features and labels differ in length");
    if (features.empty()) throw std::invalid_argument("labeled set is empty");
    const auto d = features.front().dim();
    for (const auto& f : features)
      if (f.dim() != d) throw std::invalid_argument("labeled set: mixed feature dimensions");
  }

  /// Labels that occur exactly once; such samples have no target neighbor.
  std::vector<int> singleton_classes() const {
    std::map<int, int> count;
    for (int y : labels) ++count[y];
    std::vector<int> out;
    for (auto [y, c] : count)
      if (c == 1) out.push_back(y);
    return out;
  }
};

/// Same-cluster (S) and different-cluster (D) pairs, each stored with i < j.
struct PairSets {
  std::vector<FeatureVector> features;
  std::vector<IndexPair> same;
  std::vector<IndexPair> different;

  static PairSets from_labels(const LabeledSet& ls) {
    ls.validate();
    PairSets p;
    p.features = ls.features;
    for (std::size_t i = 0; i < ls.size(); ++i)
      for (std::size_t j = i + 1; j < ls.size(); ++j)
        (ls.labels[i] == ls.labels[j] ? p.same : p.different).emplace_back(i, j);
    return p;
  }

  void validate() const {
    const std::size_t n = features.size();
    std::set<IndexPair> s;
    for (const auto& [i, j] : same) {
      if (!(i < j) || j >= n) throw std::invalid_argument("pair sets: bad same-cluster pair");
      s.emplace(i, j);
    }
    for (const auto& pr : different) {
      if (!(pr.first < pr.second) || pr.second >= n)
        throw std::invalid_argument("pair sets: bad different-cluster pair");
      if (s.count(pr)) throw std::invalid_argument("pair sets: S and D overlap");
    }
  }
};

namespace detail {

// Per-coordinate scale used to precondition the learners. Distances are
// invariant under x -> x / s with A -> S A S, so learning in the scaled
// frame and mapping back solves the same problem.
inline Eigen::VectorXd feature_scale(const Eigen::MatrixXd& x) {
  Eigen::VectorXd s(x.cols());
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    const auto col = x.col(k).array();
    const double mean = col.mean();
    const double var = (col - mean).square().sum() / std::max<Eigen::Index>(1, x.rows() - 1);
    s(k) = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

inline Eigen::MatrixXd to_scaled_metric(const Eigen::MatrixXd& a, const Eigen::VectorXd& s) {
  return s.asDiagonal() * a * s.asDiagonal();
}

inline Eigen::MatrixXd from_scaled_metric(const Eigen::MatrixXd& a, const Eigen::VectorXd& s) {
  const Eigen::VectorXd inv = s.cwiseInverse();
  return detail::symmetrized(inv.asDiagonal() * a * inv.asDiagonal());
}

inline Eigen::MatrixXd pairwise_sq(const Eigen::MatrixXd& x, const Eigen::MatrixXd& a) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  // (x_i - x_j)^T A (x_i - x_j) = (x_i - x_j) . (y_i - y_j) with y = A x.
  const Eigen::MatrixXd xt = x.transpose();
  const Eigen::MatrixXd yt = a * xt;
  Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double q = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) q += (xt(k, i) - xt(k, j)) * (yt(k, i) - yt(k, j));
      d2(i, j) = d2(j, i) = std::max(0.0, q);
    }
  return d2;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Diagonal metric from pair constraints.

struct MmcResult {
  MetricMatrix metric;
  std::vector<double> loss_history;  ///< loss after each accepted step (index 0 = start)
  int iterations = 0;
  bool converged = false;
};

namespace detail {

struct MmcProblem {
  Eigen::VectorXd same_sum;  // sum over S of squared coordinate differences
  Eigen::MatrixXd diff_sq;   // one row per D pair

  double loss(const Eigen::VectorXd& a) const {
    const Eigen::VectorXd q = diff_sq * a;
    double dsum = 0.0;
    for (Eigen::Index p = 0; p < q.size(); ++p) dsum += std::sqrt(std::max(0.0, q(p)));
    if (!(dsum > 0.0)) return std::numeric_limits<double>::infinity();
    return same_sum.dot(a) - std::log(dsum);
  }

  void derivatives(const Eigen::VectorXd& a, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const {
    const Eigen::Index d = a.size();
    const Eigen::VectorXd q = diff_sq * a;
    double dsum = 0.0;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd curv = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index p = 0; p < q.size(); ++p) {
      if (!(q(p) > 0.0)) continue;  // coincident pair: no derivative contribution
      const double dist = std::sqrt(q(p));
      dsum += dist;
      const Eigen::VectorXd row = diff_sq.row(p).transpose();
      u += row / (2.0 * dist);
      curv += row * row.transpose() / (4.0 * dist * dist * dist);
    }
    grad = same_sum - u / dsum;
    hess = u * u.transpose() / (dsum * dsum) + curv / dsum;
  }
};

}  // namespace detail

/// Learns a diagonal metric minimizing
///   sum_S |x_i - x_j|_A^2 - log(sum_D |x_i - x_j|_A)
/// over non-negative diagonals with a projected damped Newton method.
inline MmcResult mmc_fit(const PairSets& p, double tol = 1e-10, int max_iters = 200) {
  p.validate();
  if (p.same.empty()) throw std::invalid_argument("MMC: no same-cluster pairs");
  if (p.different.empty()) throw std::invalid_argument("MMC: no different-cluster pairs");

  const Eigen::MatrixXd x = stack(p.features);
  const Eigen::Index d = x.cols();
  const Eigen::VectorXd scale = detail::feature_scale(x);
  const Eigen::MatrixXd xs = x * scale.cwiseInverse().asDiagonal();

  detail::MmcProblem prob;
  prob.same_sum = Eigen::VectorXd::Zero(d);
  for (const auto& [i, j] : p.same)
    prob.same_sum += (xs.row(static_cast<Eigen::Index>(i)) - xs.row(static_cast<Eigen::Index>(j)))
                         .array()
                         .square()
                         .matrix()
                         .transpose();
  prob.diff_sq.resize(static_cast<Eigen::Index>(p.different.size()), d);
  for (std::size_t k = 0; k < p.different.size(); ++k) {
    const auto [i, j] = p.different[k];
    prob.diff_sq.row(static_cast<Eigen::Index>(k)) =
        (xs.row(static_cast<Eigen::Index>(i)) - xs.row(static_cast<Eigen::Index>(j))).array().square();
  }
  if (!(prob.diff_sq.sum() > 0.0))
    throw std::invalid_argument("MMC: all different-cluster pairs coincide");

  // Start on the best multiple of the all-ones diagonal.
  Eigen::VectorXd a = Eigen::VectorXd::Ones(d);
  const double s1 = prob.same_sum.sum();
  if (s1 > 0.0) a *= 1.0 / (2.0 * s1);

  MmcResult res;
  double f = prob.loss(a);
  res.loss_history.push_back(f);
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  for (int it = 0; it < max_iters; ++it) {
    res.iterations = it + 1;
    prob.derivatives(a, g, h);

    // Bound-constrained coordinates (at zero with the gradient pushing
    // outward) are held fixed for this step.
    std::vector<Eigen::Index> free;
    for (Eigen::Index k = 0; k < d; ++k)
      if (a(k) > 0.0 || g(k) < 0.0) free.push_back(k);
    if (free.empty()) {
      res.converged = true;
      break;
    }
    const auto nf = static_cast<Eigen::Index>(free.size());
    Eigen::VectorXd gf(nf);
    Eigen::MatrixXd hf(nf, nf);
    for (Eigen::Index r = 0; r < nf; ++r) {
      gf(r) = g(free[r]);
      for (Eigen::Index c = 0; c < nf; ++c) hf(r, c) = h(free[r], free[c]);
    }
    Eigen::VectorXd step;
    Eigen::LLT<Eigen::MatrixXd> llt(hf);
    if (llt.info() == Eigen::Success) step = -llt.solve(gf);
    if (step.size() == 0 || !step.allFinite() || step.dot(gf) >= 0.0) step = -gf;

    Eigen::VectorXd dir = Eigen::VectorXd::Zero(d);
    for (Eigen::Index r = 0; r < nf; ++r) dir(free[r]) = step(r);

    bool accepted = false;
    double t = 1.0;
    Eigen::VectorXd trial;
    double ft = f;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      trial = (a + t * dir).cwiseMax(0.0);
      ft = prob.loss(trial);
      if (std::isfinite(ft) && ft <= f + 1e-4 * g.dot(trial - a) && ft <= f) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.converged = true;
      break;
    }
    const double change = std::abs(f - ft) / std::max(1.0, std::abs(f));
    a = trial;
    f = ft;
    res.loss_history.push_back(f);
    if (change < tol) {
      res.converged = true;
      break;
    }
  }

  Eigen::VectorXd raw(d);
  for (Eigen::Index k = 0; k < d; ++k) raw(k) = a(k) / (scale(k) * scale(k));
  res.metric = MetricMatrix::diagonal(raw);
  return res;
}

inline MetricMatrix mmc_learn_diagonal(const PairSets& p, double tol = 1e-10, int max_iters = 200) {
  return mmc_fit(p, tol, max_iters).metric;
}

// ---------------------------------------------------------------------------
// Full metric by large-margin nearest neighbours.

/// (i, j): j is a target neighbour of i.
using TargetPairs = std::vector<IndexPair>;

struct Triplet {
  std::size_t i = 0, j = 0, l = 0;
  bool operator==(const Triplet&) const = default;
  auto operator<=>(const Triplet&) const = default;
};

/// For each sample, its k nearest same-label samples under seed_metric
/// (ties to the lower index). k is clamped per class to class size - 1.
inline TargetPairs find_target_neighbors(const LabeledSet& ls, int k,
                                         const MetricMatrix& seed_metric) {
  ls.validate();
  if (k < 1) throw std::invalid_argument("target neighbour count must be >= 1");
  const Eigen::MatrixXd d2 = detail::pairwise_sq(stack(ls.features), seed_metric.entries());
  TargetPairs out;
  for (std::size_t i = 0; i < ls.size(); ++i) {
    std::vector<std::size_t> same;
    for (std::size_t j = 0; j < ls.size(); ++j)
      if (j != i && ls.labels[j] == ls.labels[i]) same.push_back(j);
    std::stable_sort(same.begin(), same.end(), [&](std::size_t a, std::size_t b) {
      const double da = d2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
      const double db = d2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b));
      return da < db || (da == db && a < b);
    });
    const std::size_t take = std::min(same.size(), static_cast<std::size_t>(k));
    for (std::size_t t = 0; t < take; ++t) out.emplace_back(i, same[t]);
  }
  return out;
}

namespace detail {

inline std::vector<Triplet> impostors_from_distances(const std::vector<int>& labels,
                                                     const TargetPairs& targets,
                                                     const Eigen::MatrixXd& d2) {
  std::vector<Triplet> out;
  for (const auto& [i, j] : targets) {
    const double margin =
        d2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) + 1.0;
    for (std::size_t l = 0; l < labels.size(); ++l)
      if (labels[l] != labels[i] &&
          d2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) <= margin)
        out.push_back({i, j, l});
  }
  return out;
}

inline double hinge(const Eigen::MatrixXd& d2, const Triplet& t) {
  const auto i = static_cast<Eigen::Index>(t.i);
  return std::max(0.0, 1.0 + d2(i, static_cast<Eigen::Index>(t.j)) -
                           d2(i, static_cast<Eigen::Index>(t.l)));
}

inline double pull_sum(const TargetPairs& targets, const Eigen::MatrixXd& d2) {
  double s = 0.0;
  for (const auto& [i, j] : targets) s += d2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return s;
}

inline double push_sum_all(const std::vector<int>& labels, const TargetPairs& targets,
                           const Eigen::MatrixXd& d2) {
  double s = 0.0;
  for (const auto& [i, j] : targets) {
    const double base = 1.0 + d2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    for (std::size_t l = 0; l < labels.size(); ++l)
      if (labels[l] != labels[i])
        s += std::max(0.0, base - d2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)));
  }
  return s;
}

// sum_{p,q} c(p,q) (x_p - x_q)(x_p - x_q)^T without forming the outer products.
inline Eigen::MatrixXd weighted_scatter(const Eigen::MatrixXd& x, const Eigen::MatrixXd& c) {
  Eigen::MatrixXd lap = -(c + c.transpose());
  lap.diagonal() += c.rowwise().sum() + c.colwise().sum().transpose();
  return x.transpose() * lap * x;
}

inline void add_push(Eigen::MatrixXd& c, const Triplet& t, double w) {
  const auto i = static_cast<Eigen::Index>(t.i);
  c(i, static_cast<Eigen::Index>(t.j)) += w;
  c(i, static_cast<Eigen::Index>(t.l)) -= w;
}

// Gradient over the triplets in `cands` whose hinge is strictly active.
inline Eigen::MatrixXd lmnn_gradient(const Eigen::MatrixXd& x, const TargetPairs& targets,
                                     const std::vector<Triplet>& cands, const Eigen::MatrixXd& d2,
                                     double mu) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(x.rows(), x.rows());
  for (const auto& [i, j] : targets) c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += 1.0 - mu;
  for (const auto& t : cands)
    if (hinge(d2, t) > 0.0) add_push(c, t, mu);
  return weighted_scatter(x, c);
}

// Huber-smoothed hinge of width delta (the plain hinge at delta = 0) and its
// derivative with respect to the hinge argument.
inline double smooth_hinge(double z, double delta) {
  if (z <= 0.0) return 0.0;
  if (z >= delta) return z - 0.5 * delta;
  return 0.5 * z * z / delta;
}

inline double smooth_hinge_slope(double z, double delta) {
  if (z <= 0.0) return 0.0;
  if (z >= delta) return 1.0;
  return z / delta;
}

inline double hinge_arg(const Eigen::MatrixXd& d2, const Triplet& t) {
  const auto i = static_cast<Eigen::Index>(t.i);
  return 1.0 + d2(i, static_cast<Eigen::Index>(t.j)) - d2(i, static_cast<Eigen::Index>(t.l));
}

inline Eigen::MatrixXd smoothed_gradient(const Eigen::MatrixXd& x, const TargetPairs& targets,
                                         const std::vector<Triplet>& cands,
                                         const Eigen::MatrixXd& d2, double mu, double delta) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(x.rows(), x.rows());
  for (const auto& [i, j] : targets) c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += 1.0 - mu;
  for (const auto& t : cands) {
    const double w = smooth_hinge_slope(hinge_arg(d2, t), delta);
    if (w > 0.0) add_push(c, t, mu * w);
  }
  return weighted_scatter(x, c);
}

}  // namespace detail

/// Triplets (i, j, l) with j a target of i, y_l != y_i and
/// |x_l - x_i|_A^2 <= |x_j - x_i|_A^2 + 1.
inline std::vector<Triplet> find_impostors(const LabeledSet& ls, const TargetPairs& targets,
                                           const MetricMatrix& a) {
  ls.validate();
  return detail::impostors_from_distances(ls.labels, targets,
                                          detail::pairwise_sq(stack(ls.features), a.entries()));
}

/// (1 - mu) * pull + mu * push, with push summed over every differently
/// labeled sample.
inline double lmnn_loss(const LabeledSet& ls, const TargetPairs& targets, const MetricMatrix& a,
                        double mu) {
  ls.validate();
  const Eigen::MatrixXd d2 = detail::pairwise_sq(stack(ls.features), a.entries());
  return (1.0 - mu) * detail::pull_sum(targets, d2) +
         mu * detail::push_sum_all(ls.labels, targets, d2);
}

/// Subgradient of lmnn_loss with respect to A (hinge ties count as inactive).
inline Eigen::MatrixXd lmnn_gradient(const LabeledSet& ls, const TargetPairs& targets,
                                     const MetricMatrix& a, double mu) {
  ls.validate();
  const Eigen::MatrixXd x = stack(ls.features);
  const Eigen::MatrixXd d2 = detail::pairwise_sq(x, a.entries());
  const auto cands = detail::impostors_from_distances(ls.labels, targets, d2);
  return detail::lmnn_gradient(x, targets, cands, d2, mu);
}

struct LmnnConfig {
  int k = 3;
  double mu = 0.5;
  int max_iters = 500;
  /// Initial step size; <= 0 selects 0.01 * |A0|_F / |G0|_F in the scaled frame.
  double step_init = 0.0;
  double step_grow = 1.01;
  double step_shrink = 0.5;
  int refresh_period = 10;
  double tol = 1e-7;
  /// Hinge smoothing width at the start and at the end of the continuation
  /// (margin units). 0 for both runs plain subgradient steps.
  double smoothing_init = 1.0;
  double smoothing_final = 1e-6;
  std::optional<MetricMatrix> init;  ///< defaults to mcd_matrix(1)

  void validate() const {
    if (k < 1) throw std::invalid_argument("LMNN: k must be >= 1");
    if (!(mu >= 0.0 && mu <= 1.0)) throw std::invalid_argument("LMNN: mu must be in [0, 1]");
    if (max_iters < 0) throw std::invalid_argument("LMNN: max_iters must be >= 0");
    if (refresh_period < 1) throw std::invalid_argument("LMNN: refresh_period must be >= 1");
    if (!(step_grow >= 1.0) || !(step_shrink > 0.0 && step_shrink < 1.0))
      throw std::invalid_argument("LMNN: invalid step schedule");
    if (!(smoothing_final >= 0.0) || !(smoothing_init >= smoothing_final))
      throw std::invalid_argument("LMNN: smoothing widths must satisfy init >= final >= 0");
  }
};

struct LmnnResult {
  MetricMatrix metric;
  TargetPairs targets;
  double initial_loss = 0.0;
  double final_loss = 0.0;              ///< exact loss of the returned metric
  std::vector<double> best_loss_trace;  ///< best exact loss at each checkpoint
  double min_accepted_eigenvalue = 0.0; ///< smallest eigenvalue over accepted iterates (scaled frame)
  int iterations = 0;
  int accepted_steps = 0;
};

/// Projected subgradient descent on the LMNN objective. The impostor set
/// is recomputed every refresh_period iterations; exact loss is evaluated
/// at each refresh and the best exact iterate is returned.
inline LmnnResult lmnn_fit(const LabeledSet& ls, const LmnnConfig& cfg = {}) {
  ls.validate();
  cfg.validate();
  const Eigen::MatrixXd x = stack(ls.features);
  const Eigen::Index d = x.cols();
  const MetricMatrix init = cfg.init ? *cfg.init : mcd_matrix(1.0, scheme_for_dim(d));
  if (init.dim() != d) throw std::invalid_argument("LMNN: init metric dimension mismatch");

  LmnnResult res;
  res.targets = find_target_neighbors(ls, cfg.k, init);
  if (res.targets.empty()) throw std::invalid_argument("LMNN: no target pairs (every class is a singleton)");

  const Eigen::VectorXd scale = detail::feature_scale(x);
  const Eigen::MatrixXd xs = x * scale.cwiseInverse().asDiagonal();
  const auto& labels = ls.labels;
  const double mu = cfg.mu;

  auto exact = [&](const Eigen::MatrixXd& d2) {
    return (1.0 - mu) * detail::pull_sum(res.targets, d2) +
           mu * detail::push_sum_all(labels, res.targets, d2);
  };
  double delta = cfg.smoothing_init;
  auto surrogate = [&](const Eigen::MatrixXd& d2, const std::vector<Triplet>& cands) {
    double push = 0.0;
    for (const auto& t : cands) push += detail::smooth_hinge(detail::hinge_arg(d2, t), delta);
    return (1.0 - mu) * detail::pull_sum(res.targets, d2) + mu * push;
  };
  auto min_eig = [](const Eigen::MatrixXd& m) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly)
        .eigenvalues()
        .minCoeff();
  };

  Eigen::MatrixXd a = detail::to_scaled_metric(init.entries(), scale);
  Eigen::MatrixXd d2 = detail::pairwise_sq(xs, a);
  res.initial_loss = exact(d2);
  Eigen::MatrixXd best = a;
  double best_loss = res.initial_loss;
  res.min_accepted_eigenvalue = min_eig(a);

  std::vector<Triplet> cands;
  double f = 0.0;
  double step = cfg.step_init;
  bool settled = false;  // converged since the last refresh
  for (int it = 0; it < cfg.max_iters; ++it) {
    res.iterations = it + 1;
    if (it % cfg.refresh_period == 0 || settled) {
      auto fresh = detail::impostors_from_distances(labels, res.targets, d2);
      const bool unchanged = fresh == cands;
      cands = std::move(fresh);
      const double e = exact(d2);
      if (e < best_loss) {
        best_loss = e;
        best = a;
      }
      res.best_loss_trace.push_back(best_loss);
      if (settled && unchanged) {
        // Converged at this width: sharpen the hinge, or stop at the last one.
        if (delta <= cfg.smoothing_final) break;
        delta = std::max(cfg.smoothing_final, 0.1 * delta);
      }
      f = surrogate(d2, cands);
      settled = false;
    }
    const Eigen::MatrixXd g = detail::smoothed_gradient(xs, res.targets, cands, d2, mu, delta);
    const double gn = g.norm();
    if (step <= 0.0) step = gn > 0.0 ? 0.01 * std::max(a.norm(), 1.0) / gn : 1.0;
    if (gn == 0.0) {
      settled = true;
      continue;
    }
    const Eigen::MatrixXd trial = psd_project(a - step * g).entries();
    const Eigen::MatrixXd d2t = detail::pairwise_sq(xs, trial);
    const double ft = surrogate(d2t, cands);
    if (ft <= f) {
      const double change = (f - ft) / std::max(std::abs(f), 1e-300);
      a = trial;
      d2 = d2t;
      f = ft;
      step *= cfg.step_grow;
      ++res.accepted_steps;
      res.min_accepted_eigenvalue = std::min(res.min_accepted_eigenvalue, min_eig(a));
      if (change < cfg.tol) settled = true;
    } else {
      step *= cfg.step_shrink;
      if (step < 1e-300) settled = true;
    }
  }
  const double e = exact(d2);
  if (e < best_loss) {
    best_loss = e;
    best = a;
  }
  res.best_loss_trace.push_back(best_loss);
  res.final_loss = best_loss;
  res.metric = MetricMatrix(detail::from_scaled_metric(best, scale));
  return res;
}

inline MetricMatrix lmnn_learn(const LabeledSet& ls, const LmnnConfig& cfg = {}) {
  return lmnn_fit(ls, cfg).metric;
}

}  // namespace mpcml
