#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mpcml {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Which angle components enter the feature space.
enum class Scheme { WithAod, WithoutAod };

inline constexpr int feature_dim(Scheme s) { return s == Scheme::WithAod ? 7 : 4; }

inline std::string to_string(Scheme s) {
  return s == Scheme::WithAod ? "with_aod" : "without_aod";
}

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "with_aod") return Scheme::WithAod;
  if (s == "without_aod") return Scheme::WithoutAod;
  throw std::invalid_argument("unknown feature scheme '" + s + "'");
}

inline Scheme scheme_for_dim(Eigen::Index dim) {
  if (dim == 7) return Scheme::WithAod;
  if (dim == 4) return Scheme::WithoutAod;
  throw std::invalid_argument("feature dimension " + std::to_string(dim) +
                              " is neither 4 nor 7");
}

/// Wraps an azimuth into [0, 2*pi).
inline double wrap_azimuth(double phi) {
  double w = std::fmod(phi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  // fmod can return exactly 2*pi after the shift for tiny negative inputs.
  return w >= kTwoPi ? 0.0 : w;
}

/// Folds a zenith angle into [0, pi] by mirror reflection at the poles.
inline double reflect_zenith(double theta) {
  double t = std::fmod(std::abs(theta), kTwoPi);
  return t > std::numbers::pi ? kTwoPi - t : t;
}

/// One multipath component. Angles in radians, delay in seconds, power linear.
struct Mpc {
  double tau = 0.0;
  double power = 0.0;
  double aaod = 0.0;
  double zaod = 0.0;
  double aaoa = 0.0;
  double zaoa = 0.0;
  std::optional<int> label;

  /// Empty when valid, otherwise a description of the first violated invariant.
  std::string violation() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(tau) || !finite(power) || !finite(aaod) || !finite(zaod) ||
        !finite(aaoa) || !finite(zaoa))
      return "non-finite field";
    if (tau < 0.0) return "negative delay";
    if (power < 0.0) return "negative power";
    if (zaod < 0.0 || zaod > std::numbers::pi) return "zaod outside [0, pi]";
    if (zaoa < 0.0 || zaoa > std::numbers::pi) return "zaoa outside [0, pi]";
    if (aaod < 0.0 || aaod >= kTwoPi) return "aaod outside [0, 2pi)";
    if (aaoa < 0.0 || aaoa >= kTwoPi) return "aaoa outside [0, 2pi)";
    if (label && *label < 0) return "negative label";
    return {};
  }

  void validate() const {
    if (auto v = violation(); !v.empty()) throw std::invalid_argument("invalid MPC: " + v);
  }

  bool operator==(const Mpc&) const = default;
};

/// Spherical embedding of an MPC: delay followed by unit direction vectors.
struct FeatureVector {
  Eigen::VectorXd coords;
  Scheme scheme = Scheme::WithAod;

  FeatureVector() = default;
  FeatureVector(Eigen::VectorXd c, Scheme s) : coords(std::move(c)), scheme(s) {
    if (coords.size() != feature_dim(s))
      throw std::invalid_argument("feature vector size does not match scheme");
  }
  /// Scheme inferred from the length (4 or 7).
  explicit FeatureVector(Eigen::VectorXd c)
      : coords(std::move(c)), scheme(scheme_for_dim(coords.size())) {}

  Eigen::Index dim() const { return coords.size(); }
};

namespace detail {

inline Eigen::Vector3d direction(double zenith, double azimuth) {
  const double s = std::sin(zenith);
  return {s * std::cos(azimuth), s * std::sin(azimuth), std::cos(zenith)};
}

// Diagonal scaling D with D_ii = sqrt(A_ii) (1 where A_ii <= 0), so that
// D^-1 A D^-1 has a unit diagonal. Learned metrics mix seconds and unit
// vectors, so their entries span many orders of magnitude; spectral checks
// are done on the scaled matrix.
inline Eigen::VectorXd jacobi_scale(const Eigen::MatrixXd& a) {
  Eigen::VectorXd d(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) d(i) = a(i, i) > 0.0 ? std::sqrt(a(i, i)) : 1.0;
  return d;
}

inline Eigen::MatrixXd unscale(const Eigen::MatrixXd& a, const Eigen::VectorXd& d) {
  return d.cwiseInverse().asDiagonal() * a * d.cwiseInverse().asDiagonal();
}

inline bool is_symmetric(const Eigen::MatrixXd& a, double tol) {
  if (a.rows() != a.cols()) return false;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i + 1; j < a.cols(); ++j) {
      const double scale = std::max({1.0, std::abs(a(i, j)), std::abs(a(j, i))});
      if (std::abs(a(i, j) - a(j, i)) > tol * scale) return false;
    }
  return true;
}

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

}  // namespace detail

inline constexpr double kSymmetryTol = 1e-12;
inline constexpr double kPsdTol = 1e-9;

/// Symmetric positive-semidefinite matrix defining a Mahalanobis distance.
///
/// The PSD check is applied to the Jacobi-scaled matrix (unit diagonal), so
/// the tolerance is relative to each coordinate's own scale.
class MetricMatrix {
 public:
  MetricMatrix() = default;

  explicit MetricMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
    if (entries_.rows() == 0 || entries_.rows() != entries_.cols())
      throw std::invalid_argument("metric matrix must be square and non-empty");
    if (!entries_.allFinite()) throw std::invalid_argument("metric matrix has non-finite entries");
    if (!detail::is_symmetric(entries_, kSymmetryTol))
      throw std::invalid_argument("metric matrix is not symmetric");
    entries_ = detail::symmetrized(entries_);
    if (min_scaled_eigenvalue() < -kPsdTol)
      throw std::invalid_argument("metric matrix is not positive semidefinite");
  }

  static MetricMatrix identity(Eigen::Index dim) {
    return MetricMatrix(Eigen::MatrixXd::Identity(dim, dim));
  }
  static MetricMatrix zero(Eigen::Index dim) {
    return MetricMatrix(Eigen::MatrixXd::Zero(dim, dim));
  }
  static MetricMatrix diagonal(const Eigen::VectorXd& d) {
    return MetricMatrix(Eigen::MatrixXd(d.asDiagonal()));
  }

  const Eigen::MatrixXd& entries() const { return entries_; }
  Eigen::Index dim() const { return entries_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

  /// Smallest eigenvalue of D^-1 A D^-1 (see detail::jacobi_scale).
  double min_scaled_eigenvalue() const {
    const auto d = detail::jacobi_scale(entries_);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(detail::unscale(entries_, d),
                                                      Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  /// Squared distance (x - y)^T A (x - y) with leakage clamped to 0.
  double quadratic_form(const Eigen::VectorXd& delta) const {
    if (delta.size() != dim())
      throw std::invalid_argument("dimension mismatch between feature difference (" +
                                  std::to_string(delta.size()) + ") and metric (" +
                                  std::to_string(dim()) + ")");
    const double q = delta.dot(entries_ * delta);
    if (q >= 0.0) return q;
    const double scale = (delta.cwiseAbs().transpose() * entries_.cwiseAbs() * delta.cwiseAbs())(0);
    if (q >= -kPsdTol * std::max(1.0, scale)) return 0.0;
    throw std::domain_error("negative quadratic form: metric matrix is corrupt");
  }

  bool operator==(const MetricMatrix& o) const { return entries_ == o.entries_; }

 private:
  Eigen::MatrixXd entries_;
};

/// MCD delay factors; xi = zeta * gamma.
struct McdParams {
  double zeta = 1.0;   ///< delay weighting factor
  double gamma = 1.0;  ///< delay scaling factor, 1/s

  McdParams() = default;
  McdParams(double z, double g) : zeta(z), gamma(g) {
    if (!(zeta > 0.0) || !(gamma > 0.0))
      throw std::invalid_argument("MCD parameters must be positive");
  }
  static McdParams from_xi(double xi) { return {xi, 1.0}; }

  double xi() const { return zeta * gamma; }
};

/// gamma = tau_std / max_delay_difference^2 over a set of MPCs.
inline double default_gamma(std::span<const Mpc> mpcs) {
  if (mpcs.size() < 2) throw std::invalid_argument("default_gamma needs at least two MPCs");
  double mean = 0.0, lo = mpcs.front().tau, hi = lo;
  for (const auto& m : mpcs) {
    mean += m.tau;
    lo = std::min(lo, m.tau);
    hi = std::max(hi, m.tau);
  }
  mean /= static_cast<double>(mpcs.size());
  double var = 0.0;
  for (const auto& m : mpcs) var += (m.tau - mean) * (m.tau - mean);
  const double sd = std::sqrt(var / static_cast<double>(mpcs.size() - 1));
  const double span = hi - lo;
  if (!(span > 0.0)) throw std::invalid_argument("default_gamma: all delays are equal");
  return sd / (span * span);
}

inline FeatureVector embed(const Mpc& mpc, Scheme scheme) {
  Eigen::VectorXd x(feature_dim(scheme));
  x(0) = mpc.tau;
  const Eigen::Vector3d rx = detail::direction(mpc.zaoa, mpc.aaoa);
  if (scheme == Scheme::WithAod) {
    x.segment<3>(1) = detail::direction(mpc.zaod, mpc.aaod);
    x.segment<3>(4) = rx;
  } else {
    x.segment<3>(1) = rx;
  }
  return {std::move(x), scheme};
}

inline std::vector<FeatureVector> embed_all(std::span<const Mpc> mpcs, Scheme scheme) {
  std::vector<FeatureVector> out;
  out.reserve(mpcs.size());
  for (const auto& m : mpcs) out.push_back(embed(m, scheme));
  return out;
}

/// Rows are samples.
inline Eigen::MatrixXd stack(std::span<const FeatureVector> xs) {
  if (xs.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(xs.size()), xs.front().dim());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].dim() != m.cols()) throw std::invalid_argument("mixed feature dimensions");
    m.row(static_cast<Eigen::Index>(i)) = xs[i].coords.transpose();
  }
  return m;
}

/// Classical multipath component distance.
inline double mcd(const Mpc& a, const Mpc& b, const McdParams& params, Scheme scheme) {
  const double d_tau = params.xi() * std::abs(a.tau - b.tau);
  const double d_rx =
      0.5 * (detail::direction(a.zaoa, a.aaoa) - detail::direction(b.zaoa, b.aaoa)).norm();
  double sum = d_tau * d_tau + d_rx * d_rx;
  if (scheme == Scheme::WithAod) {
    const double d_tx =
        0.5 * (detail::direction(a.zaod, a.aaod) - detail::direction(b.zaod, b.aaod)).norm();
    sum += d_tx * d_tx;
  }
  return std::sqrt(sum);
}

inline double squared_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                               const MetricMatrix& a) {
  if (x.size() != y.size()) throw std::invalid_argument("feature dimensions differ");
  return a.quadratic_form(x - y);
}

inline double mahalanobis(const FeatureVector& x, const FeatureVector& y, const MetricMatrix& a) {
  return std::sqrt(squared_distance(x.coords, y.coords, a));
}

/// diag(xi^2, 1/4, ..., 1/4): the metric under which Mahalanobis equals MCD.
inline MetricMatrix mcd_matrix(double xi, Scheme scheme) {
  if (!(xi > 0.0)) throw std::invalid_argument("mcd_matrix: xi must be positive");
  Eigen::VectorXd d = Eigen::VectorXd::Constant(feature_dim(scheme), 0.25);
  d(0) = xi * xi;
  return MetricMatrix::diagonal(d);
}

/// Matrix with only the delay-delay entry set; clusters on delay alone.
inline MetricMatrix delay_only_matrix(double weight, Scheme scheme) {
  if (!(weight > 0.0)) throw std::invalid_argument("delay_only_matrix: weight must be positive");
  Eigen::VectorXd d = Eigen::VectorXd::Zero(feature_dim(scheme));
  d(0) = weight;
  return MetricMatrix::diagonal(d);
}

/// Frobenius-nearest PSD matrix: symmetrize, clamp negative eigenvalues.
inline MetricMatrix psd_project(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("psd_project: matrix must be square");
  const Eigen::MatrixXd sym = detail::symmetrized(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const Eigen::VectorXd lambda = es.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd p = es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
  return MetricMatrix(detail::symmetrized(p));
}

/// Symmetric PSD square root S with S * S = A.
///
/// Computed from the Jacobi-scaled eigendecomposition A = D V L V^T D,
/// which gives a factor F = L^{1/2} V^T D with F^T F = A; the symmetric
/// root is W S W^T from the SVD F = U S W^T. This keeps the small
/// (angle) block accurate when the delay entry is many orders larger.
inline Eigen::MatrixXd sqrt_transform(const MetricMatrix& a) {
  const Eigen::MatrixXd& m = a.entries();
  const Eigen::VectorXd d = detail::jacobi_scale(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(detail::unscale(m, d));
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd factor = root.asDiagonal() * es.eigenvectors().transpose() * d.asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(factor, Eigen::ComputeFullV);
  const Eigen::MatrixXd& w = svd.matrixV();
  return detail::symmetrized(w * svd.singularValues().asDiagonal() * w.transpose());
}

/// Same as above for an arbitrary matrix; rejects asymmetric input.
inline Eigen::MatrixXd sqrt_transform(const Eigen::MatrixXd& m) {
  if (!detail::is_symmetric(m, 1e-9)) throw std::invalid_argument("sqrt_transform: matrix is not symmetric");
  return sqrt_transform(MetricMatrix(detail::symmetrized(m)));
}

/// Applies x -> S x to every row of a sample matrix.
inline Eigen::MatrixXd transform_rows(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& s) {
  return samples * s.transpose();
}

}  // namespace mpcml
