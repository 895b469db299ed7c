#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include <mpcml/core_metric.hpp>
#include <mpcml/rng.hpp>

#include "oracles.hpp"

using namespace mpcml;

namespace {

Mpc random_mpc(Rng& r) {
  Mpc m;
  m.tau = r.uniform(0.0, 2.0);
  m.power = r.uniform();
  m.aaod = r.uniform(0.0, kTwoPi);
  m.aaoa = r.uniform(0.0, kTwoPi);
  m.zaod = r.uniform(0.0, std::numbers::pi);
  m.zaoa = r.uniform(0.0, std::numbers::pi);
  return m;
}

Eigen::MatrixXd random_psd(Rng& r, int d, int rank) {
  Eigen::MatrixXd b(rank, d);
  for (int i = 0; i < rank; ++i)
    for (int j = 0; j < d; ++j) b(i, j) = r.normal();
  return b.transpose() * b;
}

oracle::Mat to_mat(const Eigen::MatrixXd& m) {
  oracle::Mat out(m.rows(), oracle::Vec(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

}  // namespace

TEST(Embed, ZeroAnglesWithAod) {
  Mpc m;
  const auto f = embed(m, Scheme::WithAod);
  Eigen::VectorXd want(7);
  want << 0, 0, 0, 1, 0, 0, 1;
  EXPECT_EQ(f.coords, want);
}

TEST(Embed, HorizonWithoutAod) {
  Mpc m;
  m.tau = 1e-9;
  m.zaoa = std::numbers::pi / 2;
  const auto f = embed(m, Scheme::WithoutAod);
  EXPECT_DOUBLE_EQ(f.coords(0), 1e-9);
  EXPECT_NEAR(f.coords(1), 1.0, 1e-15);
  EXPECT_NEAR(f.coords(2), 0.0, 1e-15);
  EXPECT_NEAR(f.coords(3), 0.0, 1e-15);
}

TEST(Embed, AzimuthWrapIsShortChord) {
  Mpc a, b;
  a.zaoa = b.zaoa = std::numbers::pi / 2;
  a.aaoa = 1.0 * std::numbers::pi / 180.0;
  b.aaoa = 359.0 * std::numbers::pi / 180.0;
  const double d = (embed(a, Scheme::WithoutAod).coords - embed(b, Scheme::WithoutAod).coords).norm();
  EXPECT_NEAR(d, 2.0 * std::sin(std::numbers::pi / 180.0), 1e-12);
  EXPECT_NEAR(d, 0.034905, 1e-6);
}

TEST(Embed, UnitSphereIncludingPoles) {
  Rng r(3);
  for (int t = 0; t < 500; ++t) {
    Mpc m = random_mpc(r);
    if (t % 3 == 0) m.zaoa = 0.0;
    if (t % 3 == 1) m.zaod = std::numbers::pi;
    const auto f = embed(m, Scheme::WithAod);
    EXPECT_NEAR(f.coords.segment<3>(1).norm(), 1.0, 1e-12);
    EXPECT_NEAR(f.coords.segment<3>(4).norm(), 1.0, 1e-12);
  }
}

TEST(Mcd, HandValues) {
  Mpc a, b;
  EXPECT_EQ(mcd(a, b, McdParams(), Scheme::WithAod), 0.0);
  b.tau = 0.5;
  EXPECT_DOUBLE_EQ(mcd(a, b, McdParams(), Scheme::WithAod), 0.5);
  Mpc c, e;
  c.zaoa = e.zaoa = std::numbers::pi / 2;
  e.aaoa = std::numbers::pi;
  EXPECT_NEAR(mcd(c, e, McdParams(), Scheme::WithAod), 1.0, 1e-12);
}

TEST(McdMatrix, Entries) {
  const auto a = mcd_matrix(1.0, Scheme::WithAod);
  Eigen::VectorXd want(7);
  want << 1, .25, .25, .25, .25, .25, .25;
  EXPECT_EQ(Eigen::VectorXd(a.entries().diagonal()), want);
  EXPECT_EQ(a.entries().sum(), want.sum());
  EXPECT_EQ(mcd_matrix(2.0, Scheme::WithAod)(0, 0), 4.0);
  EXPECT_EQ(mcd_matrix(1.0, Scheme::WithoutAod).dim(), 4);
  EXPECT_THROW(mcd_matrix(0.0, Scheme::WithAod), std::invalid_argument);
}

// MCD equals the Mahalanobis distance under mcd_matrix(xi).
TEST(Mcd, EqualsMahalanobisOverRandomPairs) {
  Rng r(11);
  for (int t = 0; t < 1000; ++t) {
    const Mpc a = random_mpc(r), b = random_mpc(r);
    const double xi = r.uniform_open0() * 10.0;
    for (Scheme s : {Scheme::WithAod, Scheme::WithoutAod}) {
      const double lib = mcd(a, b, McdParams::from_xi(xi), s);
      const double mah = mahalanobis(embed(a, s), embed(b, s), mcd_matrix(xi, s));
      EXPECT_LE(std::abs(lib - mah), 1e-9 * (1.0 + mah));
    }
    const double ref = oracle::mcd(a.tau, a.zaoa, a.aaoa, b.tau, b.zaoa, b.aaoa, xi);
    EXPECT_LE(std::abs(ref - mcd(a, b, McdParams::from_xi(xi), Scheme::WithoutAod)), 1e-9 * (1.0 + ref));
  }
}

TEST(Mahalanobis, IdentityZeroAndMismatch) {
  Eigen::VectorXd x(4), y(4);
  x << 1, 2, 3, 4;
  y << 0, -1, 3, 2;
  EXPECT_NEAR(mahalanobis(FeatureVector(x), FeatureVector(y), MetricMatrix::identity(4)), (x - y).norm(), 1e-15);
  EXPECT_EQ(mahalanobis(FeatureVector(x), FeatureVector(y), MetricMatrix::zero(4)), 0.0);
  EXPECT_THROW(squared_distance(x, y, MetricMatrix::identity(7)), std::invalid_argument);
}

TEST(MetricMatrix, RejectsBadInput) {
  Eigen::MatrixXd m(2, 2);
  m << 1, 0.5, 0.4, 1;
  EXPECT_THROW(MetricMatrix{m}, std::invalid_argument);
  m << 1, 0, 0, -1;
  EXPECT_THROW(MetricMatrix{m}, std::invalid_argument);
  EXPECT_THROW(MetricMatrix{Eigen::MatrixXd(2, 3)}, std::invalid_argument);
}

TEST(MetricMatrix, GradedScalesStayPsd) {
  // Delay entry ~1e18, angle block O(1): unscaled eigenvalue checks would
  // drown the angle block in rounding noise.
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
  m(0, 0) = 1e18;
  m(0, 1) = m(1, 0) = 1e8;
  m.bottomRightCorner<3, 3>() = Eigen::Matrix3d::Identity() * 0.25;
  const MetricMatrix a(m);
  EXPECT_GE(a.min_scaled_eigenvalue(), -kPsdTol);
  const auto s = sqrt_transform(a);
  const Eigen::Matrix3d angle_err = (s * s - m).bottomRightCorner<3, 3>();
  EXPECT_LE(angle_err.cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_NEAR((s * s)(0, 0) / 1e18, 1.0, 1e-12);
}

TEST(Axioms, SymmetryIdentityTriangle) {
  Rng r(5);
  for (int t = 0; t < 300; ++t) {
    const MetricMatrix a(random_psd(r, 7, 1 + t % 7));
    auto draw = [&] {
      Eigen::VectorXd v(7);
      for (int k = 0; k < 7; ++k) v(k) = r.normal();
      return FeatureVector(v);
    };
    const auto x = draw(), y = draw(), z = draw();
    EXPECT_EQ(mahalanobis(x, y, a), mahalanobis(y, x, a));
    EXPECT_EQ(mahalanobis(x, x, a), 0.0);
    EXPECT_LE(mahalanobis(x, z, a), mahalanobis(x, y, a) + mahalanobis(y, z, a) + 1e-9);
  }
}

TEST(SqrtTransform, Examples) {
  EXPECT_TRUE(sqrt_transform(MetricMatrix::identity(4)).isApprox(Eigen::MatrixXd::Identity(4, 4), 1e-14));
  Eigen::Vector4d d(4, 1, 1, 1);
  const Eigen::MatrixXd s = sqrt_transform(MetricMatrix::diagonal(d));
  EXPECT_NEAR(s(0, 0), 2.0, 1e-14);
  EXPECT_NEAR((s - Eigen::MatrixXd(Eigen::Vector4d(2, 1, 1, 1).asDiagonal())).norm(), 0.0, 1e-14);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(3, 3);
  bad(0, 1) = 1;
  EXPECT_THROW(sqrt_transform(bad), std::invalid_argument);
}

TEST(SqrtTransform, SquaresBack) {
  Rng r(8);
  for (int t = 0; t < 200; ++t) {
    const Eigen::MatrixXd a = random_psd(r, 7, 1 + t % 7);
    const Eigen::MatrixXd s = sqrt_transform(MetricMatrix(a));
    EXPECT_LE((s * s - a).cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, a.cwiseAbs().maxCoeff()));
    EXPECT_LE((s - s.transpose()).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, s.cwiseAbs().maxCoeff()));
  }
}

// Euclidean distance after x -> A^{1/2} x equals the Mahalanobis distance.
TEST(SqrtTransform, TransformedEuclideanEqualsMahalanobis) {
  Rng r(21);
  for (int t = 0; t < 1000; ++t) {
    const int d = t % 2 ? 7 : 4;
    const MetricMatrix a(random_psd(r, d, 1 + t % d));
    Eigen::VectorXd x(d), y(d);
    for (int k = 0; k < d; ++k) {
      x(k) = r.normal();
      y(k) = r.normal();
    }
    const Eigen::MatrixXd s = sqrt_transform(a);
    const double lhs = (s * x - s * y).norm();
    const double rhs = mahalanobis(FeatureVector(x), FeatureVector(y), a);
    EXPECT_LE(std::abs(lhs - rhs), 1e-8 * std::max(rhs, 1e-12));
  }
}

TEST(PsdProject, Examples) {
  Rng r(2);
  const Eigen::MatrixXd a = random_psd(r, 5, 5);
  EXPECT_LE((psd_project(a).entries() - a).cwiseAbs().maxCoeff(), 1e-10 * a.cwiseAbs().maxCoeff());
  Eigen::MatrixXd m = Eigen::Vector2d(1, -2).asDiagonal();
  EXPECT_TRUE(psd_project(m).entries().isApprox(Eigen::MatrixXd(Eigen::Vector2d(1, 0).asDiagonal())));
}

TEST(PsdProject, MatchesJacobiClampOracle) {
  Rng r(4);
  for (int t = 0; t < 200; ++t) {
    const int d = 2 + t % 6;
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = r.normal();
    const Eigen::MatrixXd got = psd_project(m).entries();
    const auto want = oracle::psd_clamp(to_mat(m));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) EXPECT_NEAR(got(i, j), want[i][j], 1e-10);
    // Any other PSD candidate is at least as far from m.
    const Eigen::MatrixXd other = random_psd(r, d, d);
    EXPECT_LE((got - m).norm(), (other - m).norm() + 1e-12);
  }
}

TEST(Mahalanobis, ClampsRoundingLeakage) {
  Eigen::MatrixXd m(2, 2);
  m << 1, -1, -1, 1;
  const MetricMatrix a(m);
  Eigen::Vector2d d(1.0, 1.0 + 1e-17);
  EXPECT_GE(a.quadratic_form(d), 0.0);
}
