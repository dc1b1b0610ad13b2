#include <cmath>
#include <vector>

#include "collapse/model_core.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace collapse;

namespace {

DataDistribution iso(std::size_t d, Vector w, double sigma) {
  return DataDistribution(make_covariance(IsotropicCov{d}), Weights(std::move(w)), sigma);
}

Matrix from_rows(const oracle::Rows& rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[0].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

}  // namespace

TEST_CASE("make_covariance: isotropic and diagonal factors") {
  const auto eye = make_covariance(IsotropicCov{3});
  CHECK(eye.entries().isIdentity(0.0));
  CHECK(eye.cholesky_factor().isIdentity(0.0));
  CHECK(eye.is_isotropic());

  Vector diag(2);
  diag << 4.0, 1.0;
  const auto dc = make_covariance(DiagonalCov{diag});
  CHECK(dc.cholesky_factor()(0, 0) == doctest::Approx(2.0));
  CHECK(dc.cholesky_factor()(1, 1) == doctest::Approx(1.0));
  CHECK(dc.cholesky_factor()(1, 0) == 0.0);
  CHECK_FALSE(dc.is_isotropic());
}

TEST_CASE("make_covariance: full matrix agrees with hand Cholesky") {
  const oracle::Rows a{{2.0, 1.0}, {1.0, 2.0}};
  const oracle::Rows l = oracle::cholesky(a);
  CHECK(l[0][0] == doctest::Approx(1.41421).epsilon(1e-5));
  CHECK(l[1][0] == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK(l[1][1] == doctest::Approx(1.22474).epsilon(1e-5));

  const auto cov = make_covariance(FullCov{from_rows(a)});
  CHECK((cov.cholesky_factor() - from_rows(l)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((cov.cholesky_factor() * cov.cholesky_factor().transpose() - cov.entries())
            .cwiseAbs()
            .maxCoeff() <= 1e-10 * cov.entries().cwiseAbs().maxCoeff());
}

TEST_CASE("make_covariance: rejects degenerate and asymmetric input") {
  Matrix tiny(1, 1);
  tiny << 1e-16;
  CHECK_THROWS_AS(make_covariance(FullCov{tiny}), NotPositiveDefinite);

  Matrix indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(make_covariance(FullCov{indefinite}), NotPositiveDefinite);

  Matrix asym(2, 2);
  asym << 2.0, 1.0, 1.0 + 1e-9, 2.0;
  CHECK_THROWS_AS(make_covariance(FullCov{asym}), AsymmetricInput);

  Vector bad(2);
  bad << 1.0, 0.0;
  CHECK_THROWS_AS(make_covariance(DiagonalCov{bad}), NotPositiveDefinite);
}

TEST_CASE("Cholesky reconstruction holds for random SPD matrices") {
  RngStream rng(11, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index d = 1 + trial % 7;
    Matrix b(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) b(i, j) = rng.normal();
    Matrix a = b * b.transpose() + 0.1 * Matrix::Identity(d, d);
    a = 0.5 * (a + a.transpose());
    const auto cov = make_covariance(FullCov{a});
    const double err =
        (cov.cholesky_factor() * cov.cholesky_factor().transpose() - cov.entries()).cwiseAbs().maxCoeff();
    CHECK(err <= 1e-10 * cov.entries().cwiseAbs().maxCoeff());
    CHECK(cov.entries() == cov.entries().transpose());
  }
}

TEST_CASE("sample_design is deterministic and has the right covariance") {
  const auto dist = iso(2, Vector::Zero(2), 1.0);
  RngStream a(7, 3), b(7, 3), c(7, 4);
  const Matrix xa = sample_design(dist, 5, a);
  const Matrix xb = sample_design(dist, 5, b);
  const Matrix xc = sample_design(dist, 5, c);
  CHECK(xa.rows() == 5);
  CHECK(xa.cols() == 2);
  CHECK(xa == xb);
  CHECK(xa != xc);

  Vector diag(2);
  diag << 4.0, 1.0;
  const DataDistribution aniso(make_covariance(DiagonalCov{diag}), Weights(Vector::Zero(2)), 1.0);
  RngStream rng(99, 0);
  const Matrix x = sample_design(aniso, 100000, rng);
  for (int col = 0; col < 2; ++col) {
    std::vector<double> v(x.col(col).begin(), x.col(col).end());
    CHECK(std::abs(oracle::stats(v).variance / diag[col] - 1.0) < 0.05);
  }
}

TEST_CASE("sample_labels") {
  RngStream rng(1, 1);
  Vector w(2);
  w << 3.0, -1.0;
  const Vector y = sample_labels(Matrix::Identity(2, 2), Weights(w), 0.0, rng);
  CHECK(y[0] == 3.0);
  CHECK(y[1] == -1.0);

  const Vector zero = sample_labels(Matrix::Random(4, 3), Weights(Vector::Zero(3)), 0.0, rng);
  CHECK(zero.isZero(0.0));

  const Vector noisy = sample_labels(Matrix::Ones(100000, 1), Weights(Vector::Zero(1)), 1.0, rng);
  const auto st = oracle::stats(std::vector<double>(noisy.begin(), noisy.end()));
  CHECK(std::abs(st.mean) < 0.02);
  CHECK(std::abs(st.variance - 1.0) < 0.05);

  CHECK_THROWS_AS(sample_labels(Matrix::Identity(2, 2), Weights(Vector::Zero(3)), 0.0, rng),
                  DimensionMismatch);
}

TEST_CASE("fit_least_squares") {
  Vector y(3);
  y << 1.0, 2.0, 3.0;
  const Weights w = fit_least_squares(Dataset(Matrix::Identity(3, 3), y));
  CHECK((w.values() - y).cwiseAbs().maxCoeff() < 1e-14);

  Vector y4(4);
  y4 << 1.0, 2.0, 3.0, 4.0;
  CHECK(fit_least_squares(Dataset(Matrix::Ones(4, 1), y4))[0] == doctest::Approx(2.5));

  Matrix deficient(3, 2);
  deficient << 1, 0, 2, 0, 0, 0;
  CHECK_THROWS_AS(fit_least_squares(Dataset(deficient, Vector::Ones(3))), RankDeficient);
  CHECK_THROWS_AS(fit_least_squares(Dataset(Matrix::Ones(1, 2), Vector::Ones(1))), RankDeficient);
  CHECK_THROWS_AS(Dataset(Matrix::Ones(3, 2), Vector::Ones(2)), DimensionMismatch);
}

TEST_CASE("least squares satisfies the normal equations and matches a hand solver") {
  RngStream rng(5, 0);
  const auto dist = iso(6, Vector::Ones(6), 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix x = sample_design(dist, 30, rng);
    const Vector y = sample_labels(x, dist.true_weights(), 1.0, rng);
    const Weights w = fit_least_squares(Dataset(x, y));

    const Vector lhs = x.transpose() * x * w.values();
    const Vector rhs = x.transpose() * y;
    CHECK((lhs - rhs).norm() <= 1e-8 * rhs.norm());

    oracle::Rows rows(30, std::vector<double>(6));
    for (int i = 0; i < 30; ++i)
      for (int j = 0; j < 6; ++j) rows[i][j] = x(i, j);
    const auto ref = oracle::normal_equations(rows, std::vector<double>(y.begin(), y.end()));
    for (int j = 0; j < 6; ++j) CHECK(w[j] == doctest::Approx(ref[j]).epsilon(1e-9));
  }
}

TEST_CASE("fit_ridge") {
  Vector y(2);
  y << 2.0, 2.0;
  const Weights w = fit_ridge(Dataset(Matrix::Identity(2, 2), y), 1.0);
  CHECK(w[0] == doctest::Approx(1.0));
  CHECK(w[1] == doctest::Approx(1.0));

  RngStream rng(3, 0);
  const auto dist = iso(4, Vector::Ones(4), 1.0);
  const Matrix x = sample_design(dist, 20, rng);
  const Vector t = sample_labels(x, dist.true_weights(), 1.0, rng);
  const Weights ls = fit_least_squares(Dataset(x, t));
  const Weights rd = fit_ridge(Dataset(x, t), 1e-12);
  CHECK((ls.values() - rd.values()).norm() <= 1e-6 * ls.values().norm());

  Matrix deficient(3, 2);
  deficient << 1, 0, 2, 0, 0, 0;
  Vector yd(3);
  yd << 1.0, 2.0, 0.0;
  const Weights reg = fit_ridge(Dataset(deficient, yd), 1.0);
  // X^T X = diag(5, 0), X^T y = (5, 0).
  CHECK(reg[0] == doctest::Approx(5.0 / 6.0));
  CHECK(std::abs(reg[1]) < 1e-14);

  CHECK_THROWS_AS(fit_ridge(Dataset(deficient, yd), 0.0), NonPositiveLambda);
  CHECK_THROWS_AS(fit_ridge(Dataset(deficient, yd), -1.0), NonPositiveLambda);
}

TEST_CASE("test_error_exact") {
  Vector w(2);
  w << 0.5, -2.0;
  const auto dist = iso(2, w, 1.0);
  CHECK(test_error_exact(Weights(w), dist) == 0.0);

  Vector shifted = w;
  shifted[0] += 1.0;
  CHECK(test_error_exact(Weights(shifted), dist) == doctest::Approx(1.0));

  Vector diag(2);
  diag << 2.0, 1.0;
  const DataDistribution aniso(make_covariance(DiagonalCov{diag}), Weights(Vector::Zero(2)), 1.0);
  // Direct quadratic form: sum_ij d_i Sigma_ij d_j with d = (1, 1).
  double brute = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) brute += aniso.covariance().entries()(i, j);
  CHECK(brute == 3.0);
  CHECK(test_error_exact(Weights(Vector::Ones(2)), aniso) == doctest::Approx(3.0));

  CHECK_THROWS_AS(test_error_exact(Weights(Vector::Ones(3)), aniso), DimensionMismatch);
}

TEST_CASE("test_error_exact is invariant under rotations for identity covariance") {
  RngStream rng(21, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + trial % 5;
    Matrix g(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
    const Matrix q = g.householderQr().householderQ();
    Vector w_star(d), w_hat(d);
    for (int i = 0; i < d; ++i) {
      w_star[i] = rng.normal();
      w_hat[i] = rng.normal();
    }
    const double base = test_error_exact(Weights(w_hat), iso(d, w_star, 1.0));
    const double rotated = test_error_exact(Weights(q * w_hat), iso(d, q * w_star, 1.0));
    CHECK(std::abs(base - rotated) <= 1e-10 * std::max(1.0, base));
  }
}

TEST_CASE("test_error_empirical") {
  Vector w(2);
  w << 1.0, 2.0;
  RngStream rng(8, 0);
  CHECK(test_error_empirical(Weights(w), iso(2, w, 0.0), 1000, rng) == 0.0);
  CHECK(std::abs(test_error_empirical(Weights(w), iso(2, w, 1.0), 100000, rng)) < 0.05);

  Vector off = w;
  off[0] += 1.0;
  const double est = test_error_empirical(Weights(off), iso(2, w, 0.0), 100000, rng);
  CHECK(std::abs(est - 1.0) < 0.05);
}

TEST_CASE("empirical and exact test error agree on average") {
  const auto dist = iso(3, Vector::Ones(3), 1.0);
  const std::size_t trials = 10000;
  std::vector<double> diff(trials);
  double exact_mean = 0.0, empirical_mean = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    RngStream rng(31, t);
    const Matrix x = sample_design(dist, 10, rng);
    const Weights w = fit_least_squares(Dataset(x, sample_labels(x, dist.true_weights(), 1.0, rng)));
    const double exact = test_error_exact(w, dist);
    const double empirical = test_error_empirical(w, dist, 50, rng);
    exact_mean += exact;
    empirical_mean += empirical;
    diff[t] = empirical - exact;
  }
  const auto st = oracle::stats(diff);
  const double se = std::sqrt(st.variance / static_cast<double>(trials));
  CHECK(std::abs(st.mean) <= 3.0 * se);
}

TEST_CASE("RngStream: reproducible and split streams differ") {
  RngStream a(42, 0), b(42, 0), c(42, 1), d(43, 0);
  for (int i = 0; i < 10; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
    CHECK(x != d.next_u64());
  }
  RngStream parent(5, 9);
  RngStream s0 = parent.split(0), s0b = parent.split(0), s1 = parent.split(1);
  CHECK(s0.next_u64() == s0b.next_u64());
  CHECK(s0.next_u64() != s1.next_u64());

  // Pearson correlation between neighbouring streams should be small.
  RngStream u(100, 0), v(100, 1);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double x = u.normal(), y = v.normal();
    sxy += x * y;
    sxx += x * x;
    syy += y * y;
  }
  CHECK(std::abs(sxy / std::sqrt(sxx * syy)) < 0.02);
}
