#include "collapse/model_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace collapse {

namespace {

Matrix spec_entries(const CovarianceSpec& spec) {
  return std::visit(
      [](const auto& s) -> Matrix {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, IsotropicCov>) {
          if (s.dim == 0) throw InvalidArgument("isotropic covariance needs dim >= 1");
          return Matrix::Identity(static_cast<Eigen::Index>(s.dim),
                                  static_cast<Eigen::Index>(s.dim));
        } else if constexpr (std::is_same_v<T, DiagonalCov>) {
          if (s.diagonal.size() == 0) throw InvalidArgument("diagonal covariance is empty");
          for (Eigen::Index i = 0; i < s.diagonal.size(); ++i) {
            if (!(s.diagonal[i] > 0.0) || !std::isfinite(s.diagonal[i])) {
              throw NotPositiveDefinite("diagonal entry " + std::to_string(i) +
                                        " is not strictly positive");
            }
          }
          return s.diagonal.asDiagonal();
        } else {
          if (s.entries.rows() == 0 || s.entries.rows() != s.entries.cols()) {
            throw DimensionMismatch("full covariance must be a non-empty square matrix");
          }
          if (!s.entries.allFinite()) throw NotPositiveDefinite("covariance has non-finite entries");
          return s.entries;
        }
      },
      spec);
}

}  // namespace

CovarianceMatrix make_covariance(const CovarianceSpec& spec) {
  Matrix a = spec_entries(spec);
  const double scale = a.cwiseAbs().maxCoeff();
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    throw AsymmetricInput("covariance asymmetry " + std::to_string(asym) +
                          " exceeds 1e-12 relative");
  }
  a = 0.5 * (a + a.transpose());

  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("Cholesky factorization failed");
  }
  Matrix lower = llt.matrixL();
  const double pivot_floor = static_cast<double>(a.rows()) *
                             std::numeric_limits<double>::epsilon() * std::max(scale, 1.0);
  for (Eigen::Index i = 0; i < lower.rows(); ++i) {
    if (!(lower(i, i) * lower(i, i) > pivot_floor)) {
      throw NotPositiveDefinite("Cholesky pivot " + std::to_string(i) +
                                " is numerically zero");
    }
  }
  const bool isotropic = std::holds_alternative<IsotropicCov>(spec);
  return CovarianceMatrix(std::move(a), std::move(lower), isotropic);
}

Weights::Weights(Vector values) : values_(std::move(values)) {
  if (!values_.allFinite()) throw NumericalError("weights contain NaN or Inf");
}

DataDistribution::DataDistribution(CovarianceMatrix covariance, Weights true_weights,
                                   double noise_std)
    : covariance_(std::move(covariance)),
      true_weights_(std::move(true_weights)),
      noise_std_(noise_std) {
  if (true_weights_.size() != covariance_.dim()) {
    throw DimensionMismatch("true weights have length " + std::to_string(true_weights_.size()) +
                            ", covariance has dim " + std::to_string(covariance_.dim()));
  }
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw InvalidArgument("noise_std must be finite and nonnegative");
  }
}

Dataset::Dataset(Matrix design, Vector targets)
    : design_(std::move(design)), targets_(std::move(targets)) {
  if (design_.rows() != targets_.size()) {
    throw DimensionMismatch("design has " + std::to_string(design_.rows()) + " rows but " +
                            std::to_string(targets_.size()) + " targets");
  }
}

Matrix sample_design(const DataDistribution& dist, std::size_t rows, RngStream& rng) {
  if (rows == 0) throw InvalidArgument("sample_design needs at least one row");
  const auto t = static_cast<Eigen::Index>(rows);
  const auto d = static_cast<Eigen::Index>(dist.dim());
  Matrix z(t, d);
  for (Eigen::Index i = 0; i < t; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) z(i, j) = rng.normal();
  }
  if (dist.covariance().is_isotropic()) return z;
  return z * dist.covariance().cholesky_factor().transpose();
}

Vector sample_labels(const Matrix& design, const Weights& weights, double noise_std,
                     RngStream& rng) {
  if (static_cast<std::size_t>(design.cols()) != weights.size()) {
    throw DimensionMismatch("design has " + std::to_string(design.cols()) +
                            " columns, weights have length " + std::to_string(weights.size()));
  }
  Vector y = design * weights.values();
  if (noise_std > 0.0) {
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += noise_std * rng.normal();
  }
  return y;
}

void require_full_rank(const Eigen::ColPivHouseholderQR<Matrix>& qr, const char* what) {
  if (qr.rank() < qr.cols()) {
    throw RankDeficient(std::string(what) + ": rank " + std::to_string(qr.rank()) + " < " +
                        std::to_string(qr.cols()) + " at relative tolerance 1e-10");
  }
}

Weights fit_least_squares(const Dataset& data) {
  if (data.rows() < data.cols()) {
    throw RankDeficient("least squares needs rows >= columns, got " +
                        std::to_string(data.rows()) + " < " + std::to_string(data.cols()));
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(data.design());
  qr.setThreshold(kRankTolerance);
  require_full_rank(qr, "fit_least_squares");
  return Weights(qr.solve(data.targets()));
}

Weights fit_ridge(const Dataset& data, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw NonPositiveLambda("ridge lambda must be positive, got " + std::to_string(lambda));
  }
  const Eigen::Index t = data.design().rows();
  const Eigen::Index d = data.design().cols();
  Matrix augmented(t + d, d);
  augmented.topRows(t) = data.design();
  augmented.bottomRows(d) = std::sqrt(lambda) * Matrix::Identity(d, d);
  Vector rhs = Vector::Zero(t + d);
  rhs.head(t) = data.targets();
  return Weights(augmented.colPivHouseholderQr().solve(rhs));
}

double test_error_exact(const Weights& fitted, const DataDistribution& dist) {
  if (fitted.size() != dist.dim()) {
    throw DimensionMismatch("fitted weights have length " + std::to_string(fitted.size()) +
                            ", distribution has dim " + std::to_string(dist.dim()));
  }
  const Vector delta = fitted.values() - dist.true_weights().values();
  if (dist.covariance().is_isotropic()) return delta.squaredNorm();
  // ||L^T delta||^2 keeps the result nonnegative under rounding.
  return (dist.covariance().cholesky_factor().transpose() * delta).squaredNorm();
}

double test_error_empirical(const Weights& fitted, const DataDistribution& dist,
                            std::size_t n_test, RngStream& rng) {
  if (fitted.size() != dist.dim()) {
    throw DimensionMismatch("fitted weights do not match distribution dim");
  }
  if (n_test == 0) throw InvalidArgument("n_test must be >= 1");
  const Matrix x = sample_design(dist, n_test, rng);
  const Vector y = sample_labels(x, dist.true_weights(), dist.noise_std(), rng);
  const Vector residual = x * fitted.values() - y;
  return residual.squaredNorm() / static_cast<double>(n_test) -
         dist.noise_std() * dist.noise_std();
}

}  // namespace collapse
