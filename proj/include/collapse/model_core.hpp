#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <variant>

#include "collapse/errors.hpp"
#include "collapse/rng.hpp"

namespace collapse {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct IsotropicCov {
  std::size_t dim;
};
struct DiagonalCov {
  Vector diagonal;
};
struct FullCov {
  Matrix entries;
};
using CovarianceSpec = std::variant<IsotropicCov, DiagonalCov, FullCov>;

// Symmetric positive definite covariance with its lower Cholesky factor.
class CovarianceMatrix {
 public:
  const Matrix& entries() const { return entries_; }
  const Matrix& cholesky_factor() const { return cholesky_; }
  std::size_t dim() const { return static_cast<std::size_t>(entries_.rows()); }
  bool is_isotropic() const { return isotropic_; }

 private:
  friend CovarianceMatrix make_covariance(const CovarianceSpec& spec);
  CovarianceMatrix(Matrix entries, Matrix cholesky, bool isotropic)
      : entries_(std::move(entries)), cholesky_(std::move(cholesky)), isotropic_(isotropic) {}

  Matrix entries_;
  Matrix cholesky_;
  bool isotropic_;
};

// Throws NotPositiveDefinite when a Cholesky pivot is not clearly positive and
// AsymmetricInput when max|A - A^T| > 1e-12 max|A|. A pivot counts as zero when
// it is below d * machine-epsilon * max(max|A|, 1).
CovarianceMatrix make_covariance(const CovarianceSpec& spec);

// Fitted or true linear weights; entries are always finite.
class Weights {
 public:
  explicit Weights(Vector values);

  const Vector& values() const { return values_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }

 private:
  Vector values_;
};

// The generator of (x, y): x ~ N(0, covariance), y = x.w* + eps, eps ~ N(0, noise_std^2).
class DataDistribution {
 public:
  DataDistribution(CovarianceMatrix covariance, Weights true_weights, double noise_std);

  std::size_t dim() const { return covariance_.dim(); }
  const CovarianceMatrix& covariance() const { return covariance_; }
  const Weights& true_weights() const { return true_weights_; }
  double noise_std() const { return noise_std_; }

 private:
  CovarianceMatrix covariance_;
  Weights true_weights_;
  double noise_std_;
};

class Dataset {
 public:
  Dataset(Matrix design, Vector targets);

  const Matrix& design() const { return design_; }
  const Vector& targets() const { return targets_; }
  std::size_t rows() const { return static_cast<std::size_t>(design_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(design_.cols()); }

 private:
  Matrix design_;
  Vector targets_;
};

// Relative singular-value cutoff below which a design is treated as rank deficient.
inline constexpr double kRankTolerance = 1e-10;

// T x d matrix of i.i.d. N(0, Sigma) rows, drawn row-major as z L^T.
Matrix sample_design(const DataDistribution& dist, std::size_t rows, RngStream& rng);

// design * weights + N(0, noise_std^2 I). With noise_std == 0 returns design * weights
// without touching the stream.
Vector sample_labels(const Matrix& design, const Weights& weights, double noise_std,
                     RngStream& rng);

// Column-pivoted Householder QR solve of min ||X w - y||.
Weights fit_least_squares(const Dataset& data);

// (X^T X + lambda I)^{-1} X^T y, solved as the augmented least-squares problem
// [X; sqrt(lambda) I] w = [y; 0].
Weights fit_ridge(const Dataset& data, double lambda);

// (w - w*)^T Sigma (w - w*).
double test_error_exact(const Weights& fitted, const DataDistribution& dist);

// Held-out mean squared prediction error over n_test fresh draws, minus noise_std^2.
double test_error_empirical(const Weights& fitted, const DataDistribution& dist,
                            std::size_t n_test, RngStream& rng);

// Throws RankDeficient unless the pivoted QR of `design` has full column rank at
// kRankTolerance.
void require_full_rank(const Eigen::ColPivHouseholderQR<Matrix>& qr, const char* what);

}  // namespace collapse
