#pragma once

#include <optional>
#include <vector>

#include "collapse/experiment.hpp"
#include "collapse/model_core.hpp"
#include "collapse/rng.hpp"

namespace collapse {

// Closed-form expected test error per iteration for isotropic features.
struct AnalyticCurve {
  Strategy strategy = Strategy::Accumulate;
  double prefactor = 0.0;
  std::vector<double> values;   // values[i] is the error after fit i + 1
  std::optional<double> bound;  // prefactor * pi^2 / 6, Accumulate only

  bool operator==(const AnalyticCurve&) const = default;
};

// sigma^2 d / (T - d - 1). Throws TooFewSamples unless T >= d + 2.
double prefactor(double noise_std, std::size_t dim, std::size_t samples_per_iter);

// Exact partial sums, no asymptotic substitutes:
//   Replace          prefactor * n
//   Accumulate       prefactor * sum_{i<=n} 1/i^2
//   ReplaceMultiple  prefactor * sum_{k<=n} 1/k
AnalyticCurve analytic_curve(Strategy strategy, double noise_std, std::size_t dim,
                             std::size_t samples_per_iter, std::size_t n);

double basel_bound(double noise_std, std::size_t dim, std::size_t samples_per_iter);

// tr E[(X^T X)^{-1}] for Sigma = I: d / (T - d - 1).
double lemma1_expected_trace(std::size_t dim, std::size_t samples);

// E[(X^T X)^{-1}] = Sigma^{-1} / (T - d - 1).
Matrix lemma1_expected_inverse(const CovarianceMatrix& cov, std::size_t samples);

struct Lemma1Estimate {
  Matrix mean_inverse;      // trial average of (X^T X)^{-1}
  double trace_mean = 0.0;
  double trace_stderr = 0.0;
  std::size_t trials = 0;
  std::size_t resamples = 0;  // designs redrawn after a rank failure
};

// Monte Carlo average of (X^T X)^{-1} over independent N(0, Sigma) designs.
// Trial i draws from rng.split(i); a rank-deficient design is redrawn from the
// same stream, and 10 consecutive failures abort with RankDeficient. The
// reduction tree is fixed, so the result does not depend on `threads`.
Lemma1Estimate lemma1_mc_estimate(std::size_t dim, std::size_t samples,
                                  const CovarianceMatrix& cov, std::size_t trials,
                                  const RngStream& rng, std::size_t threads = 1);

// (X^T X)^{-1} from a pivoted QR of X. Throws RankDeficient.
Matrix inverse_gram(const Matrix& design);

}  // namespace collapse
