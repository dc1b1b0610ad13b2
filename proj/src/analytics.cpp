#include "collapse/analytics.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "collapse/parallel.hpp"

namespace collapse {

namespace {

void require_samples(std::size_t dim, std::size_t samples) {
  if (dim == 0) throw InvalidArgument("dim must be >= 1");
  if (samples < dim + 2) {
    throw TooFewSamples("closed form needs T >= d + 2 samples per iteration, got T = " +
                        std::to_string(samples) + " with d = " + std::to_string(dim));
  }
}

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

constexpr std::size_t kChunk = 1024;

struct TracePartial {
  Matrix sum;
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t resamples = 0;
};

TracePartial merge(TracePartial a, TracePartial b) {
  if (a.count == 0) return b;
  if (b.count == 0) return a;
  TracePartial out;
  out.sum = a.sum + b.sum;
  out.count = a.count + b.count;
  const double delta = b.mean - a.mean;
  const double na = static_cast<double>(a.count);
  const double nb = static_cast<double>(b.count);
  const double n = na + nb;
  out.mean = a.mean + delta * nb / n;
  out.m2 = a.m2 + b.m2 + delta * delta * na * nb / n;
  out.resamples = a.resamples + b.resamples;
  return out;
}

}  // namespace

double prefactor(double noise_std, std::size_t dim, std::size_t samples_per_iter) {
  require_samples(dim, samples_per_iter);
  const double d = static_cast<double>(dim);
  return noise_std * noise_std * d / (static_cast<double>(samples_per_iter) - d - 1.0);
}

AnalyticCurve analytic_curve(Strategy strategy, double noise_std, std::size_t dim,
                             std::size_t samples_per_iter, std::size_t n) {
  if (n == 0) throw InvalidArgument("analytic curve needs n >= 1");
  AnalyticCurve curve;
  curve.strategy = strategy;
  curve.prefactor = prefactor(noise_std, dim, samples_per_iter);
  curve.values.resize(n);
  CompensatedSum partial;
  for (std::size_t i = 1; i <= n; ++i) {
    const double k = static_cast<double>(i);
    switch (strategy) {
      case Strategy::Replace: curve.values[i - 1] = curve.prefactor * k; continue;
      case Strategy::Accumulate: partial.add(1.0 / (k * k)); break;
      case Strategy::ReplaceMultiple: partial.add(1.0 / k); break;
    }
    curve.values[i - 1] = curve.prefactor * partial.value();
  }
  if (strategy == Strategy::Accumulate) curve.bound = basel_bound(noise_std, dim, samples_per_iter);
  return curve;
}

double basel_bound(double noise_std, std::size_t dim, std::size_t samples_per_iter) {
  return prefactor(noise_std, dim, samples_per_iter) * std::numbers::pi * std::numbers::pi / 6.0;
}

double lemma1_expected_trace(std::size_t dim, std::size_t samples) {
  require_samples(dim, samples);
  const double d = static_cast<double>(dim);
  return d / (static_cast<double>(samples) - d - 1.0);
}

Matrix lemma1_expected_inverse(const CovarianceMatrix& cov, std::size_t samples) {
  require_samples(cov.dim(), samples);
  const double d = static_cast<double>(cov.dim());
  const Matrix identity = Matrix::Identity(cov.entries().rows(), cov.entries().cols());
  const Matrix inverse = cov.entries().llt().solve(identity);
  return inverse / (static_cast<double>(samples) - d - 1.0);
}

Matrix inverse_gram(const Matrix& design) {
  Eigen::ColPivHouseholderQR<Matrix> qr(design.rows(), design.cols());
  qr.setThreshold(kRankTolerance);
  qr.compute(design);
  require_full_rank(qr, "inverse_gram");
  const auto d = design.cols();
  Matrix r_inv = Matrix::Identity(d, d);
  qr.matrixR().topLeftCorner(d, d).triangularView<Eigen::Upper>().solveInPlace(r_inv);
  // X P = Q R  =>  (X^T X)^{-1} = P R^{-1} R^{-T} P^T
  Matrix inner = r_inv * r_inv.transpose();
  const auto& perm = qr.colsPermutation();
  return perm * inner * perm.transpose();
}

Lemma1Estimate lemma1_mc_estimate(std::size_t dim, std::size_t samples,
                                  const CovarianceMatrix& cov, std::size_t trials,
                                  const RngStream& rng, std::size_t threads) {
  require_samples(dim, samples);
  if (cov.dim() != dim) throw DimensionMismatch("covariance dim does not match dim");
  if (trials == 0) throw InvalidArgument("trials must be >= 1");

  const DataDistribution dist(cov, Weights(Vector::Zero(static_cast<Eigen::Index>(dim))), 0.0);
  const auto d = static_cast<Eigen::Index>(dim);
  const std::size_t chunks = (trials + kChunk - 1) / kChunk;
  std::vector<TracePartial> partials(chunks);

  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t begin = c * kChunk;
    const std::size_t end = std::min(trials, begin + kChunk);
    TracePartial part;
    part.sum = Matrix::Zero(d, d);
    std::vector<double> traces;
    traces.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      RngStream stream = rng.split(i);
      std::size_t failures = 0;
      for (;;) {
        try {
          const Matrix inv = inverse_gram(sample_design(dist, samples, stream));
          part.sum += inv;
          traces.push_back(inv.trace());
          break;
        } catch (const RankDeficient&) {
          ++part.resamples;
          if (++failures >= 10) {
            throw RankDeficient("lemma1 trial " + std::to_string(i) +
                                ": 10 consecutive rank-deficient designs");
          }
        }
      }
    }
    part.count = traces.size();
    double s = 0.0;
    for (double t : traces) s += t;
    part.mean = s / static_cast<double>(part.count);
    for (double t : traces) part.m2 += (t - part.mean) * (t - part.mean);
    partials[c] = std::move(part);
  });

  TracePartial total = pairwise_reduce(std::move(partials), merge);
  Lemma1Estimate out;
  out.trials = total.count;
  out.mean_inverse = total.sum / static_cast<double>(total.count);
  out.trace_mean = out.mean_inverse.trace();
  out.resamples = total.resamples;
  if (total.count > 1) {
    const double var = total.m2 / static_cast<double>(total.count - 1);
    out.trace_stderr = std::sqrt(var / static_cast<double>(total.count));
  }
  return out;
}

}  // namespace collapse
