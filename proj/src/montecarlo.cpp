#include "collapse/montecarlo.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "collapse/parallel.hpp"

namespace collapse {

namespace {

struct Moments {
  std::size_t count = 0;
  std::vector<double> mean;
  std::vector<double> m2;
};

// Two-pass moments about the chunk's first row, so constant columns reduce to
// exactly zero spread.
Moments chunk_moments(std::span<const std::vector<double>> rows) {
  Moments m;
  m.count = rows.size();
  const std::vector<double>& shift = rows.front();
  const std::size_t n = shift.size();
  m.mean.assign(n, 0.0);
  m.m2.assign(n, 0.0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < n; ++i) m.mean[i] += r[i] - shift[i];
  }
  for (double& x : m.mean) x /= static_cast<double>(m.count);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < n; ++i) {
      const double dev = (r[i] - shift[i]) - m.mean[i];
      m.m2[i] += dev * dev;
    }
  }
  for (std::size_t i = 0; i < n; ++i) m.mean[i] += shift[i];
  return m;
}

Moments merge(Moments a, Moments b) {
  const double na = static_cast<double>(a.count);
  const double nb = static_cast<double>(b.count);
  const double n = na + nb;
  for (std::size_t i = 0; i < a.mean.size(); ++i) {
    const double delta = b.mean[i] - a.mean[i];
    a.mean[i] += delta * nb / n;
    a.m2[i] += b.m2[i] + delta * delta * na * nb / n;
  }
  a.count += b.count;
  return a;
}

CurveAggregate finish(Moments total, Strategy strategy) {
  CurveAggregate agg;
  agg.strategy = strategy;
  agg.trials = total.count;
  agg.per_iteration_mean = std::move(total.mean);
  agg.per_iteration_stderr.assign(agg.per_iteration_mean.size(), 0.0);
  if (total.count > 1) {
    const double n = static_cast<double>(total.count);
    for (std::size_t i = 0; i < total.m2.size(); ++i) {
      agg.per_iteration_stderr[i] = std::sqrt(total.m2[i] / (n - 1.0) / n);
    }
  }
  return agg;
}

}  // namespace

CurveAggregate aggregate(std::span<const TrialResult> trials) {
  if (trials.empty()) throw EmptyInput("aggregate needs at least one trial");
  const std::size_t n = trials.front().per_iteration_error.size();
  std::vector<std::vector<double>> rows;
  rows.reserve(trials.size());
  for (std::size_t t = 0; t < trials.size(); ++t) {
    if (trials[t].per_iteration_error.size() != n) {
      throw LengthMismatch("trial " + std::to_string(t) + " has " +
                           std::to_string(trials[t].per_iteration_error.size()) +
                           " iterations, expected " + std::to_string(n));
    }
    rows.push_back(trials[t].per_iteration_error);
  }
  if (n == 0) throw EmptyInput("trials have no iterations");
  std::vector<Moments> leaves;
  for (std::size_t begin = 0; begin < rows.size(); begin += kTrialChunk) {
    const std::size_t len = std::min(kTrialChunk, rows.size() - begin);
    leaves.push_back(chunk_moments(std::span(rows).subspan(begin, len)));
  }
  return finish(pairwise_reduce(std::move(leaves), merge), trials.front().strategy);
}

DeviationReport compare_to_analytic(const CurveAggregate& agg, const AnalyticCurve& curve,
                                    double threshold) {
  const std::size_t n = agg.per_iteration_mean.size();
  if (curve.values.size() != n || agg.per_iteration_stderr.size() != n) {
    throw LengthMismatch("aggregate has " + std::to_string(n) + " iterations, curve has " +
                         std::to_string(curve.values.size()));
  }
  DeviationReport report;
  report.threshold = threshold;
  report.per_iteration_sigma.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = std::abs(agg.per_iteration_mean[i] - curve.values[i]);
    const double se = agg.per_iteration_stderr[i];
    double sigma;
    if (se > 0.0) {
      sigma = diff / se;
    } else {
      sigma = diff <= 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    report.per_iteration_sigma[i] = sigma;
    report.max_sigma = std::max(report.max_sigma, sigma);
  }
  report.pass = report.max_sigma < threshold;
  return report;
}

CurveAggregate run_experiment(const ExperimentConfig& config, std::size_t threads) {
  if (config.trials == 0) throw InvalidArgument("trials must be >= 1");
  if (config.iterations == 0) throw InvalidArgument("iterations must be >= 1");

  struct Leaf {
    Moments moments;
    std::size_t failures = 0;
    std::size_t first_failure = 0;
    std::string message;
  };
  const std::size_t chunks = (config.trials + kTrialChunk - 1) / kTrialChunk;
  std::vector<Leaf> leaves(chunks);

  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t begin = c * kTrialChunk;
    const std::size_t end = std::min(config.trials, begin + kTrialChunk);
    Leaf& leaf = leaves[c];
    std::vector<std::vector<double>> rows;
    rows.reserve(end - begin);
    for (std::size_t t = begin; t < end; ++t) {
      try {
        RngStream rng(config.root_seed, t);
        rows.push_back(run_trial(config, rng).per_iteration_error);
      } catch (const std::exception& e) {
        if (leaf.failures++ == 0) {
          leaf.first_failure = t;
          leaf.message = e.what();
        }
      }
    }
    if (leaf.failures == 0) leaf.moments = chunk_moments(rows);
  });

  std::size_t failures = 0;
  const Leaf* first = nullptr;
  for (const auto& leaf : leaves) {
    if (leaf.failures > 0 && first == nullptr) first = &leaf;
    failures += leaf.failures;
  }
  if (first != nullptr) throw TrialFailure(first->first_failure, failures, first->message);

  std::vector<Moments> moments;
  moments.reserve(chunks);
  for (auto& leaf : leaves) moments.push_back(std::move(leaf.moments));
  CurveAggregate agg = finish(pairwise_reduce(std::move(moments), merge), config.strategy);

  if (analytic_comparison_available(config)) {
    agg.analytic = analytic_curve(config.strategy, config.noise_std, config.dim,
                                  config.samples_per_iter, config.iterations);
    agg.max_sigma_deviation =
        compare_to_analytic(agg, *agg.analytic, config.sigma_threshold).max_sigma;
  }
  return agg;
}

}  // namespace collapse
