#pragma once

#include <optional>
#include <span>
#include <vector>

#include "collapse/analytics.hpp"
#include "collapse/experiment.hpp"
#include "collapse/feedback_loop.hpp"

namespace collapse {

struct CurveAggregate {
  Strategy strategy = Strategy::Accumulate;
  std::vector<double> per_iteration_mean;
  std::vector<double> per_iteration_stderr;  // sample sd / sqrt(trials)
  std::size_t trials = 0;
  std::optional<AnalyticCurve> analytic;
  std::optional<double> max_sigma_deviation;

  bool operator==(const CurveAggregate&) const = default;
};

struct DeviationReport {
  std::vector<double> per_iteration_sigma;
  double max_sigma = 0.0;
  double threshold = 4.0;
  bool pass = true;
};

// Trials per reduction leaf. Fixed so the summation tree only depends on the
// number of trials.
inline constexpr std::size_t kTrialChunk = 256;

// Per-iteration mean and standard error with a fixed reduction tree.
// Throws EmptyInput or LengthMismatch.
CurveAggregate aggregate(std::span<const TrialResult> trials);

// |mean - analytic| / stderr per iteration. Where stderr is zero the deviation
// is 0 if |mean - analytic| <= 1e-12 and +inf otherwise.
DeviationReport compare_to_analytic(const CurveAggregate& agg, const AnalyticCurve& curve,
                                    double threshold = 4.0);

// Runs config.trials trials on streams (root_seed, 0..trials-1). Attaches the
// analytic curve when the closed form applies. The result is bit-identical for
// every `threads` value. Any failing trial aborts the run with TrialFailure.
CurveAggregate run_experiment(const ExperimentConfig& config, std::size_t threads = 1);

}  // namespace collapse
