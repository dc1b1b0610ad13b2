#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "collapse/model_core.hpp"

namespace collapse {

enum class Strategy { Replace, Accumulate, ReplaceMultiple };

enum class ExecutionMode { SufficientStats, Materialized };

std::string_view to_string(Strategy s);
std::string_view to_string(ExecutionMode m);

// Full description of one linear-regression experiment.
struct ExperimentConfig {
  Strategy strategy = Strategy::Accumulate;
  std::size_t dim = 1;
  std::size_t samples_per_iter = 1;
  double noise_std = 1.0;
  std::size_t iterations = 1;
  std::size_t trials = 1;
  std::uint64_t root_seed = 0;
  CovarianceSpec covariance = IsotropicCov{1};
  ExecutionMode execution_mode = ExecutionMode::SufficientStats;
  bool fresh_covariates = false;
  std::optional<double> ridge_lambda;
  double sigma_threshold = 4.0;

  bool operator==(const ExperimentConfig&) const;
};

// True only for the setting the closed-form laws describe: isotropic features,
// T >= d + 2, shared covariates, ridgeless fits.
bool analytic_comparison_available(const ExperimentConfig& config);

// N(0, Sigma) covariates with w* = (1, ..., 1) and the configured noise level.
DataDistribution make_distribution(const ExperimentConfig& config);

}  // namespace collapse
