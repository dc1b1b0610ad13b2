#include "collapse/experiment.hpp"

namespace collapse {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Replace: return "replace";
    case Strategy::Accumulate: return "accumulate";
    case Strategy::ReplaceMultiple: return "replace_multiple";
  }
  return "unknown";
}

std::string_view to_string(ExecutionMode m) {
  switch (m) {
    case ExecutionMode::SufficientStats: return "sufficient_stats";
    case ExecutionMode::Materialized: return "materialized";
  }
  return "unknown";
}

namespace {

bool same_covariance(const CovarianceSpec& a, const CovarianceSpec& b) {
  if (a.index() != b.index()) return false;
  if (const auto* x = std::get_if<IsotropicCov>(&a)) return x->dim == std::get<IsotropicCov>(b).dim;
  if (const auto* x = std::get_if<DiagonalCov>(&a)) {
    const auto& y = std::get<DiagonalCov>(b);
    return x->diagonal.size() == y.diagonal.size() && x->diagonal == y.diagonal;
  }
  const auto& x = std::get<FullCov>(a);
  const auto& y = std::get<FullCov>(b);
  return x.entries.rows() == y.entries.rows() && x.entries.cols() == y.entries.cols() &&
         x.entries == y.entries;
}

}  // namespace

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return strategy == o.strategy && dim == o.dim && samples_per_iter == o.samples_per_iter &&
         noise_std == o.noise_std && iterations == o.iterations && trials == o.trials &&
         root_seed == o.root_seed && same_covariance(covariance, o.covariance) &&
         execution_mode == o.execution_mode && fresh_covariates == o.fresh_covariates &&
         ridge_lambda == o.ridge_lambda && sigma_threshold == o.sigma_threshold;
}

bool analytic_comparison_available(const ExperimentConfig& config) {
  return std::holds_alternative<IsotropicCov>(config.covariance) &&
         config.samples_per_iter >= config.dim + 2 && !config.fresh_covariates &&
         !config.ridge_lambda.has_value();
}

DataDistribution make_distribution(const ExperimentConfig& config) {
  CovarianceMatrix cov = make_covariance(config.covariance);
  if (cov.dim() != config.dim) {
    throw DimensionMismatch("covariance dim " + std::to_string(cov.dim()) +
                            " does not match dim " + std::to_string(config.dim));
  }
  return DataDistribution(std::move(cov),
                          Weights(Vector::Ones(static_cast<Eigen::Index>(config.dim))),
                          config.noise_std);
}

}  // namespace collapse
