#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "collapse/experiment.hpp"
#include "collapse/ngram.hpp"

namespace collapse {

// JSON experiment document:
//
//   required: strategy ("replace" | "accumulate" | "replace_multiple"), dim,
//             samples_per_iter, noise_std, iterations, trials, root_seed
//   optional: covariance       {"kind": "isotropic"}
//                              {"kind": "diagonal", "diagonal": [...]}
//                              {"kind": "full", "matrix": [[...], ...]}
//             execution_mode   "sufficient_stats" (default) | "materialized"
//             fresh_covariates false
//             ridge_lambda     null
//             sigma_threshold  4.0
//
// Unknown keys are rejected. Throws ParseError, SchemaError or ConstraintError,
// each naming the offending key.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig parse_config_document(const nlohmann::json& doc);

// Resolved document with every default spelled out; parse_config(to_json(c)) == c.
nlohmann::json to_json(const ExperimentConfig& config);

// ConstraintError unless the closed-form comparison applies to `config`.
void require_analytic_comparison(const ExperimentConfig& config);

// n-gram document: strategy (string or list of strings) and root_seed are
// required; alphabet_size, order, tokens_per_iter, iterations, seeds, alpha,
// heldout_tokens and source_concentration default to NgramExperiment's values.
struct NgramRunConfig {
  NgramExperiment experiment;  // strategy field holds strategies.front()
  std::vector<Strategy> strategies;

  bool operator==(const NgramRunConfig&) const = default;
};

NgramRunConfig parse_ngram_config(std::string_view text);
NgramRunConfig parse_ngram_config_document(const nlohmann::json& doc);
nlohmann::json to_json(const NgramRunConfig& config);

Strategy parse_strategy(std::string_view name, const std::string& key);

}  // namespace collapse
