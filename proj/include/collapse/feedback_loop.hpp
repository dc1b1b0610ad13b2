#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "collapse/experiment.hpp"
#include "collapse/model_core.hpp"
#include "collapse/rng.hpp"

namespace collapse {

// How Replace-Multiple realizes its k*T synthetic targets at iteration k.
//   StackedBlocks:  k independent noise blocks on k stacked copies of X w.
//   AveragedNoise:  one block X w + E_bar, E_bar ~ N(0, sigma^2/k I_T).
// Both give the same fitted-weight distribution.
enum class ReplaceMultipleForm { StackedBlocks, AveragedNoise };

struct LoopOptions {
  ExecutionMode mode = ExecutionMode::SufficientStats;
  bool fresh_covariates = false;
  std::optional<double> ridge_lambda;
  bool record_noise = false;
  // Defaults to StackedBlocks in materialized mode and AveragedNoise otherwise.
  std::optional<ReplaceMultipleForm> replace_multiple_form;
};

ReplaceMultipleForm resolved_form(const LoopOptions& options);

// Synthetic targets for the next iteration. `targets` has copies*T entries
// (block j = rows j*T..(j+1)*T-1); `effective_noise` is the length-T noise seen
// by the fit (the block mean of the stacked noise).
struct SyntheticTargets {
  Vector targets;
  Vector effective_noise;
  std::size_t copies = 1;
};

// State of one trial after `iteration()` fits.
//
// The design X is drawn once and shared by every iteration (unless
// fresh_covariates is set). Accumulated data is kept either as sufficient
// statistics (accumulated_gram = sum X_i^T X_i, target_sum = sum X_i^T Y_i) or
// materialized as the full list of target vectors.
class LoopState {
 public:
  std::size_t iteration() const { return iteration_; }
  const Matrix& base_design() const { return design_; }
  const Matrix& gram() const { return gram_; }
  const Matrix& accumulated_gram() const { return accumulated_gram_; }
  const Vector& target_sum() const { return target_sum_; }
  const Weights& current_weights() const { return weights_; }
  const LoopOptions& options() const { return options_; }

  // Present in materialized mode: every target vector fitted so far, in order
  // (Accumulate), or only the latest synthetic set (Replace, Replace-Multiple).
  const std::optional<std::vector<Vector>>& materialized() const { return materialized_; }
  // Present in materialized mode with fresh covariates, parallel to materialized().
  const std::optional<std::vector<Matrix>>& materialized_designs() const {
    return materialized_designs_;
  }
  // Present when options.record_noise: E_1 ... E_n, each of length T.
  const std::optional<std::vector<Vector>>& noise_ledger() const { return noise_ledger_; }

 private:
  friend LoopState start_loop(const DataDistribution&, std::size_t, const LoopOptions&,
                              RngStream&);
  friend LoopState step(LoopState, Strategy, const DataDistribution&, RngStream&);
  LoopState() : weights_(Vector()) {}

  void set_design(Matrix design);
  Vector solve_base(const Vector& targets) const;
  Vector solve_stacked(std::size_t copies, const Vector& xty) const;

  std::size_t iteration_ = 0;
  Matrix design_;
  Matrix gram_;
  Matrix accumulated_gram_;
  Vector target_sum_;
  std::shared_ptr<const Eigen::ColPivHouseholderQR<Matrix>> design_qr_;
  std::optional<std::vector<Vector>> materialized_;
  std::optional<std::vector<Matrix>> materialized_designs_;
  std::optional<std::vector<Vector>> noise_ledger_;
  Weights weights_;
  LoopOptions options_;
};

// Draws X (T x d), Y_1 = X w* + E_1 and fits w_1. Strategy-independent.
LoopState start_loop(const DataDistribution& dist, std::size_t samples_per_iter,
                     const LoopOptions& options, RngStream& rng);

SyntheticTargets synth_targets(const LoopState& state, Strategy strategy, double noise_std,
                               RngStream& rng);

// Advances the loop from iteration n to n + 1.
LoopState step(LoopState state, Strategy strategy, const DataDistribution& dist,
               RngStream& rng);

// w* + (X^T X)^{-1} X^T sum_i E_i / i, the closed form of the accumulate loop.
Weights theorem1_weights(const Matrix& base_design, std::span<const Vector> noise_ledger,
                         const Weights& true_weights);

struct TrialResult {
  std::vector<double> per_iteration_error;
  std::optional<std::vector<Weights>> per_iteration_weights;
  Strategy strategy = Strategy::Accumulate;
};

struct TrialOptions {
  bool record_weights = false;
  bool record_noise = false;
};

// Runs config.iterations fits and records test_error_exact after each one.
TrialResult run_trial(const ExperimentConfig& config, RngStream& rng,
                      const TrialOptions& trial_options = {});

}  // namespace collapse
