#include "collapse/feedback_loop.hpp"

#include <cmath>
#include <string>

namespace collapse {

namespace {

Vector draw_noise(Eigen::Index length, double noise_std, RngStream& rng) {
  Vector e = Vector::Zero(length);
  if (noise_std > 0.0) {
    for (Eigen::Index i = 0; i < length; ++i) e[i] = noise_std * rng.normal();
  }
  return e;
}

Matrix stack_copies(const Matrix& design, std::size_t copies) {
  const Eigen::Index t = design.rows();
  Matrix stacked(t * static_cast<Eigen::Index>(copies), design.cols());
  for (std::size_t j = 0; j < copies; ++j) {
    stacked.middleRows(static_cast<Eigen::Index>(j) * t, t) = design;
  }
  return stacked;
}

Matrix stack_rows(const std::vector<Matrix>& blocks) {
  Eigen::Index rows = 0;
  for (const auto& b : blocks) rows += b.rows();
  Matrix out(rows, blocks.front().cols());
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    out.middleRows(at, b.rows()) = b;
    at += b.rows();
  }
  return out;
}

Vector stack_vectors(const std::vector<Vector>& blocks) {
  Eigen::Index rows = 0;
  for (const auto& b : blocks) rows += b.size();
  Vector out(rows);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    out.segment(at, b.size()) = b;
    at += b.size();
  }
  return out;
}

Weights fit_dataset(const Dataset& data, const std::optional<double>& ridge_lambda) {
  return ridge_lambda ? fit_ridge(data, *ridge_lambda) : fit_least_squares(data);
}

// X^T (sum of the T-row blocks of `targets`).
Vector block_xty(const Matrix& design, const Vector& targets, std::size_t copies) {
  const Eigen::Index t = design.rows();
  Vector summed = Vector::Zero(t);
  for (std::size_t j = 0; j < copies; ++j) {
    summed += targets.segment(static_cast<Eigen::Index>(j) * t, t);
  }
  return design.transpose() * summed;
}

}  // namespace

ReplaceMultipleForm resolved_form(const LoopOptions& options) {
  if (options.replace_multiple_form) return *options.replace_multiple_form;
  return options.mode == ExecutionMode::Materialized ? ReplaceMultipleForm::StackedBlocks
                                                     : ReplaceMultipleForm::AveragedNoise;
}

void LoopState::set_design(Matrix design) {
  design_ = std::move(design);
  gram_ = design_.transpose() * design_;
  auto qr = std::make_shared<Eigen::ColPivHouseholderQR<Matrix>>(design_.rows(), design_.cols());
  qr->setThreshold(kRankTolerance);
  qr->compute(design_);
  if (!options_.ridge_lambda) require_full_rank(*qr, "loop design");
  design_qr_ = std::move(qr);
}

Vector LoopState::solve_base(const Vector& targets) const {
  if (options_.ridge_lambda) return fit_ridge(Dataset(design_, targets), *options_.ridge_lambda).values();
  return design_qr_->solve(targets);
}

// Fit on `copies` stacked copies of X given xty = X^T (sum of the target blocks).
Vector LoopState::solve_stacked(std::size_t copies, const Vector& xty) const {
  const auto d = design_.cols();
  const double k = static_cast<double>(copies);
  if (options_.ridge_lambda) {
    Matrix lhs = k * gram_;
    lhs.diagonal().array() += *options_.ridge_lambda;
    return lhs.llt().solve(xty);
  }
  // X P = Q R, so X^T X = P R^T R P^T.
  const auto r = design_qr_->matrixR().topLeftCorner(d, d);
  Vector rhs = design_qr_->colsPermutation().transpose() * (xty / k);
  r.transpose().triangularView<Eigen::Lower>().solveInPlace(rhs);
  r.triangularView<Eigen::Upper>().solveInPlace(rhs);
  return design_qr_->colsPermutation() * rhs;
}

LoopState start_loop(const DataDistribution& dist, std::size_t samples_per_iter,
                     const LoopOptions& options, RngStream& rng) {
  if (samples_per_iter < dist.dim()) {
    throw RankDeficient("samples_per_iter " + std::to_string(samples_per_iter) +
                        " is below dim " + std::to_string(dist.dim()));
  }
  if (options.ridge_lambda && !(*options.ridge_lambda > 0.0)) {
    throw NonPositiveLambda("ridge lambda must be positive");
  }
  LoopState state;
  state.options_ = options;
  state.set_design(sample_design(dist, samples_per_iter, rng));

  Vector noise = draw_noise(state.design_.rows(), dist.noise_std(), rng);
  Vector targets = state.design_ * dist.true_weights().values() + noise;

  if (options.mode == ExecutionMode::Materialized) {
    state.weights_ = fit_dataset(Dataset(state.design_, targets), options.ridge_lambda);
    state.materialized_ = std::vector<Vector>{targets};
    if (options.fresh_covariates) state.materialized_designs_ = std::vector<Matrix>{state.design_};
  } else {
    state.weights_ = Weights(state.solve_base(targets));
  }
  state.accumulated_gram_ = state.gram_;
  state.target_sum_ = state.design_.transpose() * targets;
  if (options.record_noise) state.noise_ledger_ = std::vector<Vector>{std::move(noise)};
  state.iteration_ = 1;
  return state;
}

SyntheticTargets synth_targets(const LoopState& state, Strategy strategy, double noise_std,
                               RngStream& rng) {
  if (state.iteration() == 0) throw InvalidArgument("loop state holds no fitted weights");
  if (static_cast<std::size_t>(state.base_design().cols()) != state.current_weights().size()) {
    throw DimensionMismatch("design columns do not match weight length");
  }
  const Vector mean = state.base_design() * state.current_weights().values();
  const Eigen::Index t = mean.size();

  SyntheticTargets out;
  if (strategy != Strategy::ReplaceMultiple) {
    out.effective_noise = draw_noise(t, noise_std, rng);
    out.targets = mean + out.effective_noise;
    return out;
  }

  const std::size_t copies = state.iteration() + 1;
  if (resolved_form(state.options()) == ReplaceMultipleForm::AveragedNoise) {
    out.effective_noise = draw_noise(t, noise_std / std::sqrt(static_cast<double>(copies)), rng);
    out.targets = mean + out.effective_noise;
    return out;
  }
  out.copies = copies;
  out.targets.resize(t * static_cast<Eigen::Index>(copies));
  out.effective_noise = Vector::Zero(t);
  for (std::size_t j = 0; j < copies; ++j) {
    Vector block_noise = draw_noise(t, noise_std, rng);
    out.targets.segment(static_cast<Eigen::Index>(j) * t, t) = mean + block_noise;
    out.effective_noise += block_noise;
  }
  out.effective_noise /= static_cast<double>(copies);
  return out;
}

LoopState step(LoopState state, Strategy strategy, const DataDistribution& dist,
               RngStream& rng) {
  if (state.iteration_ == 0) throw InvalidArgument("step requires a started loop");
  const LoopOptions& opt = state.options_;
  const bool materialized = opt.mode == ExecutionMode::Materialized;
  if (opt.fresh_covariates) {
    state.set_design(sample_design(dist, static_cast<std::size_t>(state.design_.rows()), rng));
  }

  SyntheticTargets synth = synth_targets(state, strategy, dist.noise_std(), rng);
  const std::size_t next = state.iteration_ + 1;

  switch (strategy) {
    case Strategy::Replace: {
      if (materialized) {
        state.weights_ = fit_dataset(Dataset(state.design_, synth.targets), opt.ridge_lambda);
        state.materialized_ = std::vector<Vector>{synth.targets};
        if (opt.fresh_covariates) state.materialized_designs_ = std::vector<Matrix>{state.design_};
      } else {
        state.weights_ = Weights(state.solve_base(synth.targets));
      }
      break;
    }
    case Strategy::Accumulate: {
      state.accumulated_gram_ += state.gram_;
      state.target_sum_ += state.design_.transpose() * synth.targets;
      if (materialized) {
        state.materialized_->push_back(synth.targets);
        Matrix stacked_design;
        if (opt.fresh_covariates) {
          state.materialized_designs_->push_back(state.design_);
          stacked_design = stack_rows(*state.materialized_designs_);
        } else {
          stacked_design = stack_copies(state.design_, state.materialized_->size());
        }
        state.weights_ = fit_dataset(Dataset(std::move(stacked_design),
                                             stack_vectors(*state.materialized_)),
                                     opt.ridge_lambda);
      } else if (opt.fresh_covariates) {
        Matrix lhs = state.accumulated_gram_;
        if (opt.ridge_lambda) lhs.diagonal().array() += *opt.ridge_lambda;
        Eigen::LLT<Matrix> llt(lhs);
        if (llt.info() != Eigen::Success) throw RankDeficient("accumulated gram is singular");
        state.weights_ = Weights(llt.solve(state.target_sum_));
      } else {
        state.weights_ = Weights(state.solve_stacked(next, state.target_sum_));
      }
      break;
    }
    case Strategy::ReplaceMultiple: {
      if (materialized) {
        state.weights_ = fit_dataset(
            Dataset(stack_copies(state.design_, synth.copies), synth.targets), opt.ridge_lambda);
        state.materialized_ = std::vector<Vector>{synth.targets};
        if (opt.fresh_covariates) state.materialized_designs_ = std::vector<Matrix>{state.design_};
      } else if (synth.copies > 1) {
        state.weights_ = Weights(
            state.solve_stacked(synth.copies, block_xty(state.design_, synth.targets, synth.copies)));
      } else {
        state.weights_ = Weights(state.solve_base(synth.targets));
      }
      break;
    }
  }

  if (state.noise_ledger_) state.noise_ledger_->push_back(std::move(synth.effective_noise));
  state.iteration_ = next;
  return state;
}

Weights theorem1_weights(const Matrix& base_design, std::span<const Vector> noise_ledger,
                         const Weights& true_weights) {
  if (noise_ledger.empty()) throw EmptyInput("noise ledger is empty");
  if (static_cast<std::size_t>(base_design.cols()) != true_weights.size()) {
    throw DimensionMismatch("design columns do not match true weight length");
  }
  Vector weighted = Vector::Zero(base_design.rows());
  for (std::size_t i = 0; i < noise_ledger.size(); ++i) {
    if (noise_ledger[i].size() != base_design.rows()) {
      throw DimensionMismatch("noise vector " + std::to_string(i + 1) + " has length " +
                              std::to_string(noise_ledger[i].size()) + ", expected " +
                              std::to_string(base_design.rows()));
    }
    weighted += noise_ledger[i] / static_cast<double>(i + 1);
  }
  const Weights shift = fit_least_squares(Dataset(base_design, std::move(weighted)));
  return Weights(true_weights.values() + shift.values());
}

TrialResult run_trial(const ExperimentConfig& config, RngStream& rng,
                      const TrialOptions& trial_options) {
  if (config.iterations == 0) throw InvalidArgument("iterations must be >= 1");
  const DataDistribution dist = make_distribution(config);
  LoopOptions options;
  options.mode = config.execution_mode;
  options.fresh_covariates = config.fresh_covariates;
  options.ridge_lambda = config.ridge_lambda;
  options.record_noise = trial_options.record_noise;

  TrialResult result;
  result.strategy = config.strategy;
  result.per_iteration_error.reserve(config.iterations);
  if (trial_options.record_weights) result.per_iteration_weights.emplace();

  LoopState state = start_loop(dist, config.samples_per_iter, options, rng);
  for (std::size_t i = 1;; ++i) {
    result.per_iteration_error.push_back(test_error_exact(state.current_weights(), dist));
    if (result.per_iteration_weights) result.per_iteration_weights->push_back(state.current_weights());
    if (i == config.iterations) break;
    state = step(std::move(state), config.strategy, dist, rng);
  }
  return result;
}

}  // namespace collapse
