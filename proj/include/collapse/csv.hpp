#pragma once

#include <span>
#include <string>

#include "collapse/analytics.hpp"
#include "collapse/montecarlo.hpp"

namespace collapse {

// Locale-independent, 17 significant digits.
std::string format_real(double x);

// iteration,strategy,mean_test_error,stderr,analytic,trials
std::string curve_csv(const CurveAggregate& agg);

// iteration,strategy,analytic,prefactor,basel_bound
std::string analytic_csv(const AnalyticCurve& curve);

// iteration,mean_test_error,stderr,analytic,sigma_deviation,within_threshold
std::string deviation_csv(const CurveAggregate& agg, const AnalyticCurve& curve,
                          const DeviationReport& report);

// iteration,strategy,mean_cross_entropy,stderr,seeds
std::string ngram_csv(std::span<const CurveAggregate> runs);

// quantity,monte_carlo,closed_form,abs_error,rel_error
std::string lemma1_csv(const Lemma1Estimate& estimate, const Matrix& expected);

}  // namespace collapse
