#include "collapse/csv.hpp"

#include <charconv>
#include <cmath>

namespace collapse {

std::string format_real(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string curve_csv(const CurveAggregate& agg) {
  std::string out = "iteration,strategy,mean_test_error,stderr,analytic,trials\n";
  const std::string strategy(to_string(agg.strategy));
  const std::string trials = std::to_string(agg.trials);
  for (std::size_t i = 0; i < agg.per_iteration_mean.size(); ++i) {
    out += std::to_string(i + 1) + ',' + strategy + ',' + format_real(agg.per_iteration_mean[i]) +
           ',' + format_real(agg.per_iteration_stderr[i]) + ',';
    if (agg.analytic) out += format_real(agg.analytic->values[i]);
    out += ',' + trials + '\n';
  }
  return out;
}

std::string analytic_csv(const AnalyticCurve& curve) {
  std::string out = "iteration,strategy,analytic,prefactor,basel_bound\n";
  const std::string strategy(to_string(curve.strategy));
  const std::string pre = format_real(curve.prefactor);
  const std::string bound = curve.bound ? format_real(*curve.bound) : std::string();
  for (std::size_t i = 0; i < curve.values.size(); ++i) {
    out += std::to_string(i + 1) + ',' + strategy + ',' + format_real(curve.values[i]) + ',' + pre +
           ',' + bound + '\n';
  }
  return out;
}

std::string deviation_csv(const CurveAggregate& agg, const AnalyticCurve& curve,
                          const DeviationReport& report) {
  std::string out =
      "iteration,mean_test_error,stderr,analytic,sigma_deviation,within_threshold\n";
  for (std::size_t i = 0; i < report.per_iteration_sigma.size(); ++i) {
    const double sigma = report.per_iteration_sigma[i];
    out += std::to_string(i + 1) + ',' + format_real(agg.per_iteration_mean[i]) + ',' +
           format_real(agg.per_iteration_stderr[i]) + ',' + format_real(curve.values[i]) + ',' +
           format_real(sigma) + ',' + (sigma < report.threshold ? "true" : "false") + '\n';
  }
  return out;
}

std::string ngram_csv(std::span<const CurveAggregate> runs) {
  std::string out = "iteration,strategy,mean_cross_entropy,stderr,seeds\n";
  for (const auto& agg : runs) {
    const std::string strategy(to_string(agg.strategy));
    for (std::size_t i = 0; i < agg.per_iteration_mean.size(); ++i) {
      out += std::to_string(i + 1) + ',' + strategy + ',' + format_real(agg.per_iteration_mean[i]) +
             ',' + format_real(agg.per_iteration_stderr[i]) + ',' + std::to_string(agg.trials) + '\n';
    }
  }
  return out;
}

std::string lemma1_csv(const Lemma1Estimate& estimate, const Matrix& expected) {
  std::string out = "quantity,monte_carlo,closed_form,abs_error,rel_error\n";
  auto row = [&](const std::string& name, double mc, double exact) {
    const double abs_err = std::abs(mc - exact);
    out += name + ',' + format_real(mc) + ',' + format_real(exact) + ',' + format_real(abs_err) +
           ',' + (exact != 0.0 ? format_real(abs_err / std::abs(exact)) : std::string()) + '\n';
  };
  row("trace", estimate.trace_mean, expected.trace());
  out += "trace_stderr," + format_real(estimate.trace_stderr) + ",,,\n";
  for (Eigen::Index i = 0; i < expected.rows(); ++i) {
    for (Eigen::Index j = 0; j < expected.cols(); ++j) {
      row("entry_" + std::to_string(i) + '_' + std::to_string(j), estimate.mean_inverse(i, j),
          expected(i, j));
    }
  }
  return out;
}

}  // namespace collapse
