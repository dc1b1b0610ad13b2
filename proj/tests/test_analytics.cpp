#include <cmath>
#include <numbers>

#include "collapse/analytics.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace collapse;

TEST_CASE("prefactor") {
  CHECK(prefactor(1.0, 10, 100) == doctest::Approx(10.0 / 89.0));
  CHECK(prefactor(1.0, 10, 100) == doctest::Approx(0.11236).epsilon(1e-5));
  CHECK(prefactor(0.0, 4, 20) == 0.0);
  CHECK(prefactor(2.0, 1, 3) == doctest::Approx(4.0));
  CHECK_THROWS_AS(prefactor(1.0, 10, 11), TooFewSamples);
  CHECK_NOTHROW(prefactor(1.0, 10, 12));
}

TEST_CASE("analytic_curve: values at n=5 against exact fractions") {
  const double p = 10.0 / 89.0;
  const auto s2 = oracle::inverse_square_sum(5);
  const auto h = oracle::harmonic(5);
  CHECK(s2.num == 5269);
  CHECK(s2.den == 3600);
  CHECK(h.num == 137);
  CHECK(h.den == 60);

  const auto rep = analytic_curve(Strategy::Replace, 1.0, 10, 100, 5);
  const auto acc = analytic_curve(Strategy::Accumulate, 1.0, 10, 100, 5);
  const auto rm = analytic_curve(Strategy::ReplaceMultiple, 1.0, 10, 100, 5);
  CHECK(rep.values[4] == doctest::Approx(50.0 / 89.0).epsilon(1e-14));
  CHECK(rep.values[4] == doctest::Approx(0.56180).epsilon(1e-5));
  CHECK(acc.values[4] == doctest::Approx(p * s2.value()).epsilon(1e-14));
  CHECK(acc.values[4] == doctest::Approx(0.16445).epsilon(1e-5));
  CHECK(rm.values[4] == doctest::Approx(p * h.value()).epsilon(1e-14));
  CHECK(rm.values[4] == doctest::Approx(0.25655).epsilon(1e-5));

  CHECK(acc.bound.has_value());
  CHECK_FALSE(rep.bound.has_value());
  CHECK_FALSE(rm.bound.has_value());
  for (const auto* c : {&rep, &acc, &rm}) CHECK(c->values[0] == doctest::Approx(p).epsilon(1e-15));
}

TEST_CASE("analytic_curve: n=10 targets") {
  const double p = 10.0 / 89.0;
  CHECK(analytic_curve(Strategy::Replace, 1.0, 10, 100, 10).values[9] ==
        doctest::Approx(1.12360).epsilon(1e-5));
  CHECK(analytic_curve(Strategy::Accumulate, 1.0, 10, 100, 10).values[9] ==
        doctest::Approx(p * oracle::inverse_square_sum(10).value()).epsilon(1e-14));
  CHECK(oracle::inverse_square_sum(10).value() == doctest::Approx(1.549768).epsilon(1e-6));
  CHECK(analytic_curve(Strategy::ReplaceMultiple, 1.0, 10, 100, 10).values[9] ==
        doctest::Approx(0.32910).epsilon(1e-5));
  CHECK_THROWS_AS(analytic_curve(Strategy::Replace, 1.0, 10, 11, 3), TooFewSamples);
  CHECK_THROWS_AS(analytic_curve(Strategy::Replace, 1.0, 10, 100, 0), InvalidArgument);
}

TEST_CASE("curve recurrences, ordering and Cauchy property") {
  const std::size_t n = 2000;
  for (double sigma : {0.5, 1.0, 3.0}) {
    const auto rep = analytic_curve(Strategy::Replace, sigma, 7, 40, n);
    const auto acc = analytic_curve(Strategy::Accumulate, sigma, 7, 40, n);
    const auto rm = analytic_curve(Strategy::ReplaceMultiple, sigma, 7, 40, n);
    const double p = rep.prefactor;
    for (std::size_t i = 1; i < n; ++i) {
      const double k = static_cast<double>(i + 1);
      CHECK(std::abs((rep.values[i] - rep.values[i - 1]) - p) <= 1e-12 * rep.values[i]);
      CHECK(std::abs((acc.values[i] - acc.values[i - 1]) - p / (k * k)) <= 1e-12 * acc.values[i]);
      CHECK(std::abs((rm.values[i] - rm.values[i - 1]) - p / k) <= 1e-12 * rm.values[i]);
      CHECK(acc.values[i] < rm.values[i]);
      CHECK(rm.values[i] < rep.values[i]);
      CHECK(acc.values[i] >= acc.values[i - 1]);
      CHECK(acc.values[i] < *acc.bound);
    }
    for (std::size_t m = 1; 2 * m <= n; ++m) {
      CHECK(acc.values[2 * m - 1] - acc.values[m - 1] < p / static_cast<double>(m));
    }
  }
}

TEST_CASE("basel_bound") {
  CHECK(basel_bound(1.0, 10, 100) == doctest::Approx(0.18482).epsilon(1e-5));
  CHECK(basel_bound(1.0, 10, 100) ==
        doctest::Approx(10.0 / 89.0 * std::numbers::pi * std::numbers::pi / 6.0).epsilon(1e-15));
  CHECK(basel_bound(0.0, 3, 10) == 0.0);
  CHECK_THROWS_AS(basel_bound(1.0, 3, 4), TooFewSamples);

  const auto acc = analytic_curve(Strategy::Accumulate, 1.0, 10, 100, 1000000);
  for (std::size_t i = 0; i < acc.values.size(); ++i) {
    if (!(acc.values[i] < *acc.bound)) {
      FAIL("bound not strict at n = " << i + 1);
    }
  }
}

TEST_CASE("lemma1_expected_trace") {
  CHECK(lemma1_expected_trace(2, 10) == doctest::Approx(2.0 / 7.0));
  CHECK(lemma1_expected_trace(2, 10) == doctest::Approx(0.28571).epsilon(1e-5));
  CHECK(lemma1_expected_trace(1, 4) == 0.5);
  CHECK_THROWS_AS(lemma1_expected_trace(2, 3), TooFewSamples);

  Matrix s(1, 1);
  s << 4.0;
  CHECK(lemma1_expected_inverse(make_covariance(FullCov{s}), 4)(0, 0) == doctest::Approx(0.125));
}

TEST_CASE("lemma1_mc_estimate") {
  const auto eye = make_covariance(IsotropicCov{2});
  const RngStream rng(17, 0);
  const auto est = lemma1_mc_estimate(2, 10, eye, 100000, rng);
  CHECK(std::abs(est.trace_mean / (2.0 / 7.0) - 1.0) < 0.02);
  CHECK(est.trials == 100000);

  Matrix s(1, 1);
  s << 4.0;
  const auto one = lemma1_mc_estimate(1, 4, make_covariance(FullCov{s}), 100000, rng);
  CHECK(std::abs(one.mean_inverse(0, 0) / 0.125 - 1.0) < 0.02);

  // A single trial is exactly the inverse Gram of the first design.
  const auto single = lemma1_mc_estimate(2, 10, eye, 1, rng);
  RngStream first = rng.split(0);
  const DataDistribution dist(eye, Weights(Vector::Zero(2)), 0.0);
  const Matrix x = sample_design(dist, 10, first);
  CHECK(single.mean_inverse == inverse_gram(x));
  const Matrix direct = (x.transpose() * x).inverse();
  CHECK((single.mean_inverse - direct).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(lemma1_mc_estimate(2, 3, eye, 10, rng), TooFewSamples);
  CHECK_THROWS_AS(lemma1_mc_estimate(2, 10, eye, 0, rng), InvalidArgument);
}

TEST_CASE("lemma1_mc_estimate is thread-count independent and converges") {
  const auto eye = make_covariance(IsotropicCov{2});
  const RngStream rng(18, 0);
  const auto a = lemma1_mc_estimate(2, 10, eye, 5000, rng, 1);
  const auto b = lemma1_mc_estimate(2, 10, eye, 5000, rng, 4);
  CHECK(a.mean_inverse == b.mean_inverse);
  CHECK(a.trace_stderr == b.trace_stderr);

  const auto small = lemma1_mc_estimate(2, 10, eye, 100000, rng);
  const auto large = lemma1_mc_estimate(2, 10, eye, 200000, rng);
  CHECK(std::abs(large.trace_mean - small.trace_mean) < 4.0 * small.trace_stderr);
}
