// Copyright 2026 The rankmini Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <span>
#include <vector>

namespace rankmini::stats {

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> x);

/// Throws std::invalid_argument on length mismatch, n < 2, or a constant vector.
double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of average ranks. Needs n >= 3 and non-constant inputs.
double srocc(std::span<const double> pred, std::span<const double> truth);

/// q(x) = b1 * (1/2 - 1 / (1 + exp(b2 * (x - b3)))) + b4
double logistic4(const std::array<double, 4>& b, double x);

struct LogisticFit {
  std::array<double, 4> b{};
  /// Set when the damped iteration did not converge; the mapping is then
  /// truth ~ b[0] + b[1] * pred (slope in b[1]).
  bool linear_fallback = false;
  int iterations = 0;
  double sse = 0.0;
  std::vector<double> residuals;    // truth - mapped(pred)
  std::vector<double> sse_history;  // SSE after every accepted step, starting with the initial guess

  double map(double x) const;
};

/// Least-squares line; returns {intercept, slope}.
std::array<double, 2> linear_fit(std::span<const double> x, std::span<const double> y);

/// Levenberg-Marquardt fit of logistic4, started from a data-range guess and
/// from a near-linear guess; the lower SSE wins. Needs n >= 5 and
/// non-constant truth.
LogisticFit logistic_fit(std::span<const double> pred, std::span<const double> truth, int max_iterations = 500);

/// Regularized incomplete beta I_x(a, b), continued fraction (modified Lentz).
double incomplete_beta(double a, double b, double x);

/// CDF of the F distribution with (d1, d2) degrees of freedom.
double f_cdf(double x, double d1, double d2);

/// Quantile of the F distribution by bisection on f_cdf.
double f_quantile(double q, double d1, double d2);

struct FTestResult {
  double statistic = 1.0;  // var_a / var_b
  int verdict = 0;         // +1: a has significantly smaller variance, -1: larger, 0: not significant
  double p_value = 1.0;    // two-sided
  double critical = 0.0;   // upper critical value for the larger-over-smaller ratio
  std::size_t df_a = 0;
  std::size_t df_b = 0;
};

/// Sample variance with n - 1 degrees of freedom.
double sample_variance(std::span<const double> x);

/// Two-sided variance-ratio test. Throws on fewer than 3 residuals.
FTestResult f_test(std::span<const double> residuals_a, std::span<const double> residuals_b,
                   double confidence = 0.95);

}  // namespace rankmini::stats
