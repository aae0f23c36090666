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

#include "rankmini/stats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rankmini::stats {

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = mean_rank;
    i = j + 1;
  }
  return r;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("pearson: need at least 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("correlation undefined for a constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double srocc(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("srocc: length mismatch");
  if (pred.size() < 3) throw std::invalid_argument("srocc: need at least 3 points");
  const auto rp = average_ranks(pred);
  const auto rt = average_ranks(truth);
  return pearson(rp, rt);
}

double logistic4(const std::array<double, 4>& b, double x) {
  return b[0] * (0.5 - 1.0 / (1.0 + std::exp(b[1] * (x - b[2])))) + b[3];
}

double LogisticFit::map(double x) const { return linear_fallback ? b[0] + b[1] * x : logistic4(b, x); }

std::array<double, 2> linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit: need matching vectors, n >= 2");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  return {my - slope * mx, slope};
}

namespace {

double sse_of(const std::array<double, 4>& b, std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - logistic4(b, x[i]);
    s += r * r;
  }
  return s;
}

struct LmResult {
  std::array<double, 4> b;
  bool converged = false;
  int iterations = 0;
  std::vector<double> history;
};

LmResult levenberg_marquardt(std::array<double, 4> b, std::span<const double> x, std::span<const double> y,
                             int max_iterations) {
  LmResult out;
  double sse = sse_of(b, x, y);
  out.history.push_back(sse);
  double mu = 1e-3;
  const std::size_t n = x.size();
  Eigen::MatrixXd J(n, 4);
  Eigen::VectorXd r(n);
  for (int it = 0; it < max_iterations; ++it) {
    out.iterations = it + 1;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = std::exp(b[1] * (x[i] - b[2]));
      const double s = 1.0 / (1.0 + e);
      // ds/dz = -s(1 - s); q = b1 (1/2 - s) + b4
      const double ds = -s * (1.0 - s);
      r(static_cast<Eigen::Index>(i)) = y[i] - (b[0] * (0.5 - s) + b[3]);
      J(static_cast<Eigen::Index>(i), 0) = 0.5 - s;
      J(static_cast<Eigen::Index>(i), 1) = -b[0] * ds * (x[i] - b[2]);
      J(static_cast<Eigen::Index>(i), 2) = b[0] * ds * b[1];
      J(static_cast<Eigen::Index>(i), 3) = 1.0;
    }
    const Eigen::Matrix4d JtJ = J.transpose() * J;
    const Eigen::Vector4d Jtr = J.transpose() * r;
    if (Jtr.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + sse)) {
      out.converged = true;
      break;
    }
    bool accepted = false;
    while (mu < 1e16) {
      Eigen::Matrix4d A = JtJ;
      for (int k = 0; k < 4; ++k) A(k, k) += mu * std::max(JtJ(k, k), 1e-12);
      const Eigen::Vector4d step = A.ldlt().solve(Jtr);
      std::array<double, 4> trial{b[0] + step(0), b[1] + step(1), b[2] + step(2), b[3] + step(3)};
      const double trial_sse = sse_of(trial, x, y);
      if (std::isfinite(trial_sse) && trial_sse < sse) {
        const double gain = sse - trial_sse;
        b = trial;
        sse = trial_sse;
        out.history.push_back(sse);
        mu = std::max(mu / 3.0, 1e-12);
        accepted = true;
        if (gain <= 1e-15 * (sse + 1e-300) || sse < 1e-28) out.converged = true;
        break;
      }
      mu *= 4.0;
    }
    if (!accepted) {
      // no descent direction left at any damping: a stationary point
      out.converged = true;
      break;
    }
    if (out.converged) break;
  }
  out.b = b;
  return out;
}

}  // namespace

LogisticFit logistic_fit(std::span<const double> pred, std::span<const double> truth, int max_iterations) {
  if (pred.size() != truth.size()) throw std::invalid_argument("logistic_fit: length mismatch");
  if (pred.size() < 5) throw std::invalid_argument("logistic_fit: need at least 5 points");
  const auto [ymin, ymax] = std::minmax_element(truth.begin(), truth.end());
  if (*ymin == *ymax) throw std::invalid_argument("logistic_fit: constant ground truth");
  const auto [xmin, xmax] = std::minmax_element(pred.begin(), pred.end());
  const double xrange = *xmax - *xmin;

  std::vector<double> xs(pred.begin(), pred.end());
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(xs.size() / 2), xs.end());
  const double xmed = xs[xs.size() / 2];
  const auto line = linear_fit(pred, truth);

  std::vector<LmResult> runs;
  if (xrange > 0.0) {
    // data-range guess: asymptotes at the truth extremes, slope matched to the line at the median
    const double b1 = *ymax - *ymin;
    double b2 = 4.0 * line[1] / b1;
    if (b2 == 0.0) b2 = 1e-3 / xrange;
    runs.push_back(levenberg_marquardt({b1, b2, xmed, 0.5 * (*ymax + *ymin)}, pred, truth, max_iterations));
    // near-linear guess reproducing the least-squares line to O((b2 x)^3)
    const double t = 1e-4 / xrange;
    const double slope = line[1] != 0.0 ? line[1] : 1e-12;
    const double k1 = 4.0 * slope / t;
    runs.push_back(levenberg_marquardt({k1, t, xmed, line[0] + slope * xmed}, pred, truth, max_iterations));
  }

  LogisticFit fit;
  const LmResult* best = nullptr;
  for (const auto& r : runs)
    if (r.converged && (!best || r.history.back() < best->history.back())) best = &r;
  if (best) {
    fit.b = best->b;
    fit.iterations = best->iterations;
    fit.sse_history = best->history;
  } else {
    fit.linear_fallback = true;
    fit.b = {line[0], line[1], 0.0, 0.0};
    fit.iterations = runs.empty() ? 0 : runs.front().iterations;
  }
  fit.residuals.resize(pred.size());
  fit.sse = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    fit.residuals[i] = truth[i] - fit.map(pred[i]);
    fit.sse += fit.residuals[i] * fit.residuals[i];
  }
  return fit;
}

namespace {

double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("incomplete beta: continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("incomplete beta: x outside [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  // the fraction converges fast for x below the mean; use the symmetry otherwise
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double f_cdf(double x, double d1, double d2) {
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return incomplete_beta(0.5 * d1, 0.5 * d2, d1 * x / (d1 * x + d2));
}

double f_quantile(double q, double d1, double d2) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("f_quantile: q outside (0, 1)");
  double lo = 0.0, hi = 1.0;
  while (f_cdf(hi, d1, d2) < q) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f_cdf(mid, d1, d2) < q ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) throw std::invalid_argument("sample variance needs at least 2 values");
  const double n = static_cast<double>(x.size());
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / (n - 1.0);
}

FTestResult f_test(std::span<const double> residuals_a, std::span<const double> residuals_b, double confidence) {
  if (residuals_a.size() < 3 || residuals_b.size() < 3)
    throw std::invalid_argument("f_test: need at least 3 residuals per model");
  if (!(confidence > 0.0 && confidence < 1.0)) throw std::invalid_argument("f_test: confidence outside (0, 1)");
  FTestResult r;
  r.df_a = residuals_a.size() - 1;
  r.df_b = residuals_b.size() - 1;
  const double va = sample_variance(residuals_a);
  const double vb = sample_variance(residuals_b);
  if (va == vb) {
    r.statistic = 1.0;
  } else if (vb == 0.0) {
    r.statistic = std::numeric_limits<double>::infinity();
  } else {
    r.statistic = va / vb;
  }
  const bool a_larger = va > vb;
  const double ratio = a_larger ? r.statistic : 1.0 / r.statistic;
  const double dn = static_cast<double>(a_larger ? r.df_a : r.df_b);
  const double dd = static_cast<double>(a_larger ? r.df_b : r.df_a);
  const double alpha = 1.0 - confidence;
  r.critical = f_quantile(1.0 - 0.5 * alpha, dn, dd);
  r.p_value = std::min(1.0, 2.0 * (1.0 - f_cdf(ratio, dn, dd)));
  if (ratio > r.critical) r.verdict = a_larger ? -1 : +1;
  return r;
}

}  // namespace rankmini::stats
