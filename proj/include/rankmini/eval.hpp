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

#include <string>
#include <vector>

#include "rankmini/data.hpp"
#include "rankmini/network.hpp"
#include "rankmini/stats.hpp"

namespace rankmini {

struct DatasetEval {
  std::string dataset;
  double srocc = 0.0;
  stats::LogisticFit fit;
  double residual_variance = 0.0;
  std::vector<double> predictions;
  std::vector<double> truth;
};

struct EvalReport {
  std::string model;
  std::size_t params = 0;
  std::size_t nonzero = 0;
  std::uint64_t flops = 0;
  std::vector<DatasetEval> datasets;

  /// Mean of the per-dataset SROCC values.
  double overall_srocc() const;
};

/// SROCC and logistic-regression residuals of one prediction vector.
DatasetEval evaluate_scores(std::string dataset, std::vector<double> predictions, std::vector<double> truth);

/// Predicts sequence_quality for every item (all frames, non-overlapping
/// patches) and scores it against the pseudo-MOS. Throws on an empty set.
EvalReport evaluate_model(const std::string& name, const NetworkSpec& spec, const ParameterSet<float>& params,
                          const std::vector<data::EvalSet>& sets);

struct DatasetComparison {
  std::string dataset;
  double srocc_a = 0.0;
  double srocc_b = 0.0;
  stats::FTestResult f;  // a against b
};

struct Comparison {
  std::string model_a;  // candidate
  std::string model_b;  // reference
  std::vector<DatasetComparison> datasets;
  double overall_a = 0.0;
  double overall_b = 0.0;
  std::size_t params_a = 0, params_b = 0;
  std::uint64_t flops_a = 0, flops_b = 0;
  double params_ratio = 1.0;
  double flops_ratio = 1.0;
  double srocc_retention = 1.0;
};

/// Throws std::invalid_argument when the reports cover different datasets.
Comparison compare_models(const EvalReport& candidate, const EvalReport& reference);

/// Ratio as a percentage truncated to `decimals` places, e.g. 0.135775 -> "13.57%".
std::string format_percent(double ratio, int decimals = 2);

/// One row per (model, dataset): SROCC, regression parameters, residual variance, counts.
std::string format_reports_csv(const std::vector<EvalReport>& reports);

/// One row per dataset with both SROCCs, F statistic and verdict, then the ratios.
std::string format_comparison_csv(const Comparison& c);

/// Aligned text: rows are models, cells "x(y)" with SROCC x and the F-test
/// verdict y of that model against the reference (first report).
std::string format_table(const std::vector<EvalReport>& reports);

/// Retention summary lines for a candidate against a reference.
std::string format_retention(const Comparison& c);

}  // namespace rankmini
