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

#include "rankmini/eval.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace rankmini {

double EvalReport::overall_srocc() const {
  if (datasets.empty()) return 0.0;
  double s = 0.0;
  for (const auto& d : datasets) s += d.srocc;
  return s / static_cast<double>(datasets.size());
}

DatasetEval evaluate_scores(std::string dataset, std::vector<double> predictions, std::vector<double> truth) {
  DatasetEval d;
  d.dataset = std::move(dataset);
  d.srocc = stats::srocc(predictions, truth);
  d.fit = stats::logistic_fit(predictions, truth);
  d.residual_variance = stats::sample_variance(d.fit.residuals);
  d.predictions = std::move(predictions);
  d.truth = std::move(truth);
  return d;
}

EvalReport evaluate_model(const std::string& name, const NetworkSpec& spec, const ParameterSet<float>& params,
                          const std::vector<data::EvalSet>& sets) {
  if (sets.empty()) throw std::invalid_argument("no evaluation datasets given");
  EvalReport report;
  report.model = name;
  report.params = count_params(params);
  report.nonzero = count_params(params, true);
  report.flops = count_flops(spec);
  for (const auto& set : sets) {
    if (set.items.empty()) throw std::invalid_argument("evaluation dataset '" + set.name + "' is empty");
    const auto locations = grid_patches(set.frames, set.height, set.width, spec.input);
    std::vector<double> pred(set.items.size()), truth(set.items.size());
    const auto n = static_cast<std::ptrdiff_t>(set.items.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto& item = set.items[static_cast<std::size_t>(i)];
      pred[static_cast<std::size_t>(i)] = sequence_quality(spec, params, item.ref, item.dist, locations);
    }
    for (std::size_t i = 0; i < set.items.size(); ++i) truth[i] = set.items[i].mos;
    report.datasets.push_back(evaluate_scores(set.name, std::move(pred), std::move(truth)));
  }
  return report;
}

Comparison compare_models(const EvalReport& a, const EvalReport& b) {
  if (a.datasets.size() != b.datasets.size()) throw std::invalid_argument("reports cover different dataset counts");
  Comparison c;
  c.model_a = a.model;
  c.model_b = b.model;
  for (std::size_t i = 0; i < a.datasets.size(); ++i) {
    const auto& da = a.datasets[i];
    const auto& db = b.datasets[i];
    if (da.dataset != db.dataset || da.truth != db.truth)
      throw std::invalid_argument("dataset mismatch: '" + da.dataset + "' vs '" + db.dataset + "'");
    c.datasets.push_back({da.dataset, da.srocc, db.srocc, stats::f_test(da.fit.residuals, db.fit.residuals)});
  }
  c.overall_a = a.overall_srocc();
  c.overall_b = b.overall_srocc();
  c.params_a = a.params;
  c.params_b = b.params;
  c.flops_a = a.flops;
  c.flops_b = b.flops;
  c.params_ratio = b.params ? static_cast<double>(a.params) / static_cast<double>(b.params) : 0.0;
  c.flops_ratio = b.flops ? static_cast<double>(a.flops) / static_cast<double>(b.flops) : 0.0;
  c.srocc_retention = c.overall_b != 0.0 ? c.overall_a / c.overall_b : 0.0;
  return c;
}

std::string format_percent(double ratio, int decimals) {
  const double scale = std::pow(10.0, decimals);
  // the small bias keeps exact decimal ratios (0.5 -> 50.00) from flooring one step down
  const double v = std::floor(ratio * 100.0 * scale + 1e-9) / scale;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f%%", decimals, v);
  return buf;
}

std::string format_reports_csv(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out.precision(10);
  out << "model,dataset,items,srocc,fit,b1,b2,b3,b4,residual_variance,params,nonzero,flops\n";
  for (const auto& r : reports)
    for (const auto& d : r.datasets)
      out << r.model << ',' << d.dataset << ',' << d.truth.size() << ',' << d.srocc << ','
          << (d.fit.linear_fallback ? "linear" : "logistic") << ',' << d.fit.b[0] << ',' << d.fit.b[1] << ','
          << d.fit.b[2] << ',' << d.fit.b[3] << ',' << d.residual_variance << ',' << r.params << ',' << r.nonzero
          << ',' << r.flops << '\n';
  return out.str();
}

std::string format_comparison_csv(const Comparison& c) {
  std::ostringstream out;
  out.precision(10);
  out << "dataset,srocc_" << c.model_a << ",srocc_" << c.model_b << ",f_statistic,p_value,critical,verdict\n";
  for (const auto& d : c.datasets)
    out << d.dataset << ',' << d.srocc_a << ',' << d.srocc_b << ',' << d.f.statistic << ',' << d.f.p_value << ','
        << d.f.critical << ',' << d.f.verdict << '\n';
  out << "overall," << c.overall_a << ',' << c.overall_b << ",,,,\n";
  out << "# params " << c.params_a << '/' << c.params_b << " ratio " << c.params_ratio << '\n';
  out << "# flops " << c.flops_a << '/' << c.flops_b << " ratio " << c.flops_ratio << '\n';
  out << "# srocc_retention " << c.srocc_retention << '\n';
  return out.str();
}

std::string format_table(const std::vector<EvalReport>& reports) {
  if (reports.empty()) return {};
  const auto& ref = reports.front();
  std::vector<std::string> header{"model"};
  for (const auto& d : ref.datasets) header.push_back(d.dataset);
  header.push_back("overall");

  std::vector<std::vector<std::string>> rows;
  char buf[64];
  for (const auto& r : reports) {
    const Comparison c = compare_models(r, ref);
    std::vector<std::string> row{r.model};
    for (const auto& d : c.datasets) {
      std::snprintf(buf, sizeof buf, "%.4f(%d)", d.srocc_a, d.f.verdict);
      row.push_back(buf);
    }
    std::snprintf(buf, sizeof buf, "%.4f", c.overall_a);
    row.push_back(buf);
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t j = 0; j < header.size(); ++j) {
    width[j] = header[j].size();
    for (const auto& row : rows) width[j] = std::max(width[j], row[j].size());
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t j = 0; j < cells.size(); ++j) {
      out << cells[j] << std::string(width[j] - cells[j].size(), ' ');
      out << (j + 1 < cells.size() ? "  " : "\n");
    }
  };
  emit(header);
  for (const auto& row : rows) emit(row);
  out << "cells: SROCC(F-test vs " << ref.model << " at 95%: +1 better, 0 same, -1 worse)\n";
  return out.str();
}

std::string format_retention(const Comparison& c) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "params retained: %s (%zu / %zu, ratio %.6f)\n", format_percent(c.params_ratio).c_str(),
                c.params_a, c.params_b, c.params_ratio);
  out << buf;
  std::snprintf(buf, sizeof buf, "FLOPs retained:  %s (%llu / %llu, ratio %.6f)\n", format_percent(c.flops_ratio).c_str(),
                static_cast<unsigned long long>(c.flops_a), static_cast<unsigned long long>(c.flops_b), c.flops_ratio);
  out << buf;
  std::snprintf(buf, sizeof buf, "SROCC retained:  %s (%.4f / %.4f)\n", format_percent(c.srocc_retention, 0).c_str(),
                c.overall_a, c.overall_b);
  out << buf;
  return out.str();
}

}  // namespace rankmini
