#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "rankmini/eval.hpp"

using namespace rankmini;

namespace {

std::vector<double> pseudo_mos(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> jitter(-0.2, 0.2);
  std::vector<double> mos;
  for (std::size_t i = 0; i < n; ++i) mos.push_back(6.0 - double(1 + i % 6) + jitter(gen));
  return mos;
}

EvalReport report_from(const std::string& model, const std::vector<std::vector<double>>& preds,
                       const std::vector<std::vector<double>>& truths, std::size_t params) {
  EvalReport r;
  r.model = model;
  r.params = params;
  r.flops = params * 10;
  for (std::size_t i = 0; i < preds.size(); ++i)
    r.datasets.push_back(evaluate_scores("set" + std::to_string(i), preds[i], truths[i]));
  return r;
}

}  // namespace

TEST(EvalScores, OracleAndAntiOracle) {
  const auto mos = pseudo_mos(48, 1);
  std::vector<double> neg;
  for (double m : mos) neg.push_back(-m);
  EXPECT_DOUBLE_EQ(evaluate_scores("a", mos, mos).srocc, 1.0);
  EXPECT_DOUBLE_EQ(evaluate_scores("a", neg, mos).srocc, -1.0);
}

TEST(EvalScores, ResidualVarianceMatchesFit) {
  const auto mos = pseudo_mos(60, 2);
  std::mt19937_64 gen(4);
  std::normal_distribution<double> noise(0.0, 0.5);
  std::vector<double> pred;
  for (double m : mos) pred.push_back(0.3 * m + noise(gen));
  const auto d = evaluate_scores("x", pred, mos);
  EXPECT_EQ(d.fit.residuals.size(), mos.size());
  EXPECT_NEAR(d.residual_variance, stats::sample_variance(d.fit.residuals), 1e-12);
  EXPECT_GT(d.srocc, 0.5);
  EXPECT_LT(d.srocc, 1.0);
}

TEST(Compare, SelfComparisonIsNeutral) {
  const auto mos = pseudo_mos(36, 3);
  std::vector<double> pred;
  for (std::size_t i = 0; i < mos.size(); ++i) pred.push_back(mos[i] + 0.3 * std::sin(double(i)));
  const auto r = report_from("m", {pred, pred}, {mos, mos}, 1000);
  const auto c = compare_models(r, r);
  EXPECT_DOUBLE_EQ(c.params_ratio, 1.0);
  EXPECT_DOUBLE_EQ(c.flops_ratio, 1.0);
  EXPECT_DOUBLE_EQ(c.srocc_retention, 1.0);
  for (const auto& d : c.datasets) EXPECT_EQ(d.f.verdict, 0);
}

TEST(Compare, RatiosAndMismatch) {
  const auto mos = pseudo_mos(36, 5);
  std::vector<double> noisy;
  for (std::size_t i = 0; i < mos.size(); ++i) noisy.push_back(mos[i] + 1.5 * std::sin(7.0 * double(i)));
  const auto ref = report_from("teacher", {mos}, {mos}, 1000);
  const auto cand = report_from("student", {noisy}, {mos}, 250);
  const auto c = compare_models(cand, ref);
  EXPECT_DOUBLE_EQ(c.params_ratio, 0.25);
  EXPECT_DOUBLE_EQ(c.srocc_retention, cand.overall_srocc() / ref.overall_srocc());
  EXPECT_EQ(c.datasets[0].f.verdict, -1);

  auto other = cand;
  other.datasets[0].dataset = "elsewhere";
  EXPECT_THROW(compare_models(other, ref), std::invalid_argument);
}

TEST(Compare, OverallIsMeanOfDatasets) {
  const auto m1 = pseudo_mos(30, 6);
  const auto m2 = pseudo_mos(30, 7);
  std::vector<double> p2;
  for (std::size_t i = 0; i < m2.size(); ++i) p2.push_back(i % 5 == 0 ? -m2[i] : m2[i]);
  const auto r = report_from("m", {m1, p2}, {m1, m2}, 10);
  EXPECT_NEAR(r.overall_srocc(), 0.5 * (r.datasets[0].srocc + r.datasets[1].srocc), 1e-15);
}

TEST(Formatting, PercentTruncates) {
  EXPECT_EQ(format_percent(0.0987), "9.87%");
  EXPECT_EQ(format_percent(0.135775), "13.57%");
  EXPECT_EQ(format_percent(0.5), "50.00%");
  EXPECT_EQ(format_percent(1.0), "100.00%");
  EXPECT_EQ(format_percent(0.9349, 0), "93%");
}

TEST(Formatting, TableAndCsvShapes) {
  const auto mos = pseudo_mos(24, 9);
  const auto a = report_from("teacher", {mos, mos}, {mos, mos}, 100);
  const auto b = report_from("student", {mos, mos}, {mos, mos}, 30);
  const auto table = format_table({a, b});
  EXPECT_NE(table.find("1.0000(0)"), std::string::npos);
  EXPECT_NE(table.find("set1"), std::string::npos);

  const auto csv = format_reports_csv({a, b});
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_EQ(csv.rfind("model,dataset,", 0), 0u);

  const auto ret = format_retention(compare_models(b, a));
  EXPECT_NE(ret.find("params retained: 30.00%"), std::string::npos);
  EXPECT_NE(ret.find("SROCC retained:  100%"), std::string::npos);
}

TEST(EvalModel, ScoresEveryItem) {
  TeacherConfig cfg;
  cfg.geometry = {1, 8, 8};
  cfg.widths = {4, 4};
  cfg.head_width = 4;
  cfg.seed = 3;
  const auto m = build_teacher<float>(cfg);
  data::EvalOptions opt;
  opt.sources = 3;
  opt.frames = 1;
  const std::vector<data::EvalSet> sets{data::make_eval_set(data::DistortionKind::GaussianBlur, opt)};
  const auto r = evaluate_model("t", m.spec, m.params, sets);
  ASSERT_EQ(r.datasets.size(), 1u);
  EXPECT_EQ(r.datasets[0].predictions.size(), 18u);
  EXPECT_EQ(r.params, count_params(m.params));
  EXPECT_EQ(r.flops, count_flops(m.spec));
  const auto locs = grid_patches(1, sets[0].height, sets[0].width, cfg.geometry);
  for (std::size_t i = 0; i < 18; ++i)
    EXPECT_NEAR(r.datasets[0].predictions[i],
                sequence_quality(m.spec, m.params, sets[0].items[i].ref, sets[0].items[i].dist, locs), 1e-9);
  EXPECT_THROW(evaluate_model("t", m.spec, m.params, {}), std::invalid_argument);
}
