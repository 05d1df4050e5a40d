#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "slc/data.hpp"
#include "slc/errors.hpp"
#include "slc/network.hpp"
#include "slc/slc_eval.hpp"
#include "test_support.hpp"

namespace slc {
namespace {

struct Sweep {
  double auprc = 0.0;
  double p_at_090 = 0.0;
  double p_at_099 = 0.0;
};

// Quadratic sweep: for each distinct score T (descending), count the
// examples with score >= T directly.
Sweep brute_force_sweep(const std::vector<double>& scores, const std::vector<bool>& labels) {
  std::set<double, std::greater<>> thresholds(scores.begin(), scores.end());
  double positives = 0;
  for (bool l : labels) positives += l;
  Sweep out;
  double prev_recall = 0.0;
  bool found90 = false, found99 = false;
  for (double t : thresholds) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
      if (scores[i] >= t) (labels[i] ? tp : fp) += 1;
    const double precision = tp / (tp + fp), recall = tp / positives;
    out.auprc += (recall - prev_recall) * precision;
    prev_recall = recall;
    if (!found90 && tp >= std::ceil(0.9 * positives - 1e-9)) {
      out.p_at_090 = precision;
      found90 = true;
    }
    if (!found99 && tp >= std::ceil(0.99 * positives - 1e-9)) {
      out.p_at_099 = precision;
      found99 = true;
    }
  }
  return out;
}

PRCurve curve_of(const std::vector<double>& s, const std::vector<bool>& l) {
  auto labels = std::make_unique<bool[]>(l.size());
  std::copy(l.begin(), l.end(), labels.get());
  return pr_curve(s, {labels.get(), l.size()});
}

TEST(PrCurve, WorkedExample) {
  const auto c = curve_of({0.9, 0.8, 0.7, 0.6}, {true, false, true, false});
  EXPECT_NEAR(auprc(c), 5.0 / 6.0, 1e-12);
  EXPECT_NEAR(auprc(c), 0.8333, 1e-4);
  EXPECT_NEAR(precision_at_recall(c, 0.9), 2.0 / 3.0, 1e-12);
  EXPECT_EQ(precision_at_recall(c, 0.5), 1.0);
  ASSERT_EQ(c.points.size(), 4u);
  EXPECT_EQ(c.points.front().threshold, 0.6);
  EXPECT_EQ(c.points.front().recall, 1.0);
  EXPECT_EQ(c.points.front().precision, 0.5);
}

TEST(PrCurve, AllScoresEqualGivesPositiveRate) {
  for (std::size_t n = 2; n < 12; ++n) {
    for (std::size_t p = 1; p < n; ++p) {
      std::vector<bool> labels(n, false);
      for (std::size_t i = 0; i < p; ++i) labels[i] = true;
      const auto c = curve_of(std::vector<double>(n, 1.5), labels);
      ASSERT_EQ(c.points.size(), 1u);
      ASSERT_NEAR(auprc(c), static_cast<double>(p) / static_cast<double>(n), 1e-15);
    }
  }
}

TEST(PrCurve, SinglePositiveScoresOneOverRank) {
  for (std::size_t rank = 1; rank <= 10; ++rank) {
    std::vector<double> scores;
    std::vector<bool> labels;
    for (std::size_t i = 1; i <= 10; ++i) {
      scores.push_back(100.0 - static_cast<double>(i));
      labels.push_back(i == rank);
    }
    ASSERT_NEAR(auprc(curve_of(scores, labels)), 1.0 / static_cast<double>(rank), 1e-15);
  }
}

TEST(PrCurve, TiesEnterTogether) {
  // Positive tied with a negative at the top: the first operating point has
  // precision 1/2, not 1.
  const auto c = curve_of({1.0, 1.0, 0.0}, {true, false, false});
  EXPECT_NEAR(auprc(c), 0.5, 1e-15);
}

TEST(PrCurve, MatchesBruteForceSweep) {
  CounterRng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(60);
    std::vector<double> scores(n);
    std::vector<bool> labels(n);
    // Coarse scores on half the trials produce many ties.
    const double grid = trial % 2 == 0 ? 4.0 : 1e6;
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = std::round(rng.uniform(-1.0, 1.0) * grid) / grid;
      labels[i] = rng.uniform() < 0.4;
    }
    labels[0] = true;
    labels[1] = false;
    const auto c = curve_of(scores, labels);
    const Sweep oracle = brute_force_sweep(scores, labels);
    ASSERT_NEAR(auprc(c), oracle.auprc, 1e-12) << "trial " << trial;
    ASSERT_NEAR(precision_at_recall(c, 0.9), oracle.p_at_090, 1e-12) << "trial " << trial;
    ASSERT_NEAR(precision_at_recall(c, 0.99), oracle.p_at_099, 1e-12) << "trial " << trial;
    ASSERT_GE(auprc(c), 0.0);
    ASSERT_LE(auprc(c), 1.0 + 1e-12);
  }
}

TEST(PrCurve, InvariantUnderIncreasingTransforms) {
  CounterRng rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + rng.below(40);
    std::vector<double> s(n), t1(n), t2(n);
    std::vector<bool> l(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = std::round(rng.uniform(-2.0, 2.0) * 3.0) / 3.0;
      t1[i] = std::exp(s[i]);
      t2[i] = 3.0 * s[i] * s[i] * s[i] + 7.0;
      l[i] = i % 3 == 0;
    }
    const double base = auprc(curve_of(s, l));
    ASSERT_NEAR(auprc(curve_of(t1, l)), base, 1e-12);
    ASSERT_NEAR(auprc(curve_of(t2, l)), base, 1e-12);
    ASSERT_NEAR(precision_at_recall(curve_of(t1, l), 0.9), precision_at_recall(curve_of(s, l), 0.9), 1e-12);
  }
}

TEST(PrCurve, Errors) {
  EXPECT_THROW(curve_of({1, 2}, {true, true}), DomainError);
  EXPECT_THROW(curve_of({1, 2}, {false, false}), DomainError);
  const auto c = curve_of({1, 2}, {true, false});
  EXPECT_THROW(precision_at_recall(c, 0.0), DomainError);
  EXPECT_THROW(precision_at_recall(c, 1.5), DomainError);
}

TEST(SlcReportTest, MacroAverageAndSkippedClasses) {
  // Column 0 perfect, column 1 the worked example, class 2 has no examples.
  const Tensor scores = Tensor::from_rows({{0.9, 0.9, 0}, {0.8, 0.8, 0}, {0.1, 0.7, 0}, {0.2, 0.6, 0}});
  const std::vector<std::size_t> labels{0, 1, 1, 1};
  // Class 1 positives at 0.8, 0.7, 0.6 below a negative at 0.9.
  const auto r = slc_report(scores, labels);
  ASSERT_EQ(r.per_class.size(), 2u);
  EXPECT_EQ(r.per_class[0].auprc, 1.0);
  const double class1 = (1.0 / 3) * 0.5 + (1.0 / 3) * (2.0 / 3) + (1.0 / 3) * 0.75;
  EXPECT_NEAR(r.per_class[1].auprc, class1, 1e-12);
  EXPECT_NEAR(r.macro.auprc, (1.0 + class1) / 2.0, 1e-12);
  EXPECT_NEAR(r.one_minus_macro.auprc, 1.0 - r.macro.auprc, 1e-15);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("class 2"), std::string::npos);
  EXPECT_THROW(slc_report(scores, std::vector<std::size_t>{0, 1}), DimensionError);
}

TEST(SlcReportTest, TwoClassConstantSecondLogit) {
  // With z_2 fixed, softmax p_1 is monotone in z_1, so both modes agree.
  CounterRng rng(23);
  const std::size_t n = 80;
  Tensor logits(n, 2), probs(n, 2);
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = i % 2;
    logits(i, 0) = rng.uniform(-3.0, 3.0) + (labels[i] == 0 ? 1.0 : 0.0);
    logits(i, 1) = 0.0;
    probs(i, 0) = 1.0 / (1.0 + std::exp(-logits(i, 0)));
    probs(i, 1) = 1.0 - probs(i, 0);
  }
  const auto a = slc_report(logits, labels, ScoreMode::single_logit);
  const auto b = slc_report(probs, labels, ScoreMode::all_logits_softmax);
  EXPECT_NEAR(a.per_class[0].auprc, b.per_class[0].auprc, 1e-12);
  EXPECT_EQ(to_json(a)["mode"], "single_logit");
  EXPECT_EQ(to_json(b)["mode"], "all_logits_softmax");
}

TEST(SlcReportTest, JsonSchema) {
  const auto r = slc_report(Tensor::from_rows({{1, 0}, {0, 1}}), std::vector<std::size_t>{0, 1});
  const auto j = to_json(r);
  for (const char* key : {"mode", "per_class", "macro", "one_minus_macro", "warnings"})
    EXPECT_TRUE(j.contains(key)) << key;
  for (const char* key : {"auprc", "p_at_090", "p_at_099"}) {
    EXPECT_TRUE(j["macro"].contains(key));
    EXPECT_TRUE(j["one_minus_macro"].contains(key));
    EXPECT_TRUE(j["per_class"][0].contains(key));
  }
  EXPECT_EQ(j["per_class"][1]["class"], 1);
  EXPECT_EQ(parse_score_mode("all_logits"), ScoreMode::all_logits_softmax);
  EXPECT_THROW(parse_score_mode("top1"), ConfigError);
}

TEST(EvaluateSlc, SingleLogitScoresMatchForwardSingle) {
  const Architecture arch{6, {8, 5}, 4, true};
  const MlpModel model = MlpModel::initialize(arch, 3);
  const Dataset data = synth_blobs(4, 10, 6, 0.5, 9);
  const Tensor s = single_logit_scores(model, data.features);
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t j = 0; j < 4; ++j) ASSERT_EQ(s(i, j), model.forward_single(data.features.row(i), j));
  const auto single = evaluate_slc(model, data, ScoreMode::single_logit);
  const auto all = evaluate_slc(model, data, ScoreMode::all_logits_softmax);
  EXPECT_EQ(single.per_class.size(), 4u);
  EXPECT_EQ(all.per_class.size(), 4u);
  // Both reports share one schema.
  auto keys = [](const nlohmann::json& j) {
    std::vector<std::string> out;
    for (auto it = j.begin(); it != j.end(); ++it) out.push_back(it.key());
    return out;
  };
  EXPECT_EQ(keys(to_json(single)), keys(to_json(all)));
  Dataset wrong = data;
  wrong.k = 5;
  EXPECT_THROW(evaluate_slc(model, wrong, ScoreMode::single_logit), DimensionError);
}

}  // namespace
}  // namespace slc
