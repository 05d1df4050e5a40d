#include "slc/slc_eval.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>

#include "slc/autodiff.hpp"
#include "slc/data.hpp"
#include "slc/errors.hpp"
#include "slc/network.hpp"

namespace slc {

PRCurve pr_curve(std::span<const double> scores, std::span<const bool> labels,
                 std::size_t class_id) {
  if (scores.size() != labels.size())
    throw DimensionError("pr_curve: " + std::to_string(scores.size()) + " scores for " +
                         std::to_string(labels.size()) + " labels");
  PRCurve curve;
  curve.class_id = class_id;
  curve.positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  curve.negatives = labels.size() - curve.positives;
  if (curve.positives == 0 || curve.negatives == 0) {
    throw DomainError("pr_curve: class " + std::to_string(class_id) + " has " +
                      std::to_string(curve.positives) + " positives and " +
                      std::to_string(curve.negatives) + " negatives; both must be non-zero");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  // Sweep descending; tied scores enter the positive set together.
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) (labels[order[i]] ? tp : fp)++;
    curve.points.push_back({s, static_cast<double>(tp) / static_cast<double>(tp + fp),
                            static_cast<double>(tp) / static_cast<double>(curve.positives)});
  }
  std::reverse(curve.points.begin(), curve.points.end());
  return curve;
}

double auprc(const PRCurve& curve) {
  double area = 0.0, prev_recall = 0.0;
  for (auto it = curve.points.rbegin(); it != curve.points.rend(); ++it) {
    area += (it->recall - prev_recall) * it->precision;
    prev_recall = it->recall;
  }
  return area;
}

double precision_at_recall(const PRCurve& curve, double r) {
  if (!(r > 0.0 && r <= 1.0)) throw DomainError("precision_at_recall: r must lie in (0, 1]");
  // Recall is compared on counts so that r = 0.9 with 10 positives needs 9.
  const double needed = r * static_cast<double>(curve.positives) - 1e-9;
  for (auto it = curve.points.rbegin(); it != curve.points.rend(); ++it) {
    if (it->recall * static_cast<double>(curve.positives) >= needed) return it->precision;
  }
  return curve.points.empty() ? 0.0 : curve.points.front().precision;
}

std::string_view to_string(ScoreMode mode) {
  return mode == ScoreMode::single_logit ? "single_logit" : "all_logits_softmax";
}

ScoreMode parse_score_mode(std::string_view name) {
  if (name == "single_logit") return ScoreMode::single_logit;
  if (name == "all_logits" || name == "all_logits_softmax") return ScoreMode::all_logits_softmax;
  throw ConfigError("mode", "expected single_logit or all_logits, got '" + std::string(name) + "'");
}

SlcReport slc_report(const Tensor& scores, std::span<const std::size_t> labels, ScoreMode mode) {
  if (scores.rows() != labels.size())
    throw DimensionError("slc_report: " + std::to_string(scores.rows()) + " score rows for " +
                         std::to_string(labels.size()) + " labels");
  const std::size_t k = scores.cols();
  std::vector<std::optional<ClassMetrics>> slots(k);
  std::vector<std::string> skipped(k);

#pragma omp parallel for schedule(dynamic)
  for (long long jj = 0; jj < static_cast<long long>(k); ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    std::vector<double> s(scores.rows());
    auto is_pos = std::make_unique<bool[]>(scores.rows());
    std::size_t pos = 0;
    for (std::size_t i = 0; i < scores.rows(); ++i) {
      s[i] = scores(i, j);
      is_pos[i] = labels[i] == j;
      pos += is_pos[i];
    }
    if (pos == 0 || pos == scores.rows()) {
      skipped[j] = "class " + std::to_string(j) + " skipped: " +
                   (pos == 0 ? "no positive examples" : "no negative examples");
      continue;
    }
    const PRCurve curve = pr_curve(s, {is_pos.get(), scores.rows()}, j);
    slots[j] = ClassMetrics{j, auprc(curve), precision_at_recall(curve, 0.9),
                            precision_at_recall(curve, 0.99)};
  }

  SlcReport report;
  report.mode = mode;
  for (std::size_t j = 0; j < k; ++j) {
    if (slots[j]) report.per_class.push_back(*slots[j]);
    else report.warnings.push_back(skipped[j]);
  }
  if (!report.per_class.empty()) {
    const double n = static_cast<double>(report.per_class.size());
    for (const auto& c : report.per_class) {
      report.macro.auprc += c.auprc;
      report.macro.p_at_090 += c.p_at_090;
      report.macro.p_at_099 += c.p_at_099;
    }
    report.macro.auprc /= n;
    report.macro.p_at_090 /= n;
    report.macro.p_at_099 /= n;
  }
  report.one_minus_macro = {1.0 - report.macro.auprc, 1.0 - report.macro.p_at_090,
                            1.0 - report.macro.p_at_099};
  return report;
}

Tensor single_logit_scores(const MlpModel& model, const Tensor& inputs) {
  const Tensor feats = model.features(inputs);
  Tensor scores(inputs.rows(), model.classes());
#pragma omp parallel for schedule(static)
  for (long long ii = 0; ii < static_cast<long long>(inputs.rows()); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = 0; j < model.classes(); ++j)
      scores(i, j) = model.logit_from_features(feats.row(i), j);
  }
  return scores;
}

SlcReport evaluate_slc(const MlpModel& model, const Dataset& data, ScoreMode mode) {
  if (data.k != model.classes())
    throw DimensionError("evaluate_slc: dataset has " + std::to_string(data.k) +
                         " classes, model has " + std::to_string(model.classes()));
  Tensor scores;
  if (mode == ScoreMode::single_logit) {
    scores = single_logit_scores(model, data.features);
  } else {
    // log p_j ranks examples exactly as p_j does but keeps resolution where
    // p_j itself would round to 0 or 1.
    scores = model.forward_all(data.features, Mode::inference);
    for (std::size_t i = 0; i < scores.rows(); ++i) {
      auto row = scores.row(i);
      const double lse = logsumexp(row);
      for (double& v : row) v -= lse;
    }
  }
  return slc_report(scores, data.labels, mode);
}

nlohmann::json to_json(const SlcReport& r) {
  auto triple = [](const MetricTriple& t) {
    return nlohmann::json{{"auprc", t.auprc}, {"p_at_090", t.p_at_090}, {"p_at_099", t.p_at_099}};
  };
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& c : r.per_class)
    per_class.push_back(
        {{"class", c.class_id}, {"auprc", c.auprc}, {"p_at_090", c.p_at_090}, {"p_at_099", c.p_at_099}});
  return {{"mode", to_string(r.mode)},
          {"per_class", per_class},
          {"macro", triple(r.macro)},
          {"one_minus_macro", triple(r.one_minus_macro)},
          {"warnings", r.warnings}};
}

}  // namespace slc
