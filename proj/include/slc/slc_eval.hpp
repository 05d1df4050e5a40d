#pragma once

// Single-logit classification metrics: per-class precision-recall curves
// for the test "score > T", area under the curve, and precision at a fixed
// recall, macro-averaged over classes.

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "slc/tensor.hpp"

namespace slc {

class MlpModel;
struct Dataset;

// Operating point obtained by predicting positive for every example whose
// score is >= `threshold`; equivalently score > T for any T in
// [next lower observed score, threshold).
struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct PRCurve {
  std::vector<PrPoint> points;  // ascending threshold, one per distinct score
  std::size_t class_id = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

// Throws DomainError (naming class_id) if either class is absent.
PRCurve pr_curve(std::span<const double> scores, std::span<const bool> labels,
                 std::size_t class_id = 0);

// Step-wise area: sum over decreasing thresholds of (R_n - R_{n-1}) * P_n.
double auprc(const PRCurve& curve);

// Precision at the largest threshold whose recall is >= r.
double precision_at_recall(const PRCurve& curve, double r);

enum class ScoreMode { single_logit, all_logits_softmax };
std::string_view to_string(ScoreMode mode);
ScoreMode parse_score_mode(std::string_view name);

struct ClassMetrics {
  std::size_t class_id = 0;
  double auprc = 0.0;
  double p_at_090 = 0.0;
  double p_at_099 = 0.0;
};

struct MetricTriple {
  double auprc = 0.0;
  double p_at_090 = 0.0;
  double p_at_099 = 0.0;
};

struct SlcReport {
  ScoreMode mode = ScoreMode::single_logit;
  std::vector<ClassMetrics> per_class;
  MetricTriple macro;
  MetricTriple one_minus_macro;
  std::vector<std::string> warnings;
};

// Builds the report from an n x k score matrix: column j scores class j.
// Classes lacking positives or negatives are skipped with a warning.
SlcReport slc_report(const Tensor& scores, std::span<const std::size_t> labels,
                     ScoreMode mode = ScoreMode::single_logit);

// single_logit scores class j with the raw logit z_j (computed through the
// single-logit path); all_logits_softmax with the softmax probability.
SlcReport evaluate_slc(const MlpModel& model, const Dataset& data, ScoreMode mode);

// Single-logit scores for every (example, class), n x k. Each entry equals
// model.forward_single(x_i, j) bit for bit.
Tensor single_logit_scores(const MlpModel& model, const Tensor& inputs);

nlohmann::json to_json(const SlcReport& report);

}  // namespace slc
