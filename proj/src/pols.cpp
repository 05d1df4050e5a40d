#include "slc/pols.hpp"

#include <algorithm>
#include <limits>

#include "slc/errors.hpp"
#include "slc/rng.hpp"

namespace slc {

SeparationReport separation(const LogitMatrix& lm) {
  if (lm.k() < 2) throw DomainError("separation: needs k >= 2 (no false logits when k = 1)");
  std::vector<double> false_logits;
  false_logits.reserve(lm.m() * (lm.k() - 1));
  SeparationReport r;
  r.min_true_logit = std::numeric_limits<double>::infinity();
  r.max_false_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lm.m(); ++i) {
    r.min_true_logit = std::min(r.min_true_logit, lm.true_logit(i));
    for (std::size_t j = 0; j < lm.k(); ++j) {
      if (j == lm.label(i)) continue;
      false_logits.push_back(lm.z()(i, j));
      r.max_false_logit = std::max(r.max_false_logit, lm.z()(i, j));
    }
  }
  std::sort(false_logits.begin(), false_logits.end());
  for (std::size_t i = 0; i < lm.m(); ++i) {
    // false logits >= this true logit violate the strict ordering
    const auto first = std::lower_bound(false_logits.begin(), false_logits.end(), lm.true_logit(i));
    r.violating_pairs += static_cast<std::uint64_t>(false_logits.end() - first);
  }
  r.n_true = lm.m();
  r.n_false = false_logits.size();
  r.margin = r.min_true_logit - r.max_false_logit;
  r.violating_pair_fraction =
      static_cast<double>(r.violating_pairs) / static_cast<double>(r.n_true * r.n_false);
  return r;
}

nlohmann::json to_json(const SeparationReport& r) {
  return {{"min_true_logit", r.min_true_logit},
          {"max_false_logit", r.max_false_logit},
          {"margin", r.margin},
          {"violating_pair_fraction", r.violating_pair_fraction},
          {"violating_pairs", r.violating_pairs},
          {"n_true", r.n_true},
          {"n_false", r.n_false},
          {"separated", r.separated()}};
}

LogitMatrix counterexample_ce(double alpha) {
  if (!(alpha > 0.0)) throw DomainError("counterexample_ce: alpha must be positive");
  return LogitMatrix(Tensor::from_rows({{2 * alpha, alpha}, {-2 * alpha, -alpha}}), {0, 1});
}

LogitMatrix counterexample_margin(double gamma) {
  if (!(gamma > 0.0)) throw DomainError("counterexample_margin: gamma must be positive");
  return counterexample_ce(gamma);
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::aligned: return "aligned";
    case Verdict::not_aligned: return "not_aligned";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

constexpr double kCounterexampleAlpha = 10.0;
constexpr std::size_t kDivergenceWindow = 100;

struct Start {
  std::string name;
  LogitMatrix logits;
};

Start make_start(const LossConfig& config, const AlignmentOptions& o, std::size_t trial) {
  bool use_counterexample = o.start == AlignmentStart::counterexample ||
                            (o.start == AlignmentStart::mixed && trial % 2 == 1);
  if (use_counterexample) {
    const std::size_t which = o.start == AlignmentStart::mixed ? trial / 2 : trial;
    if (which % 2 == 0)
      return {"counterexample_ce(10)", counterexample_ce(kCounterexampleAlpha)};
    return {"counterexample_margin(gamma)", counterexample_margin(config.gamma)};
  }
  CounterRng rng(CounterRng::derive(o.seed, trial));
  Tensor z(o.examples, o.classes);
  for (double& v : z.data()) v = rng.uniform(-3.0, 3.0);
  std::vector<std::size_t> labels(o.examples);
  // Every class gets at least one example when examples >= classes.
  for (std::size_t i = 0; i < o.examples; ++i)
    labels[i] = i < o.classes ? i : static_cast<std::size_t>(rng.below(o.classes));
  return {"random", LogitMatrix(std::move(z), std::move(labels))};
}

}  // namespace

AlignmentResult check_alignment(const LossConfig& config, const AlignmentOptions& o) {
  if (o.trials < 1) throw DomainError("check_alignment: trials must be >= 1");
  if (o.classes < 2 || o.examples < 1) throw DomainError("check_alignment: need >= 1 example and >= 2 classes");
  config.validate();
  AlignmentResult result{config.kind, Verdict::aligned, {}};
  bool any_diverged = false;
  bool all_separated = true;
  for (std::size_t trial = 0; trial < o.trials; ++trial) {
    Start start = make_start(config, o, trial);
    AlignmentTrial rec;
    rec.start = start.name;
    rec.initial_margin = separation(start.logits).margin;
    Tensor z = start.logits.z();
    const auto labels = start.logits.labels();
    double previous = std::numeric_limits<double>::infinity();
    std::size_t rising = 0;
    LossConfig cfg = config;
    if (!cfg.q.empty() && cfg.q.size() != z.cols()) cfg.q.clear();
    for (std::size_t step = 0; step < o.steps; ++step) {
      cfg.mc_seed = CounterRng::derive(config.mc_seed, step);
      const LossValue lv = loss_dispatch(cfg, LogitMatrix(z, labels));
      rising = lv.value > previous ? rising + 1 : 0;
      previous = lv.value;
      if (rising >= kDivergenceWindow || !std::isfinite(lv.value)) {
        rec.diverged = true;
        break;
      }
      for (std::size_t n = 0; n < z.size(); ++n) z.data()[n] -= o.step_size * lv.gradient.data()[n];
      if (!z.all_finite()) {
        rec.diverged = true;
        break;
      }
    }
    if (!rec.diverged) {
      const LogitMatrix final_lm(z, labels);
      rec.final_loss = loss_dispatch(cfg, final_lm).value;
      rec.final_margin = separation(final_lm).margin;
    }
    any_diverged = any_diverged || rec.diverged;
    all_separated = all_separated && !rec.diverged && rec.final_margin > 0.0;
    result.trials.push_back(std::move(rec));
  }
  if (any_diverged) result.verdict = Verdict::inconclusive;
  else result.verdict = all_separated ? Verdict::aligned : Verdict::not_aligned;
  return result;
}

nlohmann::json to_json(const AlignmentResult& r) {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : r.trials) {
    trials.push_back({{"start", t.start},
                      {"initial_margin", t.initial_margin},
                      {"final_margin", t.final_margin},
                      {"final_loss", t.final_loss},
                      {"diverged", t.diverged}});
  }
  return {{"loss", to_string(r.kind)}, {"verdict", to_string(r.verdict)}, {"trials", trials}};
}

}  // namespace slc
