#pragma once

// Logit-separation diagnostics: how far a labeled logit set is from having
// every true logit above every false logit.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "slc/losses.hpp"

namespace slc {

struct SeparationReport {
  double min_true_logit = 0.0;
  double max_false_logit = 0.0;
  double margin = 0.0;  // min_true_logit - max_false_logit
  // Fraction of (true, false) logit pairs with true <= false.
  double violating_pair_fraction = 0.0;
  std::uint64_t violating_pairs = 0;
  std::uint64_t n_true = 0;
  std::uint64_t n_false = 0;

  bool separated() const noexcept { return margin > 0.0; }
};

// O(N log N) in the number of logits: sorts the false logits once and
// counts, for every true logit, the false logits at or above it.
SeparationReport separation(const LogitMatrix& lm);

nlohmann::json to_json(const SeparationReport& report);

// Two examples, two classes: z(x1) = (2a, a) labeled 0, z(x2) = (-2a, -a)
// labeled 1. Each example is confidently correct but z_1(x1) > z_1(x2).
LogitMatrix counterexample_ce(double alpha);
// The same construction at alpha = gamma, where every hinge term is exactly 0.
LogitMatrix counterexample_margin(double gamma);

enum class AlignmentStart {
  random,          // seeded uniform logits in [-3, 3]
  counterexample,  // alternate counterexample_ce(10) and counterexample_margin(gamma)
  mixed,           // even trials random, odd trials counterexample
};

struct AlignmentOptions {
  std::size_t trials = 10;
  std::size_t steps = 5000;
  double step_size = 0.1;
  std::uint64_t seed = 0;
  std::size_t examples = 4;
  std::size_t classes = 3;
  AlignmentStart start = AlignmentStart::mixed;
};

enum class Verdict { aligned, not_aligned, inconclusive };
std::string_view to_string(Verdict v);

struct AlignmentTrial {
  std::string start;  // "random" or the counterexample name
  double initial_margin = 0.0;
  double final_margin = 0.0;
  double final_loss = 0.0;
  bool diverged = false;
};

struct AlignmentResult {
  LossKind kind = LossKind::ce;
  Verdict verdict = Verdict::inconclusive;
  std::vector<AlignmentTrial> trials;
};

// Plain gradient descent on free logits, one run per trial. The loss is
// judged aligned iff every trial ends with a positive margin; a run whose
// loss rises for 100 consecutive steps makes the verdict inconclusive.
AlignmentResult check_alignment(const LossConfig& config, const AlignmentOptions& options);

nlohmann::json to_json(const AlignmentResult& result);

}  // namespace slc
