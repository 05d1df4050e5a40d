#pragma once

// Forward-pass timing against class count: full-logit cost grows with k,
// single-logit cost does not.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace slc {

struct BenchConfig {
  std::size_t input_width = 256;
  // Hidden widths of the backbone; empty means logits straight from the input.
  std::vector<std::size_t> hidden = {1024, 128};
  std::vector<std::size_t> class_counts = default_class_counts();
  std::size_t batch_size = 32;
  std::size_t repetitions = 100;
  std::size_t warmup = 10;
  std::uint64_t seed = 0;

  // {1, 2^10, 2^14, 2^16, 2^18, round(2^18.5)}
  static std::vector<std::size_t> default_class_counts();
  void validate() const;
};

struct BenchRow {
  std::size_t classes = 0;
  // Per-example seconds: forward_all for k > 1, the single-logit path for k = 1.
  double time_per_example = 0.0;
  double stddev = 0.0;
  double speedup = 1.0;  // time_per_example / SLC time
  // Single-logit path measured through this row's model.
  double single_time_per_example = 0.0;
  double single_stddev = 0.0;
  std::vector<double> samples;         // per-repetition per-example seconds
  std::vector<double> single_samples;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::string hardware;
  std::string float_type = "float64";
  int threads = 1;
  double timer_resolution = 0.0;  // seconds
  bool low_confidence = false;

  double slc_time() const;
};

BenchReport run_bench(const BenchConfig& config);

struct CostModel {
  double fixed_cost = 0.0;      // backbone seconds per example
  double per_class_cost = 0.0;  // seconds per logit per example
  double r_squared = 0.0;
  // Sign test on per-repetition slopes: fraction positive and the
  // one-sided binomial p-value of observing at least that many.
  double positive_slope_fraction = 0.0;
  double sign_test_p_value = 1.0;
};

// Least-squares fit time(k) = a + b k over every row of the report (the
// k = 1 row contributes the single-logit time, a + b). Needs at least three
// rows.
CostModel fit_cost_model(const BenchReport& report);
// Same fit over an arbitrary (k, time) series; per-repetition samples
// feed the sign test when provided.
CostModel fit_line(const std::vector<double>& k, const std::vector<double>& t,
                   const std::vector<std::vector<double>>& samples = {});

nlohmann::json to_json(const BenchReport& report);
void write_bench_csv(const std::filesystem::path& path, const BenchReport& report);

}  // namespace slc
