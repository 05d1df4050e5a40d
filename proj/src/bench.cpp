#include "slc/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "slc/errors.hpp"
#include "slc/kernels.hpp"
#include "slc/network.hpp"
#include "slc/rng.hpp"

namespace slc {
namespace {

using Clock = std::chrono::steady_clock;

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

std::string hardware_description() {
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpuinfo, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) return line.substr(colon + 2);
    }
  }
  return "unknown";
}

// Upper tail of Binomial(n, 1/2): P(X >= successes).
double binomial_upper_tail(std::size_t n, std::size_t successes) {
  double p = 0.0;
  for (std::size_t x = successes; x <= n; ++x) {
    const double log_choose = std::lgamma(n + 1.0) - std::lgamma(x + 1.0) - std::lgamma(n - x + 1.0);
    p += std::exp(log_choose - static_cast<double>(n) * std::log(2.0));
  }
  return std::min(1.0, p);
}

template <class Fn>
std::vector<double> time_repetitions(const BenchConfig& c, Fn&& fn) {
  for (std::size_t r = 0; r < c.warmup; ++r) fn();
  std::vector<double> samples;
  samples.reserve(c.repetitions);
  for (std::size_t r = 0; r < c.repetitions; ++r) {
    const auto t0 = Clock::now();
    fn();
    const auto t1 = Clock::now();
    samples.push_back(std::chrono::duration<double>(t1 - t0).count() /
                      static_cast<double>(c.batch_size));
  }
  return samples;
}

}  // namespace

std::vector<std::size_t> BenchConfig::default_class_counts() {
  return {1, 1u << 10, 1u << 14, 1u << 16, 1u << 18,
          static_cast<std::size_t>(std::llround(std::pow(2.0, 18.5)))};
}

void BenchConfig::validate() const {
  if (repetitions < 10) throw ConfigError("bench.repetitions", "must be >= 10");
  if (batch_size < 1) throw ConfigError("bench.batch_size", "must be >= 1");
  if (input_width < 1) throw ConfigError("bench.input_width", "must be >= 1");
  if (class_counts.empty() || class_counts.front() != 1)
    throw ConfigError("bench.classes", "sweep must start with 1 (the single-logit row)");
  if (!std::is_sorted(class_counts.begin(), class_counts.end()) ||
      std::adjacent_find(class_counts.begin(), class_counts.end()) != class_counts.end())
    throw ConfigError("bench.classes", "class counts must be strictly ascending");
}

double BenchReport::slc_time() const {
  if (rows.empty()) throw UsageError("bench report has no rows");
  return rows.front().time_per_example;
}

BenchReport run_bench(const BenchConfig& config) {
  config.validate();
  BenchReport report;
  report.hardware = hardware_description();
  report.threads = kernels::max_threads();
  report.timer_resolution = std::chrono::duration<double>(Clock::duration(1)).count();

  CounterRng noise_rng(CounterRng::derive(config.seed, 7));
  Tensor noise(config.batch_size, config.input_width);
  for (double& v : noise.data()) v = noise_rng.uniform();

  volatile double sink = 0.0;
  for (std::size_t k : config.class_counts) {
    const Architecture arch{config.input_width, config.hidden, k, !config.hidden.empty()};
    const MlpModel model = MlpModel::initialize(arch, CounterRng::derive(config.seed, k));
    const std::size_t target = k / 2;

    BenchRow row;
    row.classes = k;
    row.single_samples = time_repetitions(config, [&] {
      const Tensor feats = model.features(noise);
      double acc = 0.0;
      for (std::size_t i = 0; i < feats.rows(); ++i) acc += model.logit_from_features(feats.row(i), target);
      sink = sink + acc;
    });
    row.single_time_per_example = mean(row.single_samples);
    row.single_stddev = stddev(row.single_samples);
    if (k == 1) {
      row.samples = row.single_samples;
    } else {
      row.samples = time_repetitions(config, [&] {
        const Tensor logits = model.forward_all(noise);
        sink = sink + logits(0, 0);
      });
    }
    row.time_per_example = mean(row.samples);
    row.stddev = stddev(row.samples);
    const double interval = *std::min_element(row.samples.begin(), row.samples.end()) *
                            static_cast<double>(config.batch_size);
    if (report.timer_resolution > 0.01 * interval) report.low_confidence = true;
    report.rows.push_back(std::move(row));
  }
  const double slc = report.rows.front().time_per_example;
  for (auto& row : report.rows) row.speedup = row.classes == 1 ? 1.0 : row.time_per_example / slc;
  return report;
}

CostModel fit_line(const std::vector<double>& k, const std::vector<double>& t,
                   const std::vector<std::vector<double>>& samples) {
  if (k.size() != t.size()) throw DimensionError("fit_line: k and time series differ in length");
  if (k.size() < 3) throw DomainError("fit_line: needs at least three class counts");
  const double mk = mean(k), mt = mean(t);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    sxx += (k[i] - mk) * (k[i] - mk);
    sxy += (k[i] - mk) * (t[i] - mt);
    syy += (t[i] - mt) * (t[i] - mt);
  }
  if (sxx == 0.0) throw DomainError("fit_line: degenerate sweep (all class counts equal)");
  CostModel m;
  m.per_class_cost = sxy / sxx;
  m.fixed_cost = mt - m.per_class_cost * mk;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double r = t[i] - (m.fixed_cost + m.per_class_cost * k[i]);
    ss_res += r * r;
  }
  m.r_squared = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;

  if (!samples.empty()) {
    if (samples.size() != k.size()) throw DimensionError("fit_line: one sample series per class count");
    std::size_t reps = samples.front().size();
    for (const auto& s : samples) reps = std::min(reps, s.size());
    std::size_t positive = 0;
    for (std::size_t r = 0; r < reps; ++r) {
      double rxy = 0.0, rmt = 0.0;
      for (const auto& s : samples) rmt += s[r];
      rmt /= static_cast<double>(samples.size());
      for (std::size_t i = 0; i < k.size(); ++i) rxy += (k[i] - mk) * (samples[i][r] - rmt);
      positive += rxy > 0.0;
    }
    if (reps > 0) {
      m.positive_slope_fraction = static_cast<double>(positive) / static_cast<double>(reps);
      m.sign_test_p_value = binomial_upper_tail(reps, positive);
    }
  }
  return m;
}

CostModel fit_cost_model(const BenchReport& report) {
  std::vector<double> k, t;
  std::vector<std::vector<double>> samples;
  for (const auto& row : report.rows) {
    k.push_back(static_cast<double>(row.classes));
    t.push_back(row.time_per_example);
    samples.push_back(row.samples);
  }
  return fit_line(k, t, samples);
}

nlohmann::json to_json(const BenchReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"classes", row.classes},
                    {"time_per_example_s", row.time_per_example},
                    {"stddev_s", row.stddev},
                    {"speedup", row.speedup},
                    {"single_time_per_example_s", row.single_time_per_example},
                    {"single_stddev_s", row.single_stddev},
                    {"samples", row.samples},
                    {"single_samples", row.single_samples}});
  }
  return {{"rows", rows},
          {"environment",
           {{"hardware", r.hardware},
            {"float_type", r.float_type},
            {"threads", r.threads},
            {"multithreaded", r.threads > 1},
            {"timer_resolution_s", r.timer_resolution}}},
          {"low_confidence", r.low_confidence}};
}

void write_bench_csv(const std::filesystem::path& path, const BenchReport& report) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.precision(10);
  out << "classes,time_per_example_s,speedup\n";
  for (const auto& row : report.rows)
    out << row.classes << ',' << row.time_per_example << ',' << row.speedup << '\n';
}

}  // namespace slc
