#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "slc/rng.hpp"
#include "slc/tensor.hpp"

namespace slc {

enum class SplitTag { train, validation, test };
std::string_view to_string(SplitTag tag);

// Per-feature affine map applied at load time: x' = x * scale + offset.
struct Normalization {
  double scale = 1.0;
  double offset = 0.0;
  std::string description = "none";
};

struct Dataset {
  Tensor features;                  // n x d
  std::vector<std::size_t> labels;  // n entries, each < k
  std::size_t k = 0;
  SplitTag split = SplitTag::train;
  Normalization normalization;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t width() const noexcept { return features.cols(); }
  // Throws FormatError if labels are out of range, counts disagree or any
  // feature is non-finite.
  void validate() const;
  Dataset subset(std::span<const std::size_t> indices) const;
  std::vector<std::size_t> class_counts() const;
};

// MNIST-style IDX pair. Pixels are divided by 255.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

struct CsvSchema {
  bool header = false;
  // Class count; inferred as max label + 1 when absent.
  std::optional<std::size_t> classes;
};

// Numeric columns followed by an integer label column.
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
void save_csv(const std::filesystem::path& path, const Dataset& data, bool header = false);

// k Gaussian clusters. Class means are the vertices of a regular simplex
// (pairwise distance 1) in a seeded random orthonormal frame, so they depend
// only on `seed`; noise is isotropic with standard deviation `spread` and is
// drawn from `noise_seed` (derived from `seed` when absent). Examples are
// interleaved by class.
Dataset synth_blobs(std::size_t k, std::size_t per_class, std::size_t d, double spread,
                    std::uint64_t seed, std::optional<std::uint64_t> noise_seed = std::nullopt);

// Parameters of a `synth:k=..,n=..,d=..,spread=..,seed=..[,noise_seed=..]`
// URI; `n` is the number of examples per class.
struct SynthSpec {
  std::size_t k = 0;
  std::size_t per_class = 0;
  std::size_t d = 0;
  double spread = 0.0;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> noise_seed;

  static SynthSpec parse(std::string_view uri);
  std::string uri() const;
  Dataset generate() const;
};

// Dataset reference: synth URI, `idx:<images>,<labels>` or `csv:<path>`
// (a bare path ending in .csv is also accepted).
struct DatasetSource {
  enum class Kind { synth, idx, csv } kind = Kind::synth;
  SynthSpec synth;
  std::filesystem::path images, labels, csv;
  bool csv_header = false;

  static DatasetSource parse(std::string_view uri);
  // Throws ConfigError if a referenced file does not exist.
  void check_resolvable() const;
  Dataset load() const;
  std::string uri() const;
};

// Stratified split: each class contributes round(fraction * count)
// examples (at least one) to the second part.
std::pair<Dataset, Dataset> split(const Dataset& data, double validation_fraction,
                                  std::uint64_t seed);

// Seeded per-epoch permutations; the last short batch of an epoch is kept.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed);

  std::vector<std::size_t> next();
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch_size() const noexcept { return batch_size_; }

 private:
  void reshuffle();

  std::size_t n_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::size_t epoch_ = 0;
  std::size_t cursor_ = 0;
  std::vector<std::size_t> order_;
};

}  // namespace slc
