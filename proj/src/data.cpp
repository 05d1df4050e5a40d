#include "slc/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "slc/errors.hpp"

namespace slc {
namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (offset + 4 > bytes.size())
    throw FormatError(path.string() + ": truncated IDX header at byte " + std::to_string(offset));
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::string hex(std::uint32_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << std::setw(8) << std::setfill('0') << v;
  return os.str();
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end && !text.empty();
}

}  // namespace

std::string_view to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::train: return "train";
    case SplitTag::validation: return "validation";
    case SplitTag::test: return "test";
  }
  return "?";
}

void Dataset::validate() const {
  if (features.rows() != labels.size())
    throw FormatError("dataset: " + std::to_string(features.rows()) + " feature rows for " +
                      std::to_string(labels.size()) + " labels");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= k)
      throw FormatError("dataset: label " + std::to_string(labels[i]) + " at row " +
                        std::to_string(i) + " is not below k = " + std::to_string(k));
  if (!features.all_finite()) throw FormatError("dataset: non-finite feature value");
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features = features.gather_rows(indices);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(labels.at(i));
  out.k = k;
  out.split = split;
  out.normalization = normalization;
  return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t y : labels) ++counts[y];
  return counts;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto img = read_file(images);
  const auto lab = read_file(labels);
  const auto img_magic = read_be32(img, 0, images);
  if (img_magic != kIdxImagesMagic)
    throw FormatError(images.string() + ": bad magic " + hex(img_magic) + " at byte 0 (expected " +
                      hex(kIdxImagesMagic) + ")");
  const auto lab_magic = read_be32(lab, 0, labels);
  if (lab_magic != kIdxLabelsMagic)
    throw FormatError(labels.string() + ": bad magic " + hex(lab_magic) + " at byte 0 (expected " +
                      hex(kIdxLabelsMagic) + ")");
  const std::size_t n = read_be32(img, 4, images);
  const std::size_t rows = read_be32(img, 8, images);
  const std::size_t cols = read_be32(img, 12, images);
  const std::size_t n_labels = read_be32(lab, 4, labels);
  if (n != n_labels)
    throw FormatError(labels.string() + ": label count " + std::to_string(n_labels) +
                      " at byte 4 does not match image count " + std::to_string(n));
  const std::size_t d = rows * cols;
  if (img.size() < 16 + n * d)
    throw FormatError(images.string() + ": truncated pixel data at byte " + std::to_string(img.size()) +
                      " (expected " + std::to_string(16 + n * d) + " bytes)");
  if (lab.size() < 8 + n)
    throw FormatError(labels.string() + ": truncated label data at byte " + std::to_string(lab.size()) +
                      " (expected " + std::to_string(8 + n) + " bytes)");

  Dataset out;
  out.features = Tensor(n, d);
  for (std::size_t i = 0; i < n * d; ++i) out.features.data()[i] = img[16 + i] / 255.0;
  out.labels.resize(n);
  std::size_t max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out.labels[i] = lab[8 + i];
    max_label = std::max(max_label, out.labels[i]);
  }
  out.k = n == 0 ? 0 : max_label + 1;
  out.normalization = {1.0 / 255.0, 0.0, "divide by 255"};
  out.validate();
  return out;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<double> values;
  std::vector<std::size_t> labels;
  std::size_t width = 0;
  std::string line;
  std::size_t row = 0;
  bool skipped_header = !schema.header;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    const auto fields = split_fields(line);
    if (fields.size() < 2)
      throw FormatError(path.string() + ": row " + std::to_string(row) + " needs at least one feature and a label");
    if (width == 0) width = fields.size() - 1;
    if (fields.size() - 1 != width)
      throw FormatError(path.string() + ": row " + std::to_string(row) + " has " +
                        std::to_string(fields.size()) + " columns, expected " + std::to_string(width + 1));
    for (std::size_t c = 0; c < width; ++c) {
      double v;
      if (!parse_number(fields[c], v))
        throw FormatError(path.string() + ": non-numeric cell at row " + std::to_string(row) +
                          ", column " + std::to_string(c + 1));
      values.push_back(v);
    }
    std::size_t y;
    if (!parse_number(fields.back(), y))
      throw FormatError(path.string() + ": label at row " + std::to_string(row) + ", column " +
                        std::to_string(width + 1) + " is not a non-negative integer");
    labels.push_back(y);
  }
  if (labels.empty()) throw FormatError(path.string() + ": no data rows");
  Dataset out;
  out.features = Tensor(labels.size(), width, std::move(values));
  out.k = schema.classes.value_or(*std::max_element(labels.begin(), labels.end()) + 1);
  out.labels = std::move(labels);
  out.validate();
  return out;
}

void save_csv(const std::filesystem::path& path, const Dataset& data, bool header) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  if (header) {
    for (std::size_t c = 0; c < data.width(); ++c) out << "x" << c << ",";
    out << "label\n";
  }
  char buf[32];
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.features.row(i)) {
      // Shortest round-trip representation.
      const auto res = std::to_chars(buf, buf + sizeof buf, v);
      out.write(buf, res.ptr - buf);
      out << ',';
    }
    out << data.labels[i] << '\n';
  }
}

Dataset synth_blobs(std::size_t k, std::size_t per_class, std::size_t d, double spread,
                    std::uint64_t seed, std::optional<std::uint64_t> noise_seed) {
  if (k < 2) throw DomainError("synth_blobs: k must be >= 2");
  if (per_class < 1) throw DomainError("synth_blobs: per_class must be >= 1");
  if (d < 1) throw DomainError("synth_blobs: d must be >= 1");
  if (!(spread >= 0.0)) throw DomainError("synth_blobs: spread must be >= 0");

  // Means: k orthonormal directions scaled by 1/sqrt(2) (pairwise distance 1)
  // when d >= k; otherwise random directions of the same norm.
  CounterRng mean_rng(CounterRng::derive(seed, 1));
  Tensor means(k, d);
  for (std::size_t c = 0; c < k; ++c) {
    auto v = means.row(c);
    for (double& x : v) x = mean_rng.normal();
    if (d >= k) {
      for (std::size_t p = 0; p < c; ++p) {
        const auto u = means.row(p);
        double dot = 0.0;
        for (std::size_t f = 0; f < d; ++f) dot += v[f] * u[f];
        for (std::size_t f = 0; f < d; ++f) v[f] -= dot * u[f];
      }
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  for (double& x : means.data()) x /= std::sqrt(2.0);

  CounterRng noise(noise_seed.value_or(CounterRng::derive(seed, 2)));
  Dataset out;
  out.k = k;
  out.features = Tensor(k * per_class, d);
  out.labels.resize(k * per_class);
  for (std::size_t i = 0; i < k * per_class; ++i) {
    const std::size_t c = i % k;
    out.labels[i] = c;
    for (std::size_t f = 0; f < d; ++f)
      out.features(i, f) = means(c, f) + (spread > 0.0 ? spread * noise.normal() : 0.0);
  }
  out.validate();
  return out;
}

SynthSpec SynthSpec::parse(std::string_view uri) {
  constexpr std::string_view prefix = "synth:";
  if (!uri.starts_with(prefix)) throw ConfigError("data", "synthetic URI must start with 'synth:'");
  uri.remove_prefix(prefix.size());
  SynthSpec s;
  bool have_k = false, have_n = false, have_d = false, have_spread = false, have_seed = false;
  for (auto field : split_fields(uri)) {
    field = trim(field);
    const auto eq = field.find('=');
    if (eq == std::string_view::npos) throw ConfigError("data", "malformed synth field '" + std::string(field) + "'");
    const auto key = trim(field.substr(0, eq));
    const auto val = trim(field.substr(eq + 1));
    auto need = [&](bool ok) {
      if (!ok) throw ConfigError("data", "invalid value for synth field '" + std::string(key) + "'");
    };
    if (key == "k") need(have_k = parse_number(val, s.k));
    else if (key == "n") need(have_n = parse_number(val, s.per_class));
    else if (key == "d") need(have_d = parse_number(val, s.d));
    else if (key == "spread") need(have_spread = parse_number(val, s.spread));
    else if (key == "seed") need(have_seed = parse_number(val, s.seed));
    else if (key == "noise_seed") {
      std::uint64_t v;
      need(parse_number(val, v));
      s.noise_seed = v;
    } else {
      throw ConfigError("data", "unknown synth field '" + std::string(key) + "'");
    }
  }
  if (!(have_k && have_n && have_d && have_spread && have_seed))
    throw ConfigError("data", "synth URI needs k, n, d, spread and seed");
  if (s.k < 2 || s.per_class < 1 || s.d < 1 || !(s.spread >= 0.0))
    throw ConfigError("data", "synth URI needs k >= 2, n >= 1, d >= 1, spread >= 0");
  return s;
}

std::string SynthSpec::uri() const {
  std::ostringstream os;
  os << "synth:k=" << k << ",n=" << per_class << ",d=" << d << ",spread=" << spread
     << ",seed=" << seed;
  if (noise_seed) os << ",noise_seed=" << *noise_seed;
  return os.str();
}

Dataset SynthSpec::generate() const { return synth_blobs(k, per_class, d, spread, seed, noise_seed); }

DatasetSource DatasetSource::parse(std::string_view uri) {
  DatasetSource src;
  if (uri.starts_with("synth:")) {
    src.kind = Kind::synth;
    src.synth = SynthSpec::parse(uri);
  } else if (uri.starts_with("idx:")) {
    src.kind = Kind::idx;
    const auto rest = uri.substr(4);
    const auto comma = rest.find(',');
    if (comma == std::string_view::npos)
      throw ConfigError("data", "idx URI must be idx:<images>,<labels>");
    src.images = std::string(trim(rest.substr(0, comma)));
    src.labels = std::string(trim(rest.substr(comma + 1)));
  } else if (uri.starts_with("csv:") || uri.ends_with(".csv")) {
    src.kind = Kind::csv;
    src.csv = std::string(uri.starts_with("csv:") ? uri.substr(4) : uri);
  } else {
    throw ConfigError("data", "unrecognized dataset URI '" + std::string(uri) + "'");
  }
  return src;
}

void DatasetSource::check_resolvable() const {
  auto need = [](const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) throw ConfigError("data", "file not found: " + p.string());
  };
  if (kind == Kind::idx) {
    need(images);
    need(labels);
  } else if (kind == Kind::csv) {
    need(csv);
  }
}

Dataset DatasetSource::load() const {
  check_resolvable();
  switch (kind) {
    case Kind::synth: return synth.generate();
    case Kind::idx: return load_idx(images, labels);
    case Kind::csv: return load_csv(csv, CsvSchema{csv_header, std::nullopt});
  }
  throw UsageError("DatasetSource: unknown kind");
}

std::string DatasetSource::uri() const {
  switch (kind) {
    case Kind::synth: return synth.uri();
    case Kind::idx: return "idx:" + images.string() + "," + labels.string();
    case Kind::csv: return "csv:" + csv.string();
  }
  return {};
}

std::pair<Dataset, Dataset> split(const Dataset& data, double validation_fraction,
                                  std::uint64_t seed) {
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw DomainError("split: validation fraction must lie in (0, 1)");
  std::vector<std::vector<std::size_t>> by_class(data.k);
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);
  std::vector<std::size_t> first, second;
  for (std::size_t c = 0; c < data.k; ++c) {
    auto& idx = by_class[c];
    if (idx.empty()) continue;
    if (idx.size() < 2)
      throw DomainError("split: class " + std::to_string(c) + " has fewer than 2 examples; cannot stratify");
    CounterRng rng(CounterRng::derive(seed, c));
    rng.shuffle(idx);
    auto take = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(idx.size())));
    take = std::clamp<std::size_t>(take, 1, idx.size() - 1);
    second.insert(second.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
    first.insert(first.end(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end());
  }
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  Dataset a = data.subset(first);
  Dataset b = data.subset(second);
  b.split = SplitTag::validation;
  return {std::move(a), std::move(b)};
}

BatchSampler::BatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed)
    : n_(n), batch_size_(batch_size), seed_(seed) {
  if (n == 0) throw DomainError("BatchSampler: empty dataset");
  if (batch_size == 0) throw DomainError("BatchSampler: batch size must be positive");
  reshuffle();
}

void BatchSampler::reshuffle() {
  order_.resize(n_);
  std::iota(order_.begin(), order_.end(), 0);
  CounterRng rng(CounterRng::derive(seed_, epoch_));
  rng.shuffle(order_);
  cursor_ = 0;
}

std::vector<std::size_t> BatchSampler::next() {
  if (cursor_ >= n_) {
    ++epoch_;
    reshuffle();
  }
  const std::size_t end = std::min(n_, cursor_ + batch_size_);
  std::vector<std::size_t> batch(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(end));
  cursor_ = end;
  return batch;
}

}  // namespace slc
