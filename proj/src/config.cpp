#include "slc/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "slc/errors.hpp"

namespace slc {
namespace {

using json = nlohmann::json;

class ValueParser {
 public:
  ValueParser(std::string_view text, std::size_t line) : text_(text), line_(line) {}

  json parse_whole() {
    json v = parse_value();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing characters");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("line " + std::to_string(line_), msg);
  }

  void skip_space() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                                   text_[pos_] == '\r'))
      ++pos_;
  }

  json parse_value() {
    skip_space();
    if (pos_ >= text_.size()) fail("missing value");
    const char c = text_[pos_];
    if (c == '"') return parse_basic_string();
    if (c == '\'') return parse_literal_string();
    if (c == '[') return parse_array();
    if (text_.substr(pos_).starts_with("true")) {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_).starts_with("false")) {
      pos_ += 5;
      return false;
    }
    return parse_number();
  }

  json parse_basic_string() {
    std::string out;
    ++pos_;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      char c = text_[pos_++];
      if (c == '\\') {
        if (pos_ >= text_.size()) fail("unterminated escape");
        const char e = text_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      }
      out.push_back(c);
    }
    if (pos_ >= text_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  json parse_literal_string() {
    const auto end = text_.find('\'', pos_ + 1);
    if (end == std::string_view::npos) fail("unterminated string");
    json out = std::string(text_.substr(pos_ + 1, end - pos_ - 1));
    pos_ = end + 1;
    return out;
  }

  json parse_array() {
    json arr = json::array();
    ++pos_;
    while (true) {
      skip_space();
      if (pos_ < text_.size() && text_[pos_] == ']') {
        ++pos_;
        return arr;
      }
      arr.push_back(parse_value());
      skip_space();
      if (pos_ < text_.size() && text_[pos_] == ',') {
        ++pos_;
        continue;
      }
      if (pos_ < text_.size() && text_[pos_] == ']') {
        ++pos_;
        return arr;
      }
      fail("expected ',' or ']' in array");
    }
  }

  json parse_number() {
    std::size_t end = pos_;
    while (end < text_.size() && std::string_view("+-0123456789.eE_").find(text_[end]) != std::string_view::npos)
      ++end;
    std::string token;
    for (char c : text_.substr(pos_, end - pos_))
      if (c != '_') token.push_back(c);
    if (token.empty()) fail("unrecognized value '" + std::string(text_.substr(pos_)) + "'");
    if (token.front() == '+') token.erase(0, 1);
    pos_ = end;
    const bool is_float = token.find_first_of(".eE") != std::string::npos;
    if (!is_float) {
      if (token.front() == '-') {
        std::int64_t v;
        auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec == std::errc() && p == token.data() + token.size()) return v;
      } else {
        std::uint64_t v;
        auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec == std::errc() && p == token.data() + token.size()) return v;
      }
      fail("invalid integer '" + token + "'");
    }
    double v;
    auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || p != token.data() + token.size()) fail("invalid number '" + token + "'");
    return v;
  }

  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

std::vector<std::string> split_key(std::string_view key, std::size_t line) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    std::string part(key.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    while (!part.empty() && (part.back() == ' ' || part.back() == '\t')) part.pop_back();
    while (!part.empty() && (part.front() == ' ' || part.front() == '\t')) part.erase(0, 1);
    if (part.empty()) throw ConfigError("line " + std::to_string(line), "empty key segment in '" + std::string(key) + "'");
    parts.push_back(std::move(part));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return parts;
}

std::string strip_comment(const std::string& line) {
  bool in_basic = false, in_literal = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '\\' && in_basic) {
      ++i;
      continue;
    }
    if (c == '"' && !in_literal) in_basic = !in_basic;
    else if (c == '\'' && !in_basic) in_literal = !in_literal;
    else if (c == '#' && !in_basic && !in_literal) return line.substr(0, i);
  }
  return line;
}

int bracket_balance(std::string_view s) {
  int depth = 0;
  bool in_basic = false, in_literal = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '\\' && in_basic) {
      ++i;
      continue;
    }
    if (c == '"' && !in_literal) in_basic = !in_basic;
    else if (c == '\'' && !in_basic) in_literal = !in_literal;
    else if (!in_basic && !in_literal) depth += (c == '[') - (c == ']');
  }
  return depth;
}

void set_path(json& root, const std::vector<std::string>& path, json value, const std::string& where) {
  json* node = &root;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    json& child = (*node)[path[i]];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) throw ConfigError(where, "'" + path[i] + "' is not a table");
    node = &child;
  }
  (*node)[path.back()] = std::move(value);
}

// --- typed field access ------------------------------------------------------

// nlohmann converts -1 to a huge unsigned value and 1.5 to 1; reject both.
template <class T>
bool representable(const json& v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v.is_boolean();
  } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
    return v.is_number_unsigned();
  } else if constexpr (std::is_integral_v<T>) {
    return v.is_number_integer();
  } else if constexpr (std::is_floating_point_v<T>) {
    return v.is_number();
  } else if constexpr (std::is_same_v<T, std::string>) {
    return v.is_string();
  } else {
    if (!v.is_array()) return false;
    for (const auto& e : v)
      if (!representable<typename T::value_type>(e)) return false;
    return true;
  }
}

class Fields {
 public:
  Fields(const json& table, std::string prefix) : table_(table), prefix_(std::move(prefix)) {
    if (!table_.is_null() && !table_.is_object()) throw ConfigError(prefix_, "must be a table");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (table_.is_null() || !table_.contains(key)) return;
    if (!representable<T>(table_.at(key))) throw ConfigError(name(key), "has the wrong type");
    try {
      out = table_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(name(key), "has the wrong type");
    }
  }

  void read(const char* key, std::filesystem::path& out) {
    std::string s = out.string();
    read(key, s);
    out = s;
  }

  void finish() const {
    if (table_.is_null()) return;
    for (const auto& [key, value] : table_.items())
      if (!seen_.count(key)) throw ConfigError(name(key.c_str()), "unknown field");
  }

  std::string name(const char* key) const { return prefix_ + "." + key; }

 private:
  const json& table_;
  std::string prefix_;
  std::set<std::string> seen_;
};

const json& table_or_null(const json& root, const char* key) {
  static const json null;
  return root.contains(key) ? root.at(key) : null;
}

}  // namespace

json parse_config_text(std::string_view text) {
  json root = json::object();
  std::vector<std::string> table;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = strip_comment(raw);
    const std::size_t start_line = line_no;
    while (bracket_balance(line.substr(line.find('=') == std::string::npos ? 0 : line.find('='))) > 0 &&
           std::getline(in, raw)) {
      ++line_no;
      line += "\n" + strip_comment(raw);
    }
    std::string_view sv = line;
    while (!sv.empty() && std::isspace(static_cast<unsigned char>(sv.front()))) sv.remove_prefix(1);
    while (!sv.empty() && std::isspace(static_cast<unsigned char>(sv.back()))) sv.remove_suffix(1);
    if (sv.empty()) continue;
    const std::string where = "line " + std::to_string(start_line);
    if (sv.front() == '[') {
      if (sv.back() != ']' || sv.starts_with("[[")) throw ConfigError(where, "malformed table header");
      table = split_key(sv.substr(1, sv.size() - 2), start_line);
      json* node = &root;
      for (const auto& part : table) {
        json& child = (*node)[part];
        if (child.is_null()) child = json::object();
        if (!child.is_object()) throw ConfigError(where, "'" + part + "' is not a table");
        node = &child;
      }
      continue;
    }
    const auto eq = sv.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where, "expected key = value");
    auto path = table;
    for (auto& p : split_key(sv.substr(0, eq), start_line)) path.push_back(std::move(p));
    set_path(root, path, ValueParser(sv.substr(eq + 1), start_line).parse_whole(), where);
  }
  return root;
}

json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  if (path.extension() == ".json") {
    json j;
    try {
      j = json::parse(buf.str());
    } catch (const json::exception& e) {
      throw ConfigError("config", path.string() + ": " + e.what());
    }
    if (j.contains("config") && j.at("config").is_object()) return j.at("config");
    return j;
  }
  return parse_config_text(buf.str());
}

void apply_override(json& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override", "expected key=value, got '" + std::string(assignment) + "'");
  const auto path = split_key(assignment.substr(0, eq), 0);
  const auto text = assignment.substr(eq + 1);
  json value;
  try {
    value = ValueParser(text, 0).parse_whole();
  } catch (const ConfigError&) {
    value = std::string(text);
  }
  set_path(config, path, std::move(value), "override " + std::string(assignment.substr(0, eq)));
}

RunConfig RunConfig::from_json(const json& root, const std::filesystem::path& default_output_dir) {
  if (!root.is_object()) throw ConfigError("config", "top level must be a table");
  for (const auto& [key, value] : root.items())
    if (key != "data" && key != "loss" && key != "train" && key != "output")
      throw ConfigError(key, "unknown section");

  RunConfig rc;
  std::string train_uri, test_uri;
  bool csv_header = false;
  Fields data(table_or_null(root, "data"), "data");
  data.read("train", train_uri);
  data.read("test", test_uri);
  data.read("csv_header", csv_header);
  data.read("validation_fraction", rc.validation_fraction);
  data.read("split_seed", rc.split_seed);
  data.finish();
  if (train_uri.empty()) throw ConfigError("data.train", "is required");
  auto parse_source = [&](const std::string& uri, const char* field) {
    try {
      DatasetSource s = DatasetSource::parse(uri);
      s.csv_header = csv_header;
      return s;
    } catch (const ConfigError& e) {
      throw ConfigError(field, e.what());
    }
  };
  rc.data = parse_source(train_uri, "data.train");
  if (!test_uri.empty()) rc.test_data = parse_source(test_uri, "data.test");
  if (!(rc.validation_fraction > 0.0 && rc.validation_fraction < 1.0))
    throw ConfigError("data.validation_fraction", "must lie in (0, 1)");

  LossConfig& loss = rc.train.loss;
  std::string kind = std::string(to_string(loss.kind));
  std::string nce_mode = std::string(to_string(loss.nce_mode));
  Fields lf(table_or_null(root, "loss"), "loss");
  lf.read("kind", kind);
  lf.read("gamma", loss.gamma);
  lf.read("alpha", loss.alpha);
  lf.read("t", loss.t);
  lf.read("q", loss.q);
  lf.read("nce_mode", nce_mode);
  lf.read("mc_samples", loss.mc_samples);
  lf.read("mc_seed", loss.mc_seed);
  lf.finish();
  loss.kind = parse_loss_kind(kind);
  loss.nce_mode = parse_nce_mode(nce_mode);

  TrainConfig& t = rc.train;
  Fields tf(table_or_null(root, "train"), "train");
  tf.read("batch_size", t.batch_size);
  tf.read("steps", t.steps);
  tf.read("learning_rates", t.learning_rates);
  tf.read("seed", t.seed);
  tf.read("hidden", t.hidden);
  tf.read("batch_norm", t.batch_norm);
  tf.read("bn_momentum", t.bn_momentum);
  tf.read("bn_epsilon", t.bn_epsilon);
  tf.read("log_every", t.log_every);
  tf.read("probe_size", t.probe_size);
  tf.finish();

  rc.output_dir = default_output_dir;
  Fields of(table_or_null(root, "output"), "output");
  of.read("dir", rc.output_dir);
  of.finish();
  if (rc.output_dir.empty()) throw ConfigError("output.dir", "is required");

  rc.train.validate();
  return rc;
}

json RunConfig::to_json() const {
  json tj = slc::to_json(train);
  tj.erase("loss");
  json data_j{{"train", data.uri()},
              {"csv_header", data.csv_header},
              {"validation_fraction", validation_fraction},
              {"split_seed", split_seed}};
  if (test_data) data_j["test"] = test_data->uri();
  return {{"data", data_j},
          {"loss", slc::to_json(train.loss)},
          {"train", tj},
          {"output", {{"dir", output_dir.string()}}}};
}

}  // namespace slc
