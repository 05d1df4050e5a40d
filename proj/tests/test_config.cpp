#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "slc/config.hpp"
#include "slc/errors.hpp"

namespace slc {
namespace {

using nlohmann::json;

std::string field_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

TEST(ConfigParser, ScalarsTablesAndArrays) {
  const json j = parse_config_text(R"(
# leading comment
title = "basic \"quoted\" \t string"  # trailing comment
path = 'C:\raw\#not-a-comment'
[train]
steps = 20_000
rate = 1e-3
negative = -4
flag = true
off = false
rates = [1.0, 0.1,
         0.01]   # multi-line
nested = [[1, 2], []]
[a.b]
c.d = 5
)");
  EXPECT_EQ(j["title"], "basic \"quoted\" \t string");
  EXPECT_EQ(j["path"], "C:\\raw\\#not-a-comment");
  EXPECT_EQ(j["train"]["steps"], 20000);
  EXPECT_TRUE(j["train"]["steps"].is_number_integer());
  EXPECT_EQ(j["train"]["rate"].get<double>(), 1e-3);
  EXPECT_EQ(j["train"]["negative"], -4);
  EXPECT_EQ(j["train"]["flag"], true);
  EXPECT_EQ(j["train"]["off"], false);
  EXPECT_EQ(j["train"]["rates"], json::array({1.0, 0.1, 0.01}));
  EXPECT_EQ(j["train"]["nested"], json::parse("[[1,2],[]]"));
  EXPECT_EQ(j["a"]["b"]["c"]["d"], 5);
}

TEST(ConfigParser, ErrorsNameTheLine) {
  EXPECT_EQ(field_of([] { parse_config_text("a = 1\nb 2\n"); }), "line 2");
  EXPECT_EQ(field_of([] { parse_config_text("a = \"open\n"); }), "line 1");
  EXPECT_EQ(field_of([] { parse_config_text("x = 1\n\n[[arr]]\n"); }), "line 3");
  EXPECT_EQ(field_of([] { parse_config_text("a = 1 2\n"); }), "line 1");
  EXPECT_EQ(field_of([] { parse_config_text("a..b = 1\n"); }), "line 1");
  EXPECT_EQ(field_of([] { parse_config_text("a = 1\na.b = 2\n"); }), "line 2");
  EXPECT_EQ(field_of([] { parse_config_text("a = nope\n"); }), "line 1");
}

TEST(ConfigOverrides, TypedValuesAndBareStrings) {
  json j = parse_config_text("[loss]\nkind = \"ce\"\n");
  apply_override(j, "loss.kind=batch_ce");
  apply_override(j, "train.steps=50");
  apply_override(j, "train.learning_rates=[0.5, 0.05]");
  apply_override(j, "train.batch_norm=false");
  apply_override(j, "data.train=synth:k=3,n=2,d=2,spread=0,seed=1");
  EXPECT_EQ(j["loss"]["kind"], "batch_ce");
  EXPECT_EQ(j["train"]["steps"], 50);
  EXPECT_EQ(j["train"]["learning_rates"], json::array({0.5, 0.05}));
  EXPECT_EQ(j["train"]["batch_norm"], false);
  EXPECT_EQ(j["data"]["train"], "synth:k=3,n=2,d=2,spread=0,seed=1");
  EXPECT_EQ(field_of([&] { apply_override(j, "no-equals"); }), "override");
  EXPECT_EQ(field_of([&] { apply_override(j, "=1"); }), "override");
  EXPECT_EQ(field_of([&] { apply_override(j, "loss.kind.x=1"); }), "override loss.kind.x");
}

const char* kMinimal = R"(
[data]
train = "synth:k=3,n=10,d=4,spread=0.1,seed=1"
)";

TEST(RunConfigTest, DefaultsAndRoundTrip) {
  const RunConfig rc = RunConfig::from_json(parse_config_text(kMinimal), "runs/x");
  EXPECT_EQ(rc.data.kind, DatasetSource::Kind::synth);
  EXPECT_FALSE(rc.test_data.has_value());
  EXPECT_EQ(rc.validation_fraction, 0.1);
  EXPECT_EQ(rc.output_dir, "runs/x");
  EXPECT_EQ(rc.train.loss.kind, LossKind::ce);
  EXPECT_EQ(rc.train.batch_size, 64u);
  const RunConfig again = RunConfig::from_json(rc.to_json(), "elsewhere");
  EXPECT_EQ(again.to_json(), rc.to_json());
}

TEST(RunConfigTest, FullConfig) {
  const RunConfig rc = RunConfig::from_json(parse_config_text(R"(
[data]
train = "synth:k=3,n=10,d=4,spread=0.1,seed=1"
test = "synth:k=3,n=10,d=4,spread=0.1,seed=1,noise_seed=5"
validation_fraction = 0.2
split_seed = 4
[loss]
kind = "nce"
t = 3
q = [0.2, 0.3, 0.5]
nce_mode = "monte_carlo"
mc_samples = 7
[train]
batch_size = 8
steps = 10
learning_rates = [0.5]
hidden = [4]
batch_norm = false
[output]
dir = "out/here"
)"),
                                            "ignored");
  ASSERT_TRUE(rc.test_data.has_value());
  EXPECT_EQ(rc.test_data->synth.noise_seed, 5u);
  EXPECT_EQ(rc.validation_fraction, 0.2);
  EXPECT_EQ(rc.split_seed, 4u);
  EXPECT_EQ(rc.train.loss.kind, LossKind::nce);
  EXPECT_EQ(rc.train.loss.t, 3u);
  EXPECT_EQ(rc.train.loss.nce_mode, NceMode::monte_carlo);
  EXPECT_EQ(rc.train.loss.q, (std::vector<double>{0.2, 0.3, 0.5}));
  EXPECT_EQ(rc.train.hidden, (std::vector<std::size_t>{4}));
  EXPECT_FALSE(rc.train.batch_norm);
  EXPECT_EQ(rc.output_dir, "out/here");
}

TEST(RunConfigTest, ErrorsNameTheField) {
  auto with = [](const std::string& extra) {
    return [extra] { RunConfig::from_json(parse_config_text(std::string(kMinimal) + extra), "runs"); };
  };
  EXPECT_EQ(field_of(with("color = 1\n")), "data.color");
  EXPECT_EQ(field_of(with("[loss]\nkind = \"softmax\"\n")), "loss.kind");
  EXPECT_EQ(field_of(with("[loss]\ngamma = \"big\"\n")), "loss.gamma");
  EXPECT_EQ(field_of(with("[train]\nsteps = -1\n")), "train.steps");
  EXPECT_EQ(field_of(with("[train]\nsteps = 2.5\n")), "train.steps");
  EXPECT_EQ(field_of(with("[train]\nbatch_size = 0\n")), "train.batch_size");
  EXPECT_EQ(field_of(with("[train]\nbatch_norm = 1\n")), "train.batch_norm");
  EXPECT_EQ(field_of(with("[train]\nhidden = [4, \"x\"]\n")), "train.hidden");
  EXPECT_EQ(field_of(with("[model]\nx = 1\n")), "model");
  EXPECT_EQ(field_of(with("validation_fraction = 1.0\n")), "data.validation_fraction");
  EXPECT_EQ(field_of([] { RunConfig::from_json(parse_config_text("[train]\nsteps = 1\n"), "runs"); }),
            "data.train");
  EXPECT_EQ(field_of([] { RunConfig::from_json(parse_config_text("[data]\ntrain = \"ftp://x\"\n"), "runs"); }),
            "data.train");
}

TEST(ConfigFile, TomlJsonAndManifest) {
  const auto dir = std::filesystem::temp_directory_path() / "slc_config_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "a.toml") << kMinimal;
  const json toml = load_config_file(dir / "a.toml");
  std::ofstream(dir / "a.json") << toml.dump();
  std::ofstream(dir / "manifest.json") << json{{"version", "x"}, {"config", toml}}.dump();
  EXPECT_EQ(load_config_file(dir / "a.json"), toml);
  EXPECT_EQ(load_config_file(dir / "manifest.json"), toml);
  std::ofstream(dir / "bad.json") << "{";
  EXPECT_EQ(field_of([&] { load_config_file(dir / "bad.json"); }), "config");
  EXPECT_EQ(field_of([&] { load_config_file(dir / "missing.toml"); }), "config");
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace slc
