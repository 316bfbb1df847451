#include <string>

#include <gtest/gtest.h>

#include "sgldr/config.hpp"
#include "sgldr/errors.hpp"

using namespace sgldr;

namespace {

const std::string kBase = R"(# base
[target]
name = "moe"

[sampler]
method = "sgld_r"
particles = 10
iterations = 1000
burn_in = 500
thin = 10
seed = 1

[step]
schedule = "constant"
epsilon = 2.0

[kernel]
mode = "rbf-median"
)";

// Returns the ConfigError line, or 0 when parsing succeeded.
std::size_t error_line(const std::string& text, std::string* message = nullptr) {
  try {
    parse_experiment_config(text);
  } catch (const ConfigError& e) {
    if (message) *message = e.what();
    return e.line() == 0 ? static_cast<std::size_t>(-1) : e.line();
  }
  return 0;
}

std::string with(const std::string& extra) { return kBase + extra; }

}  // namespace

TEST(ConfigDocument, ParsesSectionsListsAndComments) {
  const ConfigDocument doc = ConfigDocument::parse("# c\n[a]\nx = 1.5  # trailing\nname = \"q # r\"\n[b]\nv = [1, 2.5]\nf = true\n");
  EXPECT_EQ(doc.get_double("a.x"), 1.5);
  EXPECT_EQ(doc.get_string("a.name"), "q # r");
  EXPECT_EQ(doc.get_double_list("b.v"), (std::vector<double>{1.0, 2.5}));
  EXPECT_EQ(doc.get_bool("b.f"), true);
  EXPECT_EQ(doc.line_of("b.v"), 6u);
  EXPECT_FALSE(doc.get_double("a.missing").has_value());
}

TEST(ConfigDocument, DuplicateAndMalformedLines) {
  EXPECT_THROW(ConfigDocument::parse("[a]\nx = 1\nx = 2\n"), ConfigError);
  EXPECT_THROW(ConfigDocument::parse("[a\n"), ConfigError);
  EXPECT_THROW(ConfigDocument::parse("[a]\njust words\n"), ConfigError);
  EXPECT_THROW(ConfigDocument::parse("[a]\nx =\n"), ConfigError);
}

TEST(ExperimentConfig, BundledConfigsParse) {
  for (const char* name : {"moe_sgld", "moe_sgldr", "mog_sgld", "mog_sgldr"}) {
    const ExperimentConfig c = load_experiment_config(std::string(SGLDR_SOURCE_DIR) + "/configs/" + name + ".toml");
    EXPECT_EQ(c.sampler.total_iterations, 1000u) << name;
    EXPECT_EQ(c.sampler.burn_in, 500u) << name;
    EXPECT_EQ(c.sampler.thin, 10u) << name;
    EXPECT_FALSE(c.source_text.empty());
  }
  const ExperimentConfig moe = load_experiment_config(std::string(SGLDR_SOURCE_DIR) + "/configs/moe_sgldr.toml");
  EXPECT_EQ(moe.target.name, "moe");
  EXPECT_EQ(moe.sampler.method, Method::SgldR);
  EXPECT_EQ(moe.sampler.particle_count, 10u);
  const ExperimentConfig mog = load_experiment_config(std::string(SGLDR_SOURCE_DIR) + "/configs/mog_sgld.toml");
  EXPECT_EQ(mog.target.name, "mog3x3");
  EXPECT_EQ(mog.sampler.method, Method::Sgld);
  EXPECT_EQ(mog.sampler.particle_count, 20u);
  EXPECT_TRUE(mog.diagnostics.mode_coverage);
}

TEST(ExperimentConfig, BaseParses) {
  const ExperimentConfig c = parse_experiment_config(kBase);
  EXPECT_EQ(c.sampler.step.epsilon, 2.0);
  EXPECT_EQ(c.sampler.kernel_mode, KernelMode::RbfMedian);
  EXPECT_EQ(c.sampler.seed, 1u);
  EXPECT_EQ(c.source_text, kBase);
}

TEST(ExperimentConfig, UnknownKeyNamesKeyAndLine) {
  std::string msg;
  const std::string text = with("modee = \"identity\"\n");
  const std::size_t line = error_line(text, &msg);
  EXPECT_EQ(line, 19u);
  EXPECT_NE(msg.find("kernel.modee"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 19"), std::string::npos) << msg;
  EXPECT_NE(error_line(with("[extra]\nx = 1\n")), 0u);
}

TEST(ExperimentConfig, KernelBandwidthConsistency) {
  std::string fixed = kBase;
  fixed.replace(fixed.find("rbf-median"), 10, "rbf-fixed");
  EXPECT_NE(error_line(fixed), 0u);
  EXPECT_EQ(error_line(fixed + "h = 0.5\n"), 0u);
  EXPECT_EQ(parse_experiment_config(fixed + "h = 0.5\n").sampler.kernel_h, 0.5);
  EXPECT_EQ(error_line(with("h = 0.5\n")), 19u);
  EXPECT_NE(error_line(fixed + "h = -1\n"), 0u);
}

TEST(ExperimentConfig, TargetKeysMustMatchTarget) {
  std::string mog = kBase;
  mog.replace(mog.find("\"moe\""), 5, "\"mog3x3\"");
  EXPECT_EQ(error_line(mog), 0u);
  std::string bad = mog;
  bad.insert(bad.find("\n[sampler]"), "\nrates = [1.0]");
  EXPECT_NE(error_line(bad), 0u);
  std::string dim = mog;
  dim.insert(dim.find("\n[sampler]"), "\ndim = 2");
  EXPECT_NE(error_line(dim), 0u);
  std::string unknown = kBase;
  unknown.replace(unknown.find("\"moe\""), 5, "\"banana\"");
  EXPECT_EQ(error_line(unknown), 3u);
}

TEST(ExperimentConfig, MoeWeightsValidated) {
  auto moe = [](const std::string& lines) {
    std::string t = kBase;
    t.insert(t.find("\n[sampler]"), "\n" + lines);
    return t;
  };
  EXPECT_EQ(error_line(moe("rates = [2.0, 1.0]\nweights = [0.25, 0.75]")), 0u);
  EXPECT_NE(error_line(moe("rates = [2.0, 1.0]\nweights = [0.5, 0.6]")), 0u);
  EXPECT_NE(error_line(moe("rates = [2.0]\nweights = [0.5, 0.5]")), 0u);
  EXPECT_NE(error_line(moe("rates = [-2.0, 1.0]\nweights = [0.5, 0.5]")), 0u);
  const ExperimentConfig c = parse_experiment_config(moe("rates = [2.0, 1.0]\nweights = [0.25, 0.75]"));
  EXPECT_EQ(c.target.rates, (std::vector<double>{2.0, 1.0}));
}

TEST(ExperimentConfig, StepScheduleKeys) {
  std::string poly = kBase;
  const std::string old = "schedule = \"constant\"\nepsilon = 2.0";
  poly.replace(poly.find(old), old.size(), "schedule = \"polynomial\"\na = 0.1\nb = 1.0\ngamma = 0.55");
  const ExperimentConfig c = parse_experiment_config(poly);
  EXPECT_EQ(c.sampler.step.kind, StepSchedule::Kind::Polynomial);
  EXPECT_EQ(c.sampler.step.gamma, 0.55);
  std::string mixed = kBase;
  mixed.insert(mixed.find("\n[kernel]"), "gamma = 0.55\n");
  EXPECT_NE(error_line(mixed), 0u);
  std::string neg = kBase;
  neg.replace(neg.find("epsilon = 2.0"), 13, "epsilon = 0");
  EXPECT_NE(error_line(neg), 0u);
}

TEST(ExperimentConfig, SamplerValuesValidated) {
  std::string burn = kBase;
  burn.replace(burn.find("burn_in = 500"), 13, "burn_in = 1000");
  EXPECT_NE(error_line(burn), 0u);
  std::string method = kBase;
  method.replace(method.find("\"sgld_r\""), 8, "\"langevin\"");
  EXPECT_EQ(error_line(method), 6u);
  std::string neg = kBase;
  neg.replace(neg.find("particles = 10"), 14, "particles = -3");
  EXPECT_EQ(error_line(neg), 7u);
}

TEST(ExperimentConfig, MissingFileIsConfigError) {
  EXPECT_THROW(load_experiment_config("/nonexistent/x.toml"), ConfigError);
}
