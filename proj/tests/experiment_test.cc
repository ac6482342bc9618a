#include "rkhspi/experiment.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "rkhspi/errors.h"

namespace rkhspi {
namespace {

namespace fs = std::filesystem;

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

fs::path ScratchDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rkhspi_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string ErrorOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(ExperimentConfigTest, ParsesKeysCommentsAndBlankLines) {
  const ExperimentConfig cfg = ParseConfig(
      "# toy run\n"
      "problem.name = vdp\n"
      "\n"
      "kernel.name=linear-matern   # trailing comment\n"
      "kernel.gamma_squared = 4\n"
      "greedy.max_centers = 12\n"
      "train.seed = 18446744073709551615\n"
      "pi.epsilon = 1e-6\n");
  EXPECT_EQ(cfg.problem_name, "vdp");
  EXPECT_EQ(cfg.kernel_name, "linear-matern");
  EXPECT_DOUBLE_EQ(cfg.gamma, 2.0);
  EXPECT_EQ(cfg.greedy_max_centers, 12);
  EXPECT_EQ(cfg.train_seed, 18446744073709551615ull);
  EXPECT_EQ(cfg.pi_epsilon, 1e-6);
  EXPECT_EQ(cfg.test_size, ExperimentConfig{}.test_size);
}

TEST(ExperimentConfigTest, ParseErrorsNameTheLine) {
  EXPECT_NE(ErrorOf([] { ParseConfig("pi.epsilon = 1\nbogus = 3\n"); })
                .find("line 2"),
            std::string::npos);
  EXPECT_NE(ErrorOf([] { ParseConfig("greedy.batch 4\n"); }).find("line 1"),
            std::string::npos);
  EXPECT_NE(ErrorOf([] { ParseConfig("greedy.batch = four\n"); })
                .find("greedy.batch"),
            std::string::npos);
  EXPECT_FALSE(ErrorOf([] { ParseConfig("greedy.batch = 2.5\n"); }).empty());
  EXPECT_FALSE(ErrorOf([] { ParseConfig("pi.epsilon = nan\n"); }).empty());
  EXPECT_FALSE(ErrorOf([] { ParseConfig("kernel.name =\n"); }).empty());
  EXPECT_FALSE(ErrorOf([] { LoadConfig("/nonexistent/cfg.txt"); }).empty());
}

TEST(ExperimentConfigTest, Overrides) {
  ExperimentConfig cfg;
  ApplyOverride(cfg, "greedy.max_centers=7");
  ApplyOverride(cfg, " output_dir = out/x ");
  EXPECT_EQ(cfg.greedy_max_centers, 7);
  EXPECT_EQ(cfg.output_dir, "out/x");
  EXPECT_THROW(ApplyOverride(cfg, "greedy.max_centers"), ConfigError);
  EXPECT_THROW(ApplyOverride(cfg, "=3"), ConfigError);
  EXPECT_THROW(ApplyOverride(cfg, "nope=3"), ConfigError);
}

TEST(ExperimentConfigTest, Validation) {
  EXPECT_NO_THROW(ValidateConfig(ExperimentConfig{}));
  ExperimentConfig cfg;
  cfg.kernel_name = "cauchy";
  const std::string msg = ErrorOf([&] { ValidateConfig(cfg); });
  EXPECT_NE(msg.find("gaussian"), std::string::npos);
  EXPECT_NE(msg.find("linear-matern"), std::string::npos);

  const auto invalid = [](const std::string& assignment) {
    ExperimentConfig c;
    ApplyOverride(c, assignment);
    return !ErrorOf([&] { ValidateConfig(c); }).empty();
  };
  EXPECT_TRUE(invalid("problem.name=heat"));
  EXPECT_TRUE(invalid("kernel.gamma=-1"));
  EXPECT_TRUE(invalid("pi.epsilon=0"));
  EXPECT_TRUE(invalid("greedy.max_centers=0"));
  EXPECT_TRUE(invalid("verification.mode=bounds"));
  EXPECT_TRUE(invalid("jitter=lots"));
  EXPECT_TRUE(invalid("train.kind=sobol"));
  ExperimentConfig heat;
  heat.problem_name = "heat-linear";
  EXPECT_THROW(ValidateConfig(heat), ConfigError);
  heat.train_kind = "uniform";
  EXPECT_NO_THROW(ValidateConfig(heat));
}

TEST(ExperimentConfigTest, FormatRoundTrips) {
  for (const auto& preset : Presets()) {
    const std::string text = FormatConfig(preset.config);
    const ExperimentConfig back = ParseConfig(text);
    EXPECT_EQ(FormatConfig(back), text) << preset.name;
    EXPECT_EQ(back.gamma, preset.config.gamma) << preset.name;
  }
  EXPECT_EQ(ConfigEntries(ExperimentConfig{}).size(), ConfigKeys().size());
}

TEST(ExperimentConfigTest, Presets) {
  std::vector<std::string> names;
  for (const auto& p : Presets()) {
    names.push_back(p.name);
    EXPECT_NO_THROW(ValidateConfig(p.config)) << p.name;
    EXPECT_FALSE(p.description.empty());
  }
  for (const char* want : {"toy", "vdp", "heat-linear", "heat-nonlinear",
                           "heat-linear-n10"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), want), names.end())
        << want;
  }
  EXPECT_EQ(FindPreset("toy").config.problem_name, "toy");
  EXPECT_NE(ErrorOf([] { FindPreset("nope"); }).find("heat-linear"),
            std::string::npos);
}

TEST(ExperimentRunTest, ConfigErrorsReturnTwo) {
  ExperimentConfig cfg;
  cfg.kernel_name = "cauchy";
  cfg.output_dir = ScratchDir("bad").string();
  std::ostringstream log;
  EXPECT_EQ(RunExperiment(cfg, log), 2);
  EXPECT_NE(log.str().find("linear-matern"), std::string::npos);
}

TEST(ExperimentRunTest, HeatLinearSmallRun) {
  ExperimentConfig cfg = FindPreset("heat-linear-n10").config;
  cfg.output_dir = ScratchDir("heat10").string();
  std::ostringstream log;
  ASSERT_EQ(RunExperiment(cfg, log), 0) << log.str();
  const auto pi = Lines(ReadFile(fs::path(cfg.output_dir) / "pi.csv"));
  ASSERT_GE(pi.size(), 2u);
  EXPECT_EQ(pi[0],
            "iter,e_eta,res_ghjb,error_pi,feasible,worst_lower_violation,"
            "worst_upper_violation,rkhs_norm,jitter_used");
  EXPECT_NE(pi.back().find(','), std::string::npos);
  const std::string manifest =
      ReadFile(fs::path(cfg.output_dir) / "manifest.json");
  EXPECT_NE(manifest.find("\"status\""), std::string::npos);
  EXPECT_NE(manifest.find("heat_k_condition"), std::string::npos);
  const auto centers = Lines(ReadFile(fs::path(cfg.output_dir) /
                                      "centers.csv"));
  EXPECT_EQ(centers[0], "x1,x2,x3,x4,x5,x6,x7,x8,x9,x10");
}

TEST(ExperimentRunTest, ToyGreedyTrace) {
  ExperimentConfig cfg;
  cfg.train_size = 20;
  cfg.greedy_max_centers = 25;
  cfg.pi_max_iters = 2;
  cfg.output_dir = ScratchDir("toy").string();
  std::ostringstream log;
  ASSERT_EQ(RunExperiment(cfg, log), 0) << log.str();
  const auto greedy = Lines(ReadFile(fs::path(cfg.output_dir) / "greedy.csv"));
  EXPECT_EQ(greedy[0], "n_centers,res_ghjb");
  ASSERT_EQ(greedy.size(), 26u);
  for (std::size_t i = 1; i < greedy.size(); ++i) {
    const auto comma = greedy[i].find(',');
    EXPECT_EQ(std::stoi(greedy[i].substr(0, comma)), static_cast<int>(i));
    EXPECT_GT(std::stod(greedy[i].substr(comma + 1)), 0.0);
  }
  EXPECT_EQ(Lines(ReadFile(fs::path(cfg.output_dir) / "centers.csv")).size(),
            26u);
}

}  // namespace
}  // namespace rkhspi
