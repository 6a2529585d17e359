#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "harness.hpp"

namespace fs = std::filesystem;
using namespace adafilter::harness;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

class HarnessTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("adafilter_harness_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  ExperimentConfig config(Scenario s, const std::string& model = "headline.json") const {
    ExperimentConfig c;
    c.scenario = s;
    c.model_path = fs::path(ADAFILTER_MODEL_DIR) / model;
    c.n = 10;
    c.seeds = {42};
    c.out_dir = root_ / "a";
    return c;
  }

  fs::path root_;
};

}  // namespace

TEST(HarnessFormat, RoundTripReals) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456.789, -2.5e-17}) {
    EXPECT_EQ(std::stod(format_real(v)), v);
  }
  EXPECT_EQ(format_real(std::numeric_limits<double>::infinity()), "inf");
}

TEST(HarnessScenario, NamesRoundTrip) {
  for (const char* name : {"simulate", "filter", "posterior", "stability", "bounds", "metrics", "identifiability"}) {
    const auto s = parse_scenario(name);
    ASSERT_TRUE(s.has_value());
    EXPECT_EQ(to_string(*s), name);
  }
  EXPECT_FALSE(parse_scenario("smooth").has_value());
}

TEST_F(HarnessTest, SimulateTwiceIsIdentical) {
  auto c = config(Scenario::simulate);
  ASSERT_EQ(run(c).exit_code, kExitOk);
  const auto first = slurp(c.out_dir / "trajectory.csv");
  c.out_dir = root_ / "b";
  ASSERT_EQ(run(c).exit_code, kExitOk);
  EXPECT_EQ(first, slurp(c.out_dir / "trajectory.csv"));
  EXPECT_EQ(std::count(first.begin(), first.end(), '\n'), 11);
}

TEST_F(HarnessTest, MetricsOnFlipKernel) {
  auto c = config(Scenario::metrics, "flip.json");
  ASSERT_EQ(run(c).exit_code, kExitOk);
  const auto report = nlohmann::json::parse(slurp(c.out_dir / "report.json"));
  const auto& k = report["result"]["kernels"][0];
  EXPECT_NEAR(k["epsilon"].get<double>(), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(k["tau"].get<double>(), 0.8, 1e-12);
}

TEST_F(HarnessTest, PosteriorOnSingletonGrid) {
  const fs::path model = root_ / "single.json";
  fs::create_directories(root_);
  std::ofstream(model) << R"({"states": 2, "h": [0, 1], "sigma": 0.5, "param_grid": [[0.5]],
    "kernel_template": {"name": "affine", "base": [[1, 0], [0.3, 0.7]], "slopes": [[[-1, 1], [0, 0]]]},
    "prior": [1], "initial": [0.5, 0.5], "true_param_index": 0})";
  auto c = config(Scenario::posterior);
  c.model_path = model;
  ASSERT_EQ(run(c).exit_code, kExitOk);
  const auto report = nlohmann::json::parse(slurp(c.out_dir / "report.json"));
  EXPECT_EQ(report["result"]["mean_terminal_mass_outside"].get<double>(), 0.0);
}

TEST_F(HarnessTest, ManifestListsEveryFile) {
  auto c = config(Scenario::filter);
  c.particles = 50;
  c.seeds = {2, 1};
  const auto r = run(c);
  ASSERT_EQ(r.exit_code, kExitOk);
  const auto manifest = nlohmann::json::parse(slurp(c.out_dir / "manifest.json"));
  std::set<std::string> listed;
  for (const auto& f : manifest["files"]) listed.insert(f.get<std::string>());
  for (const auto& e : fs::directory_iterator(c.out_dir)) {
    EXPECT_TRUE(listed.count(e.path().filename().string())) << e.path();
  }
  EXPECT_TRUE(listed.count("filter_seed1.csv"));
  EXPECT_TRUE(listed.count("particles_seed2.csv"));
  EXPECT_EQ(manifest["config_hash"].get<std::string>().size(), 16u);
  EXPECT_EQ(manifest["seeds"], nlohmann::json({2, 1}));

  const std::string csv = slurp(c.out_dir / "filter_seed1.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,param_index,state_index,weight,param_posterior,log_normalizer");
}

TEST_F(HarnessTest, ConfigHashIgnoresOutputDirectory) {
  auto a = config(Scenario::posterior);
  auto b = a;
  b.out_dir = root_ / "elsewhere";
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.eta = 0.2;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST_F(HarnessTest, ExitCodes) {
  auto c = config(Scenario::posterior, "symmetric.json");
  auto r = run(c);
  EXPECT_EQ(r.exit_code, kExitIdentifiability);
  EXPECT_NE(r.error_json.find("\"identifiability\""), std::string::npos);

  c = config(Scenario::stability, "symmetric.json");
  EXPECT_EQ(run(c).exit_code, kExitIdentifiability);

  c = config(Scenario::posterior);
  c.seeds.clear();
  EXPECT_EQ(run(c).exit_code, kExitConfig);

  c = config(Scenario::posterior);
  c.model_path = root_ / "missing.json";
  r = run(c);
  EXPECT_EQ(r.exit_code, kExitConfig);
  EXPECT_NE(r.error_json.find("invalid_model"), std::string::npos);

  fs::create_directories(root_);
  const fs::path absorbing = root_ / "absorbing.json";
  std::ofstream(absorbing) << R"({"states": 2, "h": [0, 1], "sigma": 0.5, "param_grid": [[0.0], [0.5]],
    "kernels": [[[0.5, 0.5], [0.3, 0.7]], [[1, 0], [0.5, 0.5]]], "prior": "uniform", "initial": [0.5, 0.5],
    "true_param_index": 1})";
  c = config(Scenario::bounds);
  c.model_path = absorbing;
  EXPECT_EQ(run(c).exit_code, kExitNotApplicable);
}

TEST_F(HarnessTest, InvalidModelIssuesCarryPointers) {
  fs::create_directories(root_);
  const fs::path bad = root_ / "bad.json";
  std::ofstream(bad) << R"({"states": 2, "h": [0, 1], "sigma": 0.5, "param_grid": [[0.1]],
    "kernels": [[[0.5, 0.4], [0.3, 0.7]]], "prior": [1], "initial": [0.5, 0.5]})";
  auto c = config(Scenario::simulate);
  c.model_path = bad;
  const auto r = run(c);
  EXPECT_EQ(r.exit_code, kExitConfig);
  const auto err = nlohmann::json::parse(r.error_json);
  ASSERT_FALSE(err["issues"].empty());
  EXPECT_EQ(err["issues"][0]["pointer"], "/kernels/0/0");
}

TEST_F(HarnessTest, AlphaRequiredWhenFileHasNone) {
  auto c = config(Scenario::simulate, "symmetric.json");
  EXPECT_EQ(run(c).exit_code, kExitOk);  // file supplies true_param_index
  fs::create_directories(root_);
  const fs::path plain = root_ / "plain.json";
  std::ofstream(plain) << R"({"states": 2, "h": [0, 1], "sigma": 0.5, "param_grid": [[0.1]],
    "kernels": [[[0.5, 0.5], [0.3, 0.7]]], "prior": [1], "initial": [0.5, 0.5]})";
  c.model_path = plain;
  EXPECT_EQ(run(c).exit_code, kExitConfig);
  c.alpha = 0;
  EXPECT_EQ(run(c).exit_code, kExitOk);
}
