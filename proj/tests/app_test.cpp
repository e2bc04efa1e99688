#include "cbm/app.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace cbm::app {
namespace {

namespace fs = std::filesystem;

const std::string kOneAsset = R"({
  "model": {"m": 1, "n": 1, "R": 1.0, "S0": [1.0, 1.0], "D": [0.5], "U": [2.0]},
  "option": {"c": [0.0, 1.0], "K": 1.0}
})";

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

class AppTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cbm_app_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunConfig config(const std::string& text = kOneAsset) {
    RunConfig c = parse_config(text);
    c.run.out_dir = dir_.string();
    c.run.samples = 20000;
    return c;
  }

  fs::path dir_;
};

TEST(Config, ParsesDefaultsAndComments) {
  const RunConfig c = parse_config("// comment\n" + kOneAsset);
  EXPECT_EQ(c.model.m, 1u);
  EXPECT_EQ(c.run.samples, 100000u);
  EXPECT_EQ(c.run.seed, 42u);
  EXPECT_DOUBLE_EQ(c.run.beta, 1e-3);
  EXPECT_FALSE(c.run.target.has_value());
}

TEST(Config, MissingFieldNamesIt) {
  try {
    parse_config(R"({"model": {"m": 1, "n": 1, "R": 1.0, "S0": [1, 1], "D": [0.5], "U": [2]}, "option": {"c": [0, 1]}})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_STREQ(e.what(), "option.K required");
  }
}

TEST(Config, ModelViolationNamesField) {
  try {
    parse_config(R"({"model": {"m": 1, "n": 1, "R": 1.0, "S0": [1, 1], "D": [1.5], "U": [2]}, "option": {"c": [0, 1], "K": 1}})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("model.D[0]", 0), 0u) << e.what();
  }
}

TEST(Config, ParseErrorReportsLine) {
  try {
    parse_config("{\n\"model\": {\n,\n}", "bad.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("bad.json:3:", 0), 0u) << e.what();
  }
}

TEST(Config, UnknownFieldsRejected) {
  EXPECT_THROW(parse_config(R"({"model": {"m": 1, "n": 1, "R": 1.0, "S0": [1, 1], "D": [0.5], "U": [2]},
                               "option": {"c": [0, 1], "K": 1}, "run": {"sampels": 10}})"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"model": {"m": 1, "n": 1, "R": 1.0, "S0": [1, 1], "D": [0.5], "U": [2]},
                               "option": {"c": [0, 1], "K": 1}, "extra": 1})"),
               ConfigError);
}

TEST(Config, RunValidation) {
  RunConfig c = parse_config(kOneAsset);
  c.run.fault_inject = "nonsense";
  EXPECT_THROW(validate_config(c), ConfigError);
  c.run.fault_inject.clear();
  c.run.path = {{1.5}};
  EXPECT_THROW(validate_config(c), ConfigError);
  c.run.path = {{0.5}, {0.5}};
  EXPECT_THROW(validate_config(c), ConfigError);
  c.run.path.clear();
  c.run.beta = 0.0;
  EXPECT_THROW(validate_config(c), ConfigError);
}

TEST(Config, RoundTripThroughJson) {
  RunConfig c = parse_config(kOneAsset);
  c.run.target = 0.25;
  const RunConfig back = parse_config(c.to_json().dump());
  EXPECT_EQ(back.to_json(), c.to_json());
}

TEST(Config, ShippedExamplesLoad) {
  for (const auto& entry : fs::directory_iterator(CBM_EXAMPLES_DIR)) {
    if (entry.path().extension() == ".json") EXPECT_NO_THROW(load_config(entry.path().string())) << entry.path();
  }
  EXPECT_THROW(load_config("/nonexistent/config.json"), IoError);
}

TEST_F(AppTest, PriceWritesReport) {
  std::ostringstream out;
  EXPECT_EQ(cmd_price(config(), out), kOk);
  const auto report = nlohmann::json::parse(read_file(dir_ / "price.json"));
  EXPECT_NEAR(report["gamma_max"].get<double>(), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(report["gamma_min"].get<double>(), 0.0, 1e-15);
  EXPECT_NE(out.str().find("gamma_max(F,0)"), std::string::npos);
}

TEST_F(AppTest, PriceDumpsTerms) {
  RunConfig c = config();
  c.run.dump_terms = true;
  std::ostringstream out;
  EXPECT_EQ(cmd_price(c, out), kOk);
  EXPECT_NE(read_file(dir_ / "terms.csv").find("n_0,n_1,"), std::string::npos);
}

TEST_F(AppTest, HedgePassesOnEveryPathKind) {
  for (const char* kind : {"random", "all-up", "all-down", "all-b"}) {
    RunConfig c = config();
    c.model.n = 3;
    c.run.path_kind = kind;
    std::ostringstream out;
    EXPECT_EQ(cmd_hedge(c, out), kOk) << kind;
    EXPECT_TRUE(fs::exists(dir_ / "hedge.csv"));
  }
}

TEST_F(AppTest, SimulateIsDeterministic) {
  RunConfig c = config();
  c.model.n = 2;
  std::ostringstream first_out;
  std::ostringstream second_out;
  EXPECT_EQ(cmd_simulate(c, first_out), kOk) << first_out.str();
  const std::string first = read_file(dir_ / "mc_report.csv");
  EXPECT_EQ(cmd_simulate(c, second_out), kOk);
  EXPECT_EQ(read_file(dir_ / "mc_report.csv"), first);
  EXPECT_NE(first.find("vertex-boxes"), std::string::npos);
}

TEST_F(AppTest, DeformSolvesTarget) {
  RunConfig c = config();
  c.run.target = 0.2;
  c.run.sweep_points = 5;
  std::ostringstream out;
  EXPECT_EQ(cmd_deform(c, out), kOk);
  const auto report = nlohmann::json::parse(read_file(dir_ / "deform.json"));
  EXPECT_NEAR(report["solution"]["phi"].get<double>(), 0.2, 1e-9 * (1.0 + 1.0 / 3.0));
}

TEST_F(AppTest, VerifyPassesAndDetectsFault) {
  RunConfig c = config();
  c.model.n = 3;
  std::ostringstream out;
  EXPECT_EQ(cmd_verify(c, out), kOk) << out.str();
  EXPECT_TRUE(fs::exists(dir_ / "verify.json"));
  c.run.fault_inject = "perturb-q0";
  std::ostringstream faulty;
  EXPECT_EQ(cmd_verify(c, faulty), kVerificationFailure);
  EXPECT_NE(faulty.str().find("FAIL"), std::string::npos);
}

TEST_F(AppTest, UnwritableOutputIsIoError) {
  RunConfig c = config();
  c.run.out_dir = "/proc/cbm_cannot_write_here";
  std::ostringstream out;
  EXPECT_THROW(cmd_price(c, out), IoError);
}

}  // namespace
}  // namespace cbm::app
