#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "llfilter");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  Result r;
  r.code = llf::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_kind(const Result& r) {
  return json::parse(r.err).at("error").at("kind").get<std::string>();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           (std::string("llfilter_cli_") + info->name() + "_" +
            std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    ::unsetenv("LLFILTER_SEED");
  }
  void TearDown() override {
    fs::remove_all(dir_);
    ::unsetenv("LLFILTER_SEED");
  }
  std::string sub(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, Help) {
  const Result r = run_cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("simulate"), std::string::npos);
  EXPECT_NE(r.out.find("convergence"), std::string::npos);
}

TEST_F(CliTest, UsageErrors) {
  Result r = run_cli({});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(error_kind(r), "usage");
  r = run_cli({"filter", "--example", "ex1", "--model", "m.json"});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(error_kind(r), "usage");
  r = run_cli({"filter", "--example", "ex1", "--beta", "3"});
  EXPECT_EQ(r.code, 2);
}

TEST_F(CliTest, ConfigAndIoErrors) {
  Result r = run_cli({"simulate", "--example", "ex9", "--out", sub("a")});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(error_kind(r), "config");
  r = run_cli({"filter", "--example", "ex1", "--grid", "1/16", "--rtol", "1e-6",
               "--out", sub("b")});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(error_kind(r), "config");
  r = run_cli({"filter", "--model", sub("missing.json"), "--out", sub("c")});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(error_kind(r), "io");
  r = run_cli({"convergence", "--example", "ex2", "--hs", "1/8", "--out",
               sub("d")});
  EXPECT_EQ(r.code, 2);
  r = run_cli({"simulate", "--example", "ex1", "--path-delta", "0.4", "--out",
               sub("e")});
  EXPECT_EQ(r.code, 2);
}

TEST_F(CliTest, SimulateIsDeterministic) {
  for (const char* run : {"r1", "r2"}) {
    const Result r = run_cli({"simulate", "--example", "ex3", "--n", "2",
                              "--seed", "5", "--out", sub(run)});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  for (const char* f : {"path_0.csv", "path_1.csv", "series_0.csv",
                        "series_1.csv", "summary.json"}) {
    ASSERT_TRUE(fs::exists(dir_ / "r1" / f)) << f;
  }
  EXPECT_EQ(slurp(dir_ / "r1" / "path_1.csv"), slurp(dir_ / "r2" / "path_1.csv"));
  EXPECT_EQ(slurp(dir_ / "r1" / "series_0.csv"),
            slurp(dir_ / "r2" / "series_0.csv"));
  EXPECT_NE(slurp(dir_ / "r1" / "path_0.csv"), slurp(dir_ / "r1" / "path_1.csv"));
}

TEST_F(CliTest, SeedEnvironmentOverride) {
  ASSERT_EQ(run_cli({"simulate", "--example", "ex1", "--seed", "1", "--out",
                     sub("plain1")}).code, 0);
  ASSERT_EQ(run_cli({"simulate", "--example", "ex1", "--seed", "2", "--out",
                     sub("plain2")}).code, 0);
  EXPECT_NE(slurp(dir_ / "plain1" / "series_0.csv"),
            slurp(dir_ / "plain2" / "series_0.csv"));
  ::setenv("LLFILTER_SEED", "2", 1);
  ASSERT_EQ(run_cli({"simulate", "--example", "ex1", "--seed", "1", "--out",
                     sub("env")}).code, 0);
  EXPECT_EQ(slurp(dir_ / "env" / "series_0.csv"),
            slurp(dir_ / "plain2" / "series_0.csv"));
  ::setenv("LLFILTER_SEED", "two", 1);
  const Result bad = run_cli({"simulate", "--example", "ex1", "--out", sub("x")});
  EXPECT_EQ(bad.code, 2);
}

TEST_F(CliTest, FilterFromSeriesMatchesSimulatedRealization) {
  ASSERT_EQ(run_cli({"simulate", "--example", "ex1", "--seed", "3", "--out",
                     sub("sim")}).code, 0);
  const Result a = run_cli({"filter", "--example", "ex1", "--seed", "3",
                            "--grid", "adaptive", "--rtol", "5e-9", "--out",
                            sub("fa")});
  ASSERT_EQ(a.code, 0) << a.err;
  const Result b = run_cli({"filter", "--example", "ex1", "--series",
                            sub("sim/series_0.csv"), "--rtol", "5e-9", "--out",
                            sub("fb")});
  ASSERT_EQ(b.code, 0) << b.err;
  const std::string csv = slurp(dir_ / "fa" / "filter_run.csv");
  EXPECT_EQ(csv, slurp(dir_ / "fb" / "filter_run.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 10);
  const json s = json::parse(a.out);
  EXPECT_EQ(s.at("grid"), "adaptive");
  EXPECT_GT(s.at("accepted_steps").get<long>(), 9);

  const Result c = run_cli({"filter", "--example", "ex1", "--seed", "3",
                            "--grid", "1/64", "--out", sub("fc")});
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_EQ(json::parse(c.out).at("grid"), "1/64");
  EXPECT_EQ(json::parse(c.out).at("accepted_steps"), 9 * 64);
}

TEST_F(CliTest, BenchIsDeterministic) {
  for (const char* run : {"b1", "b2"}) {
    const Result r =
        run_cli({"bench", "--example", "ex1", "--n", "4", "--batches", "2",
                 "--hs", "1/4,1/8", "--workers", run[1] == '1' ? "1" : "3",
                 "--rtol", "1e-5", "--path-delta", "1/100", "--out", sub(run)});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  for (const char* f :
       {"table_filter_mean.csv", "table_filter_variance.csv",
        "table_prediction_mean.csv", "table_prediction_variance.csv",
        "steps.csv"}) {
    ASSERT_TRUE(fs::exists(dir_ / "b1" / f)) << f;
    EXPECT_EQ(slurp(dir_ / "b1" / f), slurp(dir_ / "b2" / f)) << f;
  }
}

TEST_F(CliTest, ConvergenceReport) {
  const Result r = run_cli({"convergence", "--example", "ex2", "--target",
                            "prediction-mean", "--n", "4", "--batches", "2",
                            "--hs", "1/16,1/32", "--path-delta", "1/100",
                            "--out", sub("c")});
  ASSERT_EQ(r.code, 0) << r.err;
  const json rep = json::parse(r.out);
  EXPECT_EQ(rep.at("target"), "prediction_mean");
  EXPECT_EQ(rep.at("rows").size(), 9u);
  EXPECT_EQ(rep.at("rows")[0].at("row"), "t1/t0");
  EXPECT_NEAR(rep.at("mean_beta_hat").get<double>(), 2.0, 0.3);
  EXPECT_TRUE(fs::exists(dir_ / "c" / "order_prediction_mean.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "c" / "table_prediction_mean.csv"));
}
