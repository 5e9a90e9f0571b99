// Copyright (c) fixcert contributors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "fixcert/cli.hpp"
#include "fixcert/model_io.hpp"
#include "fixcert/mondeq.hpp"

namespace fixcert {
namespace {

namespace fs = std::filesystem;

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult invoke(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("fixcert_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::create_directories(dir_);
        model_ = (dir_ / "example.json").string();
        ASSERT_EQ(invoke({"gen-model", "--example", "--out", model_}).code, cli::kSuccess);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path dir_;
    std::string model_;
};

TEST_F(CliTest, GeneratedExampleRoundTrips) {
    const MonDeqParams m = load_model(model_);
    const MonDeqParams e = example_model();
    EXPECT_TRUE(m.P.isApprox(e.P));
    EXPECT_TRUE(m.U.isApprox(e.U));
    EXPECT_DOUBLE_EQ(m.m, e.m);
}

TEST_F(CliTest, RandomModelIsDeterministic) {
    const CliResult a = invoke({"gen-model", "--p", "5", "--q", "2", "--r", "3", "--seed", "4"});
    const CliResult b = invoke({"gen-model", "--p", "5", "--q", "2", "--r", "3", "--seed", "4"});
    ASSERT_EQ(a.code, cli::kSuccess);
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(parse_model(a.out).p(), 5);
}

TEST_F(CliTest, VerifyLocalCertifiesExample) {
    const CliResult r = invoke({"verify-local", "--model", model_, "--input", "0.2,0.5", "--eps", "0.05", "--target", "1"});
    ASSERT_EQ(r.code, cli::kSuccess) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["status"], "certified");
    EXPECT_GT(j["margin"].get<double>(), 0.0);
    EXPECT_FALSE(j.contains("wallclock"));
}

TEST_F(CliTest, ReportIsDeterministic) {
    const std::vector<std::string> args{"verify-local", "--model", model_, "--input", "0.2,0.5", "--eps", "0.05",
                                        "--target", "1"};
    EXPECT_EQ(invoke(args).out, invoke(args).out);
}

TEST_F(CliTest, TimingAndTraceFiles) {
    const std::string out = (dir_ / "r.json").string();
    const std::string trace = (dir_ / "t.csv").string();
    const CliResult r = invoke({"verify-local", "--model", model_, "--input", "0.2,0.5", "--eps", "0.05", "--target", "1",
                       "--timing", "--out", out, "--trace", trace});
    ASSERT_EQ(r.code, cli::kSuccess);
    std::ifstream f(out);
    const auto j = nlohmann::json::parse(f);
    EXPECT_TRUE(j.contains("wallclock"));
    std::ifstream t(trace);
    std::string header;
    std::getline(t, header);
    EXPECT_EQ(header.substr(0, 5), "step,");
}

TEST_F(CliTest, UnknownVerdictExitCode) {
    const CliResult r = invoke({"verify-local", "--model", model_, "--input", "0.2,0.5", "--eps", "0.3", "--target", "1"});
    EXPECT_NE(r.code, cli::kSuccess);
    EXPECT_NE(r.code, cli::kUsage);
}

TEST_F(CliTest, UsageErrors) {
    EXPECT_EQ(invoke({"verify-local", "--input", "0.2,0.5"}).code, cli::kUsage);
    EXPECT_EQ(invoke({}).code, cli::kUsage);
    EXPECT_EQ(invoke({"verify-local", "--model", model_, "--input", "0.2"}).code, cli::kUsage);
    EXPECT_EQ(invoke({"verify-local", "--model", model_, "--input", "0.2,0.5", "--g2", "bogus"}).code, cli::kUsage);
    EXPECT_EQ(invoke({"verify-local", "--model", (dir_ / "missing.json").string(), "--input", "0,0"}).code,
              cli::kUsage);
}

TEST_F(CliTest, BaselinesAgreeWithLibrary) {
    const CliResult k = invoke({"baseline", "--kind", "kleene-zonotope", "--model", model_, "--input", "0.2,0.5", "--eps",
                       "0.05", "--target", "1"});
    EXPECT_EQ(k.code, cli::kUnknown);
    const CliResult b = invoke({"baseline", "--kind", "box", "--model", model_, "--input", "0.2,0.5", "--eps", "0.05",
                       "--target", "1"});
    EXPECT_NE(b.code, cli::kSuccess);
    EXPECT_EQ(nlohmann::json::parse(b.out)["baseline"], "box");
}

TEST_F(CliTest, VerifyGlobalWritesCsv) {
    const std::string csv = (dir_ / "leaves.csv").string();
    const CliResult r = invoke({"verify-global", "--model", model_, "--lo", "0,0", "--hi", "1,1", "--max-depth", "2",
                       "--csv", csv});
    EXPECT_EQ(r.code, cli::kUnknown);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_LT(j["certified_fraction"].get<double>(), 1.0);
    EXPECT_TRUE(fs::exists(csv));
}

TEST_F(CliTest, HouseholderPrintsInterval) {
    const std::string trace = (dir_ / "h.csv").string();
    const CliResult r = invoke({"householder", "--lo", "16", "--hi", "20", "--trace", trace});
    ASSERT_EQ(r.code, cli::kSuccess) << r.err;
    EXPECT_NE(r.out.find("interval ["), std::string::npos);
    std::ifstream t(trace);
    std::string header;
    std::getline(t, header);
    EXPECT_EQ(header, "step,lo,hi");
    EXPECT_EQ(invoke({"householder", "--lo", "20", "--hi", "16"}).code, cli::kUsage);
    EXPECT_EQ(invoke({"householder", "--method", "kleene", "--unroll-k", "2"}).code, cli::kSuccess);
}

} // namespace
} // namespace fixcert
