#include <gtest/gtest.h>

#include "cli_test.hpp"

using namespace ammtrack;
using namespace ammtrack::testkit;

namespace {

double json_real(const std::string& path, const std::string& a, const std::string& b) {
    return json::parse(slurp(path))[a][b].get<double>();
}

int count_lines(const std::string& text) { return static_cast<int>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST(Cli, RerunIsByteIdentical) {
    TempDir d;
    const std::vector<std::string> common{"--seed", "3", "--set", "horizon=2000", "--out"};
    for (const char* cmd : {"simulate-reduced", "simulate-cpmm"}) {
        auto a = std::vector<std::string>{cmd};
        a.insert(a.end(), common.begin(), common.end());
        auto b = a;
        a.push_back(d / "a");
        b.push_back(d / "b");
        ASSERT_EQ(run_cli(a).code, cli::kOk);
        ASSERT_EQ(run_cli(b).code, cli::kOk);
        for (const char* f : {"trace.csv", "summary.json", "config.txt"}) {
            EXPECT_EQ(slurp(d / ("a/" + std::string(f))), slurp(d / ("b/" + std::string(f)))) << cmd << " " << f;
        }
    }
}

TEST(Cli, PresetOrdering) {
    TempDir d;
    std::map<std::string, double> m;
    for (const char* preset : {"strong", "baseline", "weak"}) {
        const auto r = run_cli({"simulate-reduced", "--preset", preset, "--out", d / preset, "--format", "json"});
        ASSERT_EQ(r.code, cli::kOk) << r.err;
        m[preset] = json_real(d / (std::string(preset) + "/summary.json"), "summary", "mean_excess");
    }
    EXPECT_LT(m["strong"], m["baseline"]);
    EXPECT_LT(m["baseline"], m["weak"]);
}

TEST(Cli, UsageErrors) {
    TempDir d;
    write_file(d / "bad.cfg", "lambda 0.5\n");
    EXPECT_EQ(run_cli({"simulate-reduced", "--config", d / "bad.cfg", "--out", d / "o"}).code, cli::kUsage);
    write_file(d / "unknown.cfg", "lambada = 0.5\n");
    EXPECT_EQ(run_cli({"simulate-reduced", "--config", d / "unknown.cfg", "--out", d / "o"}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"simulate-reduced", "--config", d / "missing.cfg", "--out", d / "o"}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"calibrate", d / "missing.csv", "--out", d / "o"}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"simulate-reduced", "--set", "lambda=2", "--out", d / "o"}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"simulate-reduced", "--format", "xml", "--out", d / "o"}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"no-such-command"}).code, cli::kUsage);
    EXPECT_EQ(run_cli({}).code, cli::kUsage);
}

TEST(Cli, CalibrateConstantDataSelectsNothing) {
    TempDir d;
    const auto r = run_cli({"calibrate", std::string(AMMTRACK_FIXTURE_DIR) + "/constant.csv", "--out", d / "o"});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    const auto rep = json::parse(slurp(d / "o/report.json"));
    EXPECT_TRUE(rep["selection"].is_null());
    EXPECT_EQ(rep["positive_correction_ratio"].get<double>(), 0.0);
    EXPECT_NE(slurp(d / "o/phat_curve.csv").find("lambda"), std::string::npos);
}

TEST(Cli, CalibrateFixture) {
    TempDir d;
    const auto r = run_cli({"calibrate", std::string(AMMTRACK_FIXTURE_DIR) + "/four_rows.csv", "--out", d / "o"});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    const auto rep = json::parse(slurp(d / "o/report.json"));
    EXPECT_EQ(rep["gamma_bar"].get<double>(), 0.5);
    EXPECT_EQ(rep["x_star"].get<double>(), 2.5);
    EXPECT_EQ(rep["selection"]["lambda_star"].get<double>(), 0.5);
}

TEST(Cli, CertifyJsonMatchesStdout) {
    TempDir d;
    const auto r = run_cli({"certify", "--out", d / "o"});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    const auto cert = json::parse(slurp(d / "o/certificate.json"));
    EXPECT_NE(r.out.find("rho_star = " + io::fmt_real(cert["rho_star"].get<double>())), std::string::npos);
    EXPECT_NE(r.out.find("alpha_star = " + io::fmt_real(cert["alpha_star"].get<double>())), std::string::npos);
}

TEST(Cli, Precedence) {
    TempDir d;
    write_file(d / "c.cfg", "# comment\nlambda = 0.3\np = 0.4\nhorizon = 100\n");
    const std::map<std::string, std::string> env{{"AMMTRACK_P", "0.6"}, {"AMMTRACK_HORIZON", "120"}};
    const auto r = run_cli({"simulate-reduced", "--config", d / "c.cfg", "--set", "horizon=150", "--out", d / "o"}, env);
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    const auto s = json::parse(slurp(d / "o/summary.json"))["scenario"];
    EXPECT_EQ(s["pair"]["lambda"].get<double>(), 0.3);
    EXPECT_EQ(s["pair"]["p"].get<double>(), 0.6);
    EXPECT_EQ(s["horizon"].get<int>(), 150);
    EXPECT_NE(slurp(d / "o/config.txt").find("horizon = 150"), std::string::npos);
}

TEST(Cli, SweepThreeByThree) {
    TempDir d;
    const auto r = run_cli({"sweep", "--set", "lambda_grid=0.2,0.5,0.8", "--set", "p_grid=0.3,0.6,0.9", "--set",
                            "horizon=500", "--out", d / "o"});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_EQ(count_lines(slurp(d / "o/sweep.csv")), 10);
    EXPECT_TRUE(std::filesystem::exists(d / "o/boundary.csv"));
    EXPECT_EQ(json::parse(slurp(d / "o/sweep.json"))["cells"].size(), 9u);
}

TEST(Cli, SingleCellSweepMatchesSimulate) {
    TempDir d;
    ASSERT_EQ(run_cli({"sweep", "--set", "lambda_grid=0.5", "--set", "p_grid=0.729", "--out", d / "s"}).code, cli::kOk);
    ASSERT_EQ(run_cli({"simulate-reduced", "--out", d / "r"}).code, cli::kOk);
    const double swept = json::parse(slurp(d / "s/sweep.json"))["cells"][0]["summary"]["mean_excess"].get<double>();
    EXPECT_EQ(swept, json_real(d / "r/summary.json", "summary", "mean_excess"));

    ASSERT_EQ(run_cli({"sweep", "--set", "target=cpmm", "--set", "depth_grid=1", "--set", "cost_grid=0.1", "--out",
                       d / "sc"}).code,
              cli::kOk);
    ASSERT_EQ(run_cli({"simulate-cpmm", "--out", d / "c"}).code, cli::kOk);
    const double gap = json::parse(slurp(d / "sc/sweep.json"))["cells"][0]["summary"]["mean_abs_gap"].get<double>();
    EXPECT_EQ(gap, json_real(d / "c/summary.json", "summary", "mean_abs_gap"));
}

TEST(Cli, FormatSelectsArtifacts) {
    TempDir d;
    ASSERT_EQ(run_cli({"simulate-reduced", "--set", "horizon=100", "--format", "csv", "--out", d / "o"}).code, cli::kOk);
    EXPECT_TRUE(std::filesystem::exists(d / "o/trace.csv"));
    EXPECT_FALSE(std::filesystem::exists(d / "o/summary.json"));
    EXPECT_EQ(count_lines(slurp(d / "o/trace.csv")), 101);
}

TEST(Cli, ShippedConfigsRun) {
    TempDir d;
    const std::string dir = std::string(AMMTRACK_FIXTURE_DIR) + "/../../tools/configs/";
    const std::pair<const char*, const char*> runs[]{{"simulate-reduced", "reduced.cfg"},
                                                     {"simulate-cpmm", "cpmm.cfg"},
                                                     {"sweep", "sweep_lambda_p.cfg"},
                                                     {"sweep", "sweep_depth_cost.cfg"},
                                                     {"certify", "certify.cfg"}};
    for (const auto& [cmd, cfg] : runs) {
        std::vector<std::string> args{cmd, "--config", dir + cfg, "--out", d / cfg};
        if (std::string(cmd) != "certify") {
            args.push_back("--set");
            args.push_back("horizon=300");
        }
        const auto r = run_cli(args);
        EXPECT_EQ(r.code, cli::kOk) << cfg << ": " << r.err;
    }
}

TEST(Cli, BooleanParameter) {
    TempDir d;
    EXPECT_EQ(run_cli({"simulate-reduced", "--set", "partial_on_failure=false", "--set", "horizon=100", "--out", d / "a"}).code,
              cli::kOk);
    EXPECT_EQ(run_cli({"simulate-reduced", "--set", "partial_on_failure=maybe", "--out", d / "b"}).code, cli::kUsage);
}
