// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <sstream>
#include <tuple>

#include <gtest/gtest.h>

#include "fabroute/cli.hpp"

using namespace fabroute;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run_cli(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = cli::main(std::move(args), out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> csv_rows(const std::string &body)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(body);
    std::string line;
    while (std::getline(in, line)) {
        rows.emplace_back();
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            rows.back().push_back(cell);
    }
    return rows;
}

std::string column(const std::vector<std::vector<std::string>> &rows, std::size_t r, const std::string &name)
{
    for (std::size_t k = 0; k < rows[0].size(); ++k)
        if (rows[0][k] == name)
            return rows.at(r).at(k);
    ADD_FAILURE() << "no column " << name;
    return {};
}

class Cli : public ::testing::Test {
  protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path() /
               ("fabroute_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string &name) const { return (dir_ / name).string(); }

    std::string netlist(std::size_t cells = 300)
    {
        const auto p = path("design.nl");
        if (!fs::exists(p)) {
            EXPECT_EQ(run_cli({"gen", "--cells", std::to_string(cells), "--seed", "3", "-o", p}).code, 0);
        }
        return p;
    }

    std::vector<std::string> run_args(const std::string &fabric, const std::string &out)
    {
        return {"run", "--fabric", fabric, "--netlist", netlist(), "--place-moves", "5", "-o", out};
    }

    fs::path dir_;
};

bool no_tmp_files(const fs::path &dir)
{
    if (!fs::exists(dir))
        return true;
    for (const auto &e : fs::directory_iterator(dir))
        if (e.path().extension() == ".tmp")
            return false;
    return true;
}

} // namespace

TEST_F(Cli, GenIsDeterministicAndValidates)
{
    const auto a = run_cli({"gen", "--cells", "200", "--seed", "9", "-o", "-"});
    const auto b = run_cli({"gen", "--cells", "200", "--seed", "9", "-o", "-"});
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(parse_netlist(a.out).cells.size(), 200u);
    EXPECT_NE(run_cli({"gen", "--cells", "200", "--seed", "10", "-o", "-"}).out, a.out);

    ASSERT_EQ(run_cli({"gen", "--cells", "200", "--seed", "9", "-o", path("g.nl")}).code, 0);
    EXPECT_EQ(text::read_file(path("g.nl")), a.out);

    const auto tiny = run_cli({"gen", "--cells", "4", "-o", "-"});
    EXPECT_EQ(tiny.code, 2);
    EXPECT_NE(tiny.err.find("error:"), std::string::npos);
    EXPECT_EQ(run_cli({"gen", "-o", "-"}).code, 2);
    EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
    EXPECT_EQ(run_cli({"gen", "--help"}).code, 0);
}

TEST_F(Cli, RunWritesEveryArtifact)
{
    const auto out = path("tmi");
    const auto r = run_cli(run_args("tmi", out));
    ASSERT_TRUE(r.code == 0 || r.code == 3) << r.err;
    for (const char *name : {"placement.csv", "die.json", "congestion_summary.csv", "routes.txt", "report.csv",
                             "report.json"})
        EXPECT_TRUE(fs::exists(fs::path(out) / name)) << name;
    for (int l = 1; l <= 8; ++l)
        EXPECT_TRUE(fs::exists(fs::path(out) / ("congestion_L" + std::to_string(l) + ".csv"))) << l;
    EXPECT_FALSE(fs::exists(fs::path(out) / "congestion_L9.csv"));
    EXPECT_TRUE(no_tmp_files(out));
    EXPECT_NE(r.out.find("layer,kind,demand,capacity,aggregate_ratio,max_edge_ratio"), std::string::npos);

    const auto rows = csv_rows(text::read_file((fs::path(out) / "report.csv").string()));
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1][0], "tmi");
    EXPECT_EQ(rows[1][1], "300");
}

TEST_F(Cli, CompareAgainstPlanarBaseline)
{
    for (const char *f : {"2d", "tmi", "s3dc"})
        ASSERT_NE(run_cli(run_args(f, path(f))).code, 2) << f;
    const auto r = run_cli({"compare", path("2d"), path("tmi"), path("s3dc") + "/report.json", "-o", path("cmp")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(r.out);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[1][0], "2d");
    EXPECT_EQ(column(rows, 1, "ppa_normalized"), "1");
    EXPECT_EQ(column(rows, 1, "footprint_normalized"), "1");
    EXPECT_EQ(column(rows, 1, "total_wirelength_delta_pct"), "0");
    EXPECT_LT(std::stod(column(rows, 3, "footprint_normalized")), std::stod(column(rows, 2, "footprint_normalized")));
    EXPECT_EQ(text::read_file(path("cmp") + "/report.csv"), r.out);
    const auto json = nlohmann::json::parse(text::read_file(path("cmp") + "/report.json"));
    EXPECT_EQ(json["baseline"], "2d");
    EXPECT_EQ(json["rows"].size(), 3u);

    EXPECT_EQ(run_cli({"compare", path("tmi"), path("s3dc")}).code, 2);
    EXPECT_EQ(run_cli({"compare", path("2d"), path("nowhere")}).code, 2);
}

TEST_F(Cli, SkybridgeRoutesCleanly)
{
    const auto r = run_cli(run_args("s3dc", path("s3dc")));
    EXPECT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(text::read_file(path("s3dc") + "/congestion_summary.csv"));
    ASSERT_GT(rows.size(), 1u);
    for (std::size_t i = 1; i < rows.size(); ++i)
        EXPECT_LE(std::stod(rows[i][5]), 1.0) << i;
}

TEST_F(Cli, CongestedRunExitsThreeWithArtifacts)
{
    std::string cfg = "kind tmi\nvia_cap 1\n";
    for (int l = 1; l <= 8; ++l)
        cfg += "layer " + std::to_string(l) + " cap 1\n";
    text::write_file(path("tight.fab"), cfg);
    const auto r = run_cli(run_args(path("tight.fab"), path("tight")));
    EXPECT_EQ(r.code, 3) << r.err;
    EXPECT_NE(r.err.find("congested"), std::string::npos);
    EXPECT_TRUE(fs::exists(path("tight") + "/report.csv"));
    EXPECT_TRUE(fs::exists(path("tight") + "/congestion_L1.csv"));
    bool over = false;
    const auto rows = csv_rows(text::read_file(path("tight") + "/congestion_summary.csv"));
    for (std::size_t i = 1; i < rows.size(); ++i)
        over = over || std::stod(rows[i][5]) > 1.0;
    EXPECT_TRUE(over);
}

TEST_F(Cli, FailedRunLeavesNothingBehind)
{
    text::write_file(path("bad.nl"), "master INV pins A Y\ncell a INV\nnet n a.Y b.A\n");
    const auto r = run_cli({"run", "--netlist", path("bad.nl"), "-o", path("bad")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("'b'"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(path("bad") + "/report.csv"));
    EXPECT_TRUE(no_tmp_files(path("bad")));
    EXPECT_EQ(run_cli({"run", "--netlist", netlist(), "--cells", "300", "-o", path("x")}).code, 2);
    EXPECT_EQ(run_cli({"run", "--fabric", path("missing.fab"), "--netlist", netlist(), "-o", path("x")}).code, 2);
}

TEST_F(Cli, PlaceThenRoute)
{
    ASSERT_EQ(run_cli({"place", "--fabric", "2d", "--netlist", netlist(), "--place-moves", "5", "-o", path("p")}).code,
              0);
    EXPECT_TRUE(fs::exists(path("p") + "/placement.csv"));
    const auto r =
        run_cli({"route", "--fabric", "2d", "--netlist", netlist(), "--placement", path("p"), "-o", path("r")});
    EXPECT_NE(r.code, 2) << r.err;
    EXPECT_TRUE(fs::exists(path("r") + "/routes.txt"));
    const auto wrong =
        run_cli({"route", "--fabric", "s3dc", "--netlist", netlist(), "--placement", path("p"), "-o", path("r2")});
    EXPECT_EQ(wrong.code, 2);
    EXPECT_NE(wrong.err.find("different fabric"), std::string::npos);
}

TEST_F(Cli, AnalyzeOrdersByEffectivePinDensity)
{
    for (const char *f : {"2d", "tmi", "s3dc"})
        ASSERT_EQ(run_cli({"place", "--fabric", f, "--netlist", netlist(), "--place-moves", "2", "-o", path(f)}).code,
                  0);
    const auto r = run_cli({"analyze", path("2d"), path("tmi"), "sky=" + path("s3dc")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(r.out);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"label", "E_effective", "G", "l_normalized"}));
    EXPECT_EQ(rows[1][0], "2d");
    EXPECT_EQ(rows[1][3], "1");
    EXPECT_EQ(rows[3][0], "sky");
    // Same pins everywhere, so l/l_2d = ((area_2d / area) / N)^((r - 0.5) / r).
    const double a2d = nlohmann::json::parse(text::read_file(path("2d") + "/die.json"))["area_um2"].get<double>();
    for (const auto &[row, dir, n] : {std::tuple{2, "tmi", 1}, {3, "s3dc", 5}}) {
        const double area = nlohmann::json::parse(text::read_file(path(dir) + "/die.json"))["area_um2"].get<double>();
        const double want = std::pow(a2d / area / n, 0.25 / 0.75);
        EXPECT_NEAR(std::stod(rows[std::size_t(row)][3]) / want, 1.0, 1e-12) << dir;
    }
    EXPECT_GT(std::stod(rows[2][3]), 1.0);
    EXPECT_GT(std::stod(rows[3][3]), 1.0);

    const auto missing = run_cli({"analyze", path("2d"), path("nowhere")});
    EXPECT_EQ(missing.code, 2);
    EXPECT_NE(missing.err.find("nowhere"), std::string::npos);
}

TEST_F(Cli, ConfigFileFlagsOverride)
{
    const auto nl = netlist();
    text::write_file(path("cfg.toml"), "seed = 5\n\n[run]\nplace-moves = 4\nlabel = \"fromcfg\"\n\n[gen]\nseed = 99\n");
    ASSERT_NE(run_cli({"run", "--config", path("cfg.toml"), "--netlist", nl, "--seed", "7", "-o", path("a")}).code, 2);
    ASSERT_NE(run_cli({"run", "--netlist", nl, "--seed", "7", "--place-moves", "4", "--label", "fromcfg", "-o",
                       path("b")})
                  .code,
              2);
    EXPECT_EQ(text::read_file(path("a") + "/report.csv"), text::read_file(path("b") + "/report.csv"));
    EXPECT_EQ(text::read_file(path("a") + "/placement.csv"), text::read_file(path("b") + "/placement.csv"));

    // Unsectioned keys apply too: seed 5 from the file when no flag overrides it.
    ASSERT_NE(run_cli({"run", "--config", path("cfg.toml"), "--netlist", nl, "-o", path("c")}).code, 2);
    ASSERT_NE(run_cli({"run", "--netlist", nl, "--seed", "5", "--place-moves", "4", "--label", "fromcfg", "-o",
                       path("d")})
                  .code,
              2);
    EXPECT_EQ(text::read_file(path("c") + "/placement.csv"), text::read_file(path("d") + "/placement.csv"));
    EXPECT_EQ(run_cli({"run", "--config", path("nope.toml"), "--netlist", nl}).code, 2);
}

TEST_F(Cli, RepeatedRunsAreByteIdentical)
{
    auto args = run_args("2d", path("one"));
    args.insert(args.end(), {"--threads", "1"});
    ASSERT_NE(run_cli(args).code, 2);
    auto again = run_args("2d", path("two"));
    again.insert(again.end(), {"--threads", "4"});
    ASSERT_NE(run_cli(again).code, 2);
    for (const char *name : {"report.csv", "report.json", "routes.txt", "placement.csv", "congestion_summary.csv"})
        EXPECT_EQ(text::read_file(path("one") + "/" + name), text::read_file(path("two") + "/" + name)) << name;
}
