#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <gtest/gtest.h>
#include <json.hpp>

#include "decofringe/cli.hpp"

using namespace decofringe;
namespace fs = std::filesystem;

namespace {

struct Invocation {
    int code;
    std::string out;
    std::string err;
};

Invocation invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "decofringe");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("decofringe_" + tag + "_" + std::to_string(::getpid())))
    {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

// CSV body rows after the "# key=value" header lines and the column line
std::vector<std::vector<double>> csv_rows(const std::string& text, std::vector<std::string>& columns)
{
    std::istringstream is(text);
    std::string line;
    std::vector<std::vector<double>> rows;
    bool header_done = false;
    while (std::getline(is, line)) {
        if (line.starts_with("# "))
            continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ','))
            cells.push_back(c);
        if (!header_done) {
            columns = cells;
            header_done = true;
            continue;
        }
        std::vector<double> r;
        for (const auto& s : cells)
            r.push_back(std::stod(s));
        rows.push_back(r);
    }
    return rows;
}

} // namespace

TEST(Table, CsvLayout)
{
    Table t;
    t.add_meta("tool", tool_name);
    t.add_meta("w", 0.25);
    t.columns = {"x", "y"};
    t.add_row({1.0, 0.1});
    t.add_row({2.5, std::string("text")});
    EXPECT_EQ(csv_string(t), "# tool=decofringe\n# w=0.25\nx,y\n1,0.1\n2.5,text\n");
    EXPECT_THROW(t.add_row({1.0}), std::logic_error);
    EXPECT_THROW(t.numeric_column(1), std::logic_error);
    EXPECT_EQ(t.numeric_column(0), (std::vector<double>{1.0, 2.5}));
}

TEST(Table, NumbersRoundTrip)
{
    for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.2250738585072014e-308, 1e-300})
        EXPECT_EQ(std::stod(format_number(v)), v);
    EXPECT_EQ(format_number(INFINITY), "inf");
    EXPECT_EQ(format_number(NAN), "nan");
}

TEST(Table, JsonParsesBack)
{
    Table t;
    t.add_meta("w", 0.5);
    t.columns = {"q", "v"};
    t.add_row({std::string("a"), 1.5});
    t.add_row({std::string("b"), INFINITY});
    const auto j = nlohmann::json::parse(json_string(t));
    EXPECT_EQ(j["meta"]["w"], "0.5");
    EXPECT_EQ(j["columns"][1], "v");
    EXPECT_EQ(j["rows"][0][1], 1.5);
    EXPECT_EQ(j["rows"][1][1], "inf");
}

TEST(Svg, EscapesAndBalances)
{
    const auto s = svg_string({"a < b & c", "x", "y", true},
                              {{"one", {1.0, 10.0, 100.0}, {0.0, 1.0, 0.5}}, {"two", {1.0, 100.0}, {2.0, NAN}}});
    EXPECT_TRUE(s.starts_with("<svg "));
    EXPECT_TRUE(s.ends_with("</svg>\n"));
    EXPECT_NE(s.find("a &lt; b &amp; c"), std::string::npos);
    EXPECT_EQ(s.find("nan"), std::string::npos);
    std::size_t polylines = 0;
    for (auto p = s.find("<polyline"); p != std::string::npos; p = s.find("<polyline", p + 1))
        ++polylines;
    EXPECT_EQ(polylines, 2u);
}

TEST(Cli, FringeColumnsAndAmplitudeReduction)
{
    const auto r = invoke({"fringe", "--points", "801"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::vector<std::string> cols;
    const auto rows = csv_rows(r.out, cols);
    ASSERT_EQ(cols, (std::vector<std::string>{"x", "p_free", "p_approx"}));
    ASSERT_EQ(rows.size(), 801u);
    EXPECT_NE(r.out.find("# version=0.1.0"), std::string::npos);

    const double w = w_exact(20.0, 20.0, 0.05, 0.15).w;
    // interference amplitude is damped by exactly e^-W
    for (const auto& row : rows) {
        const auto t = packet_terms(row[0], 20.0, 10.0);
        if (std::abs(t.interference) < 1e-6)
            continue;
        const double direct = normalization_sq(10.0) * t.direct;
        EXPECT_NEAR((row[2] - direct) / (row[1] - direct), std::exp(-w), 1e-9) << row[0];
    }
}

TEST(Cli, JsonAndSvgFormats)
{
    const auto j = invoke({"visibility", "--format", "json"});
    ASSERT_EQ(j.code, 0) << j.err;
    const auto doc = nlohmann::json::parse(j.out);
    EXPECT_EQ(doc["columns"][0], "quantity");
    const auto s = invoke({"fringe", "--format", "svg", "--points", "101"});
    ASSERT_EQ(s.code, 0) << s.err;
    EXPECT_TRUE(s.out.starts_with("<svg "));
    EXPECT_EQ(invoke({"fisher", "--format", "svg"}).code, cli::usage_error);
}

TEST(Cli, InvalidMassWritesNothing)
{
    TempDir dir("badmass");
    const auto target = dir.path / "p.csv";
    const auto r = invoke({"fringe", "--m", "-0.1", "--out", target.string()});
    EXPECT_EQ(r.code, cli::usage_error);
    EXPECT_FALSE(fs::exists(target));
    EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST(Cli, ExitCodes)
{
    EXPECT_EQ(invoke({}).code, cli::usage_error);
    EXPECT_EQ(invoke({"nonsense"}).code, cli::usage_error);
    EXPECT_EQ(invoke({"fringe", "--format", "xml"}).code, cli::usage_error);
    EXPECT_EQ(invoke({"reproduce", "3"}).code, cli::usage_error);
    EXPECT_EQ(invoke({"fringe", "--out", "/nonexistent_dir/x/p.csv"}).code, cli::io_error);
    EXPECT_EQ(invoke({"reproduce", "7", "--out", "/nonexistent_dir/x"}).code, cli::io_error);
    const auto v = invoke({"--version"});
    EXPECT_EQ(v.code, 0);
    EXPECT_EQ(v.out, "0.1.0\n");
    EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(Cli, RegimeWarningGoesToStderr)
{
    const auto r = invoke({"visibility", "--m", "0.5"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.err.find("warning: Compton length"), std::string::npos);
    EXPECT_EQ(invoke({"visibility", "--tau", "400"}).err, "");
}

TEST(Cli, ScanAndBounds)
{
    const auto r = invoke({"scan", "--param", "g", "--from", "0.05", "--to", "0.3", "--steps", "6"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::vector<std::string> cols;
    const auto rows = csv_rows(r.out, cols);
    ASSERT_EQ(rows.size(), 6u);
    EXPECT_EQ(cols.front(), "g");
    // W grows as g^2
    for (std::size_t i = 1; i < rows.size(); ++i)
        EXPECT_NEAR(rows[i][1] / rows[0][1], (rows[i][0] / rows[0][0]) * (rows[i][0] / rows[0][0]), 1e-8);
    EXPECT_EQ(invoke({"bounds"}).code, 0);
}

TEST(Cli, ReproduceVisibilityFallsWithSeparation)
{
    TempDir dir("fig5");
    const auto r = invoke({"reproduce", "5", "--out", dir.path.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::vector<std::string> cols;
    const auto rows = csv_rows(slurp(dir.path / "fig5_visibility.csv"), cols);
    ASSERT_EQ(rows.size(), 200u);
    for (std::size_t i = 1; i < rows.size(); ++i)
        EXPECT_LT(rows[i][1], rows[i - 1][1]);
    EXPECT_TRUE(fs::exists(dir.path / "fig5_bounds.svg"));
}

TEST(Cli, ReproduceIsByteIdentical)
{
    TempDir a("repro_a"), b("repro_b");
    for (const char* fig : {"2", "4", "7"}) {
        ASSERT_EQ(invoke({"reproduce", fig, "--out", a.path.string()}).code, 0);
        ASSERT_EQ(invoke({"reproduce", fig, "--out", b.path.string()}).code, 0);
    }
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(a.path)) {
        EXPECT_EQ(slurp(e.path()), slurp(b.path / e.path().filename())) << e.path();
        ++files;
    }
    EXPECT_EQ(files, 8u);
}

TEST(Cli, MleSmallRun)
{
    const auto r = invoke({"mle", "--samples", "2000", "--trials", "5", "--seed", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("# seed=3"), std::string::npos);
    EXPECT_EQ(r.out, invoke({"mle", "--samples", "2000", "--trials", "5", "--seed", "3"}).out);
}
