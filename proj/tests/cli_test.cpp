// SPDX-License-Identifier: Apache-2.0

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

auto const kCli = std::string(GEPSBP_CLI_PATH);
auto const kProblems = fs::path(GEPSBP_PROBLEMS_DIR);
auto const kTiny = std::string(" --population 20 --generations 3 --head-length 4 --library-cap 2000");
auto const kSmall = kTiny + " --jobs 1";

class Cli : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override
    {
        auto const* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir = fs::temp_directory_path() / (std::string("gepsbp_cli_") + info->name());
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    auto Run(std::string const& args, std::string const& env = {}) -> int
    {
        auto cmd = env + (env.empty() ? "" : " ") + kCli + " " + args + " >" + (dir / "stdout.txt").string() + " 2>" +
                   (dir / "stderr.txt").string();
        auto status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    auto Stderr() const -> std::string { return Slurp(dir / "stderr.txt"); }

    static auto Slurp(fs::path const& p) -> std::string
    {
        std::ifstream in(p);
        std::stringstream s;
        s << in.rdbuf();
        return s.str();
    }

    static auto Records(fs::path const& out) -> std::vector<fs::path>
    {
        std::vector<fs::path> files;
        if (!fs::exists(out / "records")) { return files; }
        for (auto const& e : fs::directory_iterator(out / "records")) { files.push_back(e.path()); }
        std::sort(files.begin(), files.end());
        return files;
    }

    static auto WithoutTiming(fs::path const& p) -> nlohmann::json
    {
        auto j = nlohmann::json::parse(Slurp(p));
        j.erase("wall_seconds");
        return j;
    }
};

auto Spec(char const* name) -> std::string { return (kProblems / name).string(); }

} // namespace

TEST_F(Cli, RunWritesOneRecordPerTrial)
{
    auto out = dir / "out";
    ASSERT_EQ(Run("run --mode sbp --gamma 0 --trials 1 --seed 7 --out " + out.string() + kSmall + " " +
                  Spec("fqe.spec")),
              0)
        << Stderr();
    auto files = Records(out);
    ASSERT_EQ(files.size(), 1U);
    auto j = nlohmann::json::parse(Slurp(files[0]));
    EXPECT_EQ(j["schema_version"], 1);
    EXPECT_EQ(j["problem"], "fqe");
    EXPECT_EQ(j["mode"], "sbp");
    EXPECT_EQ(j["seed"], 7);
    EXPECT_EQ(j["cfg_population"], 20);
    EXPECT_TRUE(j.contains("tree_prefix"));
    EXPECT_TRUE(fs::exists(out / "summary.csv"));
    for (auto const& e : fs::directory_iterator(out / "records")) { EXPECT_NE(e.path().extension(), ".tmp"); }
}

TEST_F(Cli, LambdaWithModeNoneIsRejected)
{
    auto out = dir / "out";
    EXPECT_EQ(Run("run --mode none --lambda 1 --out " + out.string() + kSmall + " " + Spec("fqe.spec")), 2);
    EXPECT_NE(Stderr().find("lambda"), std::string::npos);
    EXPECT_TRUE(Records(out).empty());
}

TEST_F(Cli, RerunIsIdenticalExceptTiming)
{
    auto a = dir / "a";
    auto b = dir / "b";
    auto args = std::string("run --mode sbp --mode none --gamma 0 --gamma 0.1 --trials 2 --seed 3") + kTiny + " " +
                Spec("fqe.spec") + " --out ";
    ASSERT_EQ(Run(args + a.string() + " --jobs 1"), 0) << Stderr();
    ASSERT_EQ(Run(args + b.string() + " --jobs 4"), 0) << Stderr();
    auto fa = Records(a);
    auto fb = Records(b);
    ASSERT_EQ(fa.size(), 8U);
    ASSERT_EQ(fb.size(), fa.size());
    for (std::size_t i = 0; i < fa.size(); ++i) {
        EXPECT_EQ(fa[i].filename(), fb[i].filename());
        EXPECT_EQ(WithoutTiming(fa[i]), WithoutTiming(fb[i])) << fa[i];
    }
}

TEST_F(Cli, MissingUnitsFailBeforeAnyRun)
{
    auto out = dir / "out";
    EXPECT_EQ(Run("run --mode sbp --out " + out.string() + kSmall + " " + Spec("kinetic_unitless.spec")), 2);
    EXPECT_NE(Stderr().find("no unit"), std::string::npos);
    EXPECT_TRUE(Records(out).empty());
    // the unit-free problem is fine without a homogeneity mode, but the whole batch is
    // refused when any listed problem lacks units
    EXPECT_EQ(Run("run --mode penalty --lambda 1 --out " + out.string() + kSmall + " " + Spec("fqe.spec") + " " +
                  Spec("kinetic_unitless.spec")),
              2);
    EXPECT_TRUE(Records(out).empty());
    EXPECT_EQ(Run("run --mode none --out " + out.string() + kSmall + " " + Spec("kinetic_unitless.spec")), 0)
        << Stderr();
    EXPECT_EQ(Records(out).size(), 1U);
}

TEST_F(Cli, CsvBackedProblem)
{
    auto out = dir / "out";
    ASSERT_EQ(Run("run --mode discard --out " + out.string() + kSmall + " " + Spec("velocity.spec")), 0) << Stderr();
    auto files = Records(out);
    ASSERT_EQ(files.size(), 1U);
    EXPECT_EQ(nlohmann::json::parse(Slurp(files[0]))["problem"], "velocity_csv");
}

TEST_F(Cli, ConfigFileWithFlagOverrides)
{
    auto cfg = dir / "cfg.json";
    std::ofstream(cfg) << R"({"population": 20, "generations": 5, "head_length": 4, "library_cap": 2000,
                             "modes": ["sbp"], "trials": 1, "seed": 11, "jobs": 1})";
    auto out = dir / "out";
    ASSERT_EQ(Run("run --config " + cfg.string() + " --generations 2 --out " + out.string() + " " + Spec("fqe.spec")),
              0)
        << Stderr();
    auto files = Records(out);
    ASSERT_EQ(files.size(), 1U);
    auto j = nlohmann::json::parse(Slurp(files[0]));
    EXPECT_EQ(j["cfg_generations"], 2);
    EXPECT_EQ(j["cfg_population"], 20);
    EXPECT_EQ(j["seed"], 11);
}

TEST_F(Cli, UnknownConfigKeyIsAnError)
{
    auto cfg = dir / "cfg.json";
    std::ofstream(cfg) << R"({"populaton": 20})";
    EXPECT_EQ(Run("run --config " + cfg.string() + " --out " + (dir / "out").string() + " " + Spec("fqe.spec")), 2);
    EXPECT_NE(Stderr().find("populaton"), std::string::npos);
}

TEST_F(Cli, OutputDirectoryFromEnvironment)
{
    auto out = dir / "env_out";
    ASSERT_EQ(Run("run --mode none" + kSmall + " " + Spec("fqe.spec"), "GEPSBP_OUT=" + out.string()), 0) << Stderr();
    EXPECT_EQ(Records(out).size(), 1U);
}

TEST_F(Cli, BuildLibraryIsReproducibleAndChecked)
{
    auto a = dir / "libA";
    auto b = dir / "libB";
    ASSERT_EQ(Run("build-library --head-length 4 --library-cap 2000 --library-dir " + a.string() + " " +
                  Spec("fqe.spec")),
              0)
        << Stderr();
    ASSERT_EQ(Run("build-library --head-length 4 --library-cap 2000 --library-dir " + b.string() + " " +
                  Spec("fqe.spec")),
              0);
    auto name = fs::path("fqe_h4_cap2000_s0.lib");
    ASSERT_TRUE(fs::exists(a / name));
    EXPECT_EQ(Slurp(a / name), Slurp(b / name));

    // the run uses the cache, and a corrupted cache is refused
    auto out = dir / "out";
    ASSERT_EQ(Run("run --mode sbp --library-dir " + a.string() + " --out " + out.string() + kSmall + " " +
                  Spec("fqe.spec")),
              0)
        << Stderr();
    auto text = Slurp(a / name);
    text[text.size() / 2] = text[text.size() / 2] == '1' ? '2' : '1';
    std::ofstream(a / name) << text;
    EXPECT_EQ(Run("run --mode sbp --library-dir " + a.string() + " --out " + out.string() + kSmall + " " +
                  Spec("fqe.spec")),
              1);
    EXPECT_NE(Stderr().find("checksum"), std::string::npos);
}

TEST_F(Cli, ReportSingleRecord)
{
    auto out = dir / "out";
    ASSERT_EQ(Run("run --mode sbp --out " + out.string() + kSmall + " " + Spec("fqe.spec")), 0) << Stderr();
    auto rep = dir / "rep";
    ASSERT_EQ(Run("report --out " + rep.string() + " " + (out / "records").string()), 0) << Stderr();
    auto summary = Slurp(rep / "summary.csv");
    EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 2);
    EXPECT_FALSE(fs::exists(rep / "significance.csv"));
}

TEST_F(Cli, ReportPairsTwoModes)
{
    auto out = dir / "out";
    ASSERT_EQ(Run("run --mode sbp --mode none --trials 10 --out " + out.string() + kSmall + " " + Spec("fqe.spec")),
              0)
        << Stderr();
    auto rep = dir / "rep";
    ASSERT_EQ(Run("report --alpha 0.05 --out " + rep.string() + " " + (out / "records").string()), 0) << Stderr();
    std::ifstream sig(rep / "significance.csv");
    std::string line;
    std::getline(sig, line);
    EXPECT_EQ(line, "gamma,metric,first,second,n,w_plus,w_minus,p,exact,alpha,grade");
    std::vector<std::string> rows;
    while (std::getline(sig, line)) { rows.push_back(line); }
    ASSERT_EQ(rows.size(), 2U); // one comparison for each of R2 and complexity
    for (auto const& r : rows) { EXPECT_NE(r.find(",0.05,"), std::string::npos) << r; }
    auto summary = Slurp(rep / "summary.csv");
    EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 3);
}

TEST_F(Cli, ReportRejectsMixedSchemaVersions)
{
    auto out = dir / "out";
    ASSERT_EQ(Run("run --mode none --trials 2 --out " + out.string() + kSmall + " " + Spec("fqe.spec")), 0)
        << Stderr();
    auto files = Records(out);
    ASSERT_EQ(files.size(), 2U);
    auto j = nlohmann::json::parse(Slurp(files[0]));
    j["schema_version"] = 2;
    std::ofstream(files[0]) << j.dump() << '\n';
    EXPECT_EQ(Run("report --out " + (dir / "rep").string() + " " + (out / "records").string()), 1);
    EXPECT_NE(Stderr().find("schema"), std::string::npos);
}

TEST_F(Cli, Validate)
{
    EXPECT_EQ(Run("validate " + Spec("fqe.spec") + " " + Spec("velocity.spec")), 0);
    EXPECT_EQ(Run("validate " + Spec("kinetic_unitless.spec")), 0);
    EXPECT_EQ(Run("validate --require-units " + Spec("kinetic_unitless.spec")), 1);
    auto bad = dir / "bad.spec";
    std::ofstream(bad) << "name: bad\nfeature x: furlong\ntarget y: m\ntruth: x\nsamples: 10\n";
    EXPECT_EQ(Run("validate " + bad.string()), 1);
    EXPECT_NE(Slurp(dir / "stdout.txt").find("furlong"), std::string::npos);
}

TEST_F(Cli, UsageErrors)
{
    EXPECT_NE(Run(""), 0);
    EXPECT_NE(Run("run --mode sometimes " + Spec("fqe.spec")), 0);
    EXPECT_EQ(Run("run --mode none --out " + (dir / "o").string() + " " + (dir / "missing.spec").string()), 2);
}
