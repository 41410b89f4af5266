// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "gepsbp/bench/data.hpp"
#include "gepsbp/bench/expression.hpp"
#include "gepsbp/bench/metrics.hpp"
#include "gepsbp/bench/problem.hpp"
#include "gepsbp/bench/simplify.hpp"
#include "gepsbp/bench/trial.hpp"

using namespace gepsbp;
using namespace gepsbp::bench;

namespace {
std::vector<std::string> const kNames{"x1", "x2", "x3"};

auto P(std::string const& s) -> ExprTree { return ParseExpression(s, kNames); }

auto Box(std::size_t rows, std::uint64_t seed) -> Matrix
{
    Rng rng(seed);
    Matrix m(rows, 3);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < 3; ++c) { m(r, c) = 1.0 + 4.0 * Uniform01(rng); }
    }
    return m;
}
} // namespace

TEST(Expression, PrecedenceAndAssociativity)
{
    EXPECT_EQ(P("x1 + x2 * x3").ToString(kNames), "(x1 + (x2 * x3))");
    EXPECT_EQ(P("x1 - x2 - x3").ToString(kNames), "((x1 - x2) - x3)");
    EXPECT_EQ(P("x1 / x2 / x3").ToString(kNames), "((x1 / x2) / x3)");
    EXPECT_EQ(P("-x1^2").ToString(kNames), "(-(x1)^2)");
}

TEST(Expression, PowersAndFunctions)
{
    EXPECT_EQ(P("x1^0.5").ToString(kNames), "sqrt(x1)");
    EXPECT_EQ(P("x1^(1/3)").ToString(kNames), "(x1)^(1/3)");
    EXPECT_EQ(P("x1^-2").ToString(kNames), "(x1)^(-2)");
    EXPECT_EQ(P("exp(log(x1))").ToString(kNames), "exp(log(x1))");
    EXPECT_THROW((void)P("x1^0"), ExpressionError);
    EXPECT_THROW((void)P("x1^0.123456789"), ExpressionError);
}

TEST(Expression, Errors)
{
    EXPECT_THROW((void)P("x1 +"), ExpressionError);
    EXPECT_THROW((void)P("(x1"), ExpressionError);
    EXPECT_THROW((void)P("y"), ExpressionError);
    EXPECT_THROW((void)P("x1 x2"), ExpressionError);
}

TEST(Expression, RoundTripsThroughToString)
{
    for (auto const* s : {"x1*x2/(4*pi*x3^2)", "(x1*x2 + x3)/(x1 + x2)", "sin(x1) - cos(x2)*exp(-x3)", "sqrt(x1)^3"}) {
        auto t = P(s);
        EXPECT_EQ(P(t.ToString(kNames)), t) << s;
    }
}

TEST(Expression, CarriesDimensions)
{
    auto t = ParseExpression("q*E", {"q", "E"}, {ParseUnit("C"), ParseUnit("V/m")});
    ASSERT_TRUE(t.RootDim());
    EXPECT_EQ(*t.RootDim(), ParseUnit("N"));
}

TEST(Simplify, Identities)
{
    EXPECT_EQ(Simplify(P("(x1 + 0) * 1")), P("x1"));
    EXPECT_EQ(Simplify(P("2 * 3")), P("6"));
    EXPECT_EQ(Simplify(P("exp(log(x1))")), P("x1"));
    EXPECT_EQ(Simplify(P("x1 - x1")), P("0"));
    EXPECT_EQ(Simplify(P("x1 / x1")), P("1"));
    EXPECT_EQ(Simplify(P("sqrt(x1)^2")), P("x1"));
    EXPECT_EQ(Simplify(P("--x1")), P("x1"));
}

TEST(Simplify, PreservesValues)
{
    auto m = Box(50, 1);
    for (auto const* s : {"(x1 + 0) * 1 * x2", "2*x1*3*x2", "(x1 - 2) + (4 - x2)", "x1/4 + x2/x2", "(x1^2)^3"}) {
        auto a = EvaluateBatch(P(s), m);
        auto b = EvaluateBatch(Simplify(P(s)), m);
        for (std::size_t i = 0; i < a.size(); ++i) { EXPECT_NEAR(a[i], b[i], 1e-9 * std::abs(a[i])) << s; }
    }
}

TEST(Complexity, CountsSymbolsAfterSimplification)
{
    EXPECT_EQ(Complexity(P("x1")), 1U);
    EXPECT_EQ(Complexity(P("x1*x2")), 3U);
    EXPECT_EQ(Complexity(P("(x1+0)*x2")), 3U);
}

TEST(R2Score, HandValues)
{
    std::vector<double> y{1, 2, 3};
    EXPECT_EQ(R2Score(y, y), 1.0);
    EXPECT_EQ(R2Score(y, std::vector<double>{2, 2, 2}), 0.0);
    EXPECT_NEAR(R2Score(y, std::vector<double>{1, 2, 4}), 0.5, 1e-12);
    EXPECT_THROW((void)R2Score(std::vector<double>{1, 1}, std::vector<double>{1, 2}), std::domain_error);
    EXPECT_THROW((void)R2Score(std::vector<double>{1}, std::vector<double>{1}), std::invalid_argument);
}

TEST(SymbolicSolution, Cases)
{
    auto probe = Box(128, 2);
    auto truth = P("x1*x2/(x1+x3)");
    EXPECT_TRUE(SymbolicSolution(truth, truth, probe));
    EXPECT_TRUE(SymbolicSolution(truth, P("x1*x2/(x1+x3) + 3"), probe));
    EXPECT_TRUE(SymbolicSolution(truth, P("2.5*x1*x2/(x3+x1)"), probe));
    EXPECT_FALSE(SymbolicSolution(truth, P("x1*x2/(x1+x3) + x1"), probe));
    EXPECT_FALSE(SymbolicSolution(truth, P("x1*x2/(x1+x3) + 1e-3*x1"), probe));
    EXPECT_THROW((void)SymbolicSolution(truth, truth, Box(10, 0)), std::invalid_argument);
}

TEST(SymbolicSolution, NumericFallbackHandlesReorderedForms)
{
    auto probe = Box(128, 3);
    EXPECT_TRUE(SymbolicSolution(P("(x1*x2 + x2*x3)/(x1 + x2)"), P("x2*(x3 + x1)/(x2 + x1)"), probe));
    EXPECT_TRUE(SymbolicSolution(P("x1*x2/(4*pi*x3^2)"), P("0.0795774715459477*x1*x2/(x3*x3)"), probe));
}

TEST(Noise, ZeroGammaIsExact)
{
    Rng rng(0);
    std::vector<double> y{3, 4};
    EXPECT_EQ(AddNoise(y, 0.0, rng), y);
}

TEST(Noise, StandardDeviationFollowsRms)
{
    Rng rng(11);
    std::vector<double> y(100000);
    for (std::size_t i = 0; i < y.size(); ++i) { y[i] = i % 2 == 0 ? 3.0 : 4.0; }
    auto noisy = AddNoise(y, 0.1, rng);
    double s = 0.0;
    double s2 = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        auto d = noisy[i] - y[i];
        s += d;
        s2 += d * d;
    }
    auto n = static_cast<double>(y.size());
    auto sd = std::sqrt(s2 / n - (s / n) * (s / n));
    auto expected = 0.1 * std::sqrt(12.5);
    EXPECT_NEAR(sd / expected, 1.0, 0.02);
    EXPECT_THROW((void)AddNoise(y, -1.0, rng), std::invalid_argument);
}

TEST(Split, Sizes)
{
    Matrix big(10000, 1);
    std::vector<double> y(10000, 0.0);
    Rng rng(1);
    auto s = Split(big, y, 0.75, rng);
    EXPECT_EQ(s.XTrain.Rows(), 7500U);
    EXPECT_EQ(s.XTest.Rows(), 2500U);
    Matrix four(4, 1);
    auto t = Split(four, std::vector<double>(4), 0.5, rng);
    EXPECT_EQ(t.trainRows.size(), 2U);
    EXPECT_EQ(t.testRows.size(), 2U);
}

TEST(Split, SameSeedSamePartition)
{
    auto m = Box(100, 5);
    std::vector<double> y(100, 1.0);
    Rng a(42);
    Rng b(42);
    EXPECT_EQ(Split(m, y, 0.75, a).trainRows, Split(m, y, 0.75, b).trainRows);
}

TEST(Split, IsAPartition)
{
    auto m = Box(101, 5);
    std::vector<double> y(101);
    for (std::size_t i = 0; i < y.size(); ++i) { y[i] = static_cast<double>(i); }
    Rng rng(3);
    auto s = Split(m, y, 0.75, rng);
    std::vector<bool> seen(101, false);
    for (auto r : s.trainRows) { seen[r] = true; }
    for (auto r : s.testRows) {
        EXPECT_FALSE(seen[r]);
        seen[r] = true;
    }
    for (auto v : seen) { EXPECT_TRUE(v); }
    EXPECT_EQ(s.yTrain[0], static_cast<double>(s.trainRows[0]));
}

TEST(Csv, ReadsHeaderAndTarget)
{
    std::istringstream in("a,b,y\n1,2,3\n4,5,9\n");
    auto ds = ReadCsv(in, "y");
    EXPECT_EQ(ds.featureNames, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(ds.X.Rows(), 2U);
    EXPECT_EQ(ds.X(1, 1), 5.0);
    EXPECT_EQ(ds.y, (std::vector<double>{3, 9}));
}

TEST(Csv, Errors)
{
    std::istringstream ragged("a,y\n1\n");
    EXPECT_THROW((void)ReadCsv(ragged, "y"), DataError);
    std::istringstream junk("a,y\n1,zz\n");
    EXPECT_THROW((void)ReadCsv(junk, "y"), DataError);
    std::istringstream missing("a,b\n1,2\n");
    EXPECT_THROW((void)ReadCsv(missing, "y"), DataError);
}

TEST(ProblemSpec, ParsesAllKeys)
{
    std::istringstream in(R"(# comment
name: force
feature q: C
feature E: V/m
target F: N
truth: q*E
difficulty: easy
samples: 50
range: 1 5
)");
    auto spec = ParseProblemSpec(in);
    EXPECT_EQ(spec.name, "force");
    ASSERT_EQ(spec.features.size(), 2U);
    EXPECT_EQ(*spec.features[1].unit, "V/m");
    EXPECT_TRUE(spec.HasAllUnits());
    EXPECT_TRUE(ValidateSpec(spec, true).empty());
    auto lp = LoadProblem(spec, 1);
    EXPECT_EQ(lp.X.Rows(), 50U);
    EXPECT_EQ(lp.targetDim, ParseUnit("N"));
    for (std::size_t r = 0; r < 50; ++r) { EXPECT_DOUBLE_EQ(lp.y[r], lp.X(r, 0) * lp.X(r, 1)); }
}

TEST(ProblemSpec, UnknownUnitsAndErrors)
{
    std::istringstream in("name: p\nfeature a: ?\ntarget y: m\ntruth: a\nsamples: 10\n");
    auto spec = ParseProblemSpec(in);
    EXPECT_FALSE(spec.HasAllUnits());
    EXPECT_EQ(ValidateSpec(spec, true).size(), 1U);
    EXPECT_TRUE(ValidateSpec(spec, false).empty());

    std::istringstream bad("name: p\ncolour: blue\n");
    EXPECT_THROW((void)ParseProblemSpec(bad), SpecError);
    std::istringstream noData("name: p\nfeature a: m\ntarget y: m\n");
    EXPECT_THROW((void)ParseProblemSpec(noData), SpecError);
    std::istringstream badUnit("name: p\nfeature a: furlong\ntarget y: m\ntruth: a\nsamples: 5\n");
    EXPECT_EQ(ValidateSpec(ParseProblemSpec(badUnit), false).size(), 1U);
}

TEST(Suite, TruthsAreHomogeneous)
{
    auto suite = BuiltinSuite(64);
    EXPECT_EQ(suite.size(), 5U);
    for (auto const& spec : suite) {
        auto lp = LoadProblem(spec, 0);
        ASSERT_TRUE(lp.truth);
        ASSERT_TRUE(lp.truth->RootDim()) << spec.name;
        EXPECT_EQ(*lp.truth->RootDim(), lp.targetDim) << spec.name;
    }
}

TEST(Trial, SeedsAreSharedAcrossModes)
{
    EXPECT_EQ(TrialSeed(1, 3), TrialSeed(1, 3));
    EXPECT_NE(TrialSeed(1, 3), TrialSeed(1, 4));
    EXPECT_NE(TrialSeed(1, 3), TrialSeed(2, 3));
}

TEST(Trial, RecoversChargeTimesField)
{
    auto lp = LoadProblem(BuiltinSuite(200).front(), 0);
    TrialSettings s;
    s.evolution.populationSize = 200;
    s.evolution.generations = 50;
    s.evolution.mode = HomogeneityMode::Sbp;
    s.evolution.seed = 1;
    auto lib = BuildProblemLibrary(lp, s.table, s.evolution.headLength, 20000, 0);
    auto rec = RunTrial(lp, s, &lib);
    EXPECT_TRUE(rec.solution) << rec.expression;
    EXPECT_NEAR(rec.r2Test, 1.0, 1e-9);
    EXPECT_EQ(rec.problem, "force_field");
    EXPECT_EQ(rec.mode, "sbp");
}
