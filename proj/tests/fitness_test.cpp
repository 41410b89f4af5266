// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "gepsbp/fitness.hpp"
#include "gepsbp/units.hpp"
#include "oracles.hpp"

using namespace gepsbp;

namespace {
auto X(std::uint32_t i, DimensionVector d = {}) -> ExprTree { return ExprTree::Leaf(Node::Feature(i, d)); }
auto C(double v, std::int32_t slot = -1) -> ExprTree { return ExprTree::Leaf(Node::Coefficient(v, slot)); }

auto OneColumn(std::vector<double> const& v) -> Matrix
{
    std::vector<std::vector<double>> rows;
    for (auto x : v) { rows.push_back({x}); }
    return Matrix::FromRows(rows);
}

auto MakeProblem(Matrix m, std::vector<double> y, DimensionVector target = {}) -> Problem
{
    Problem p;
    p.featureDims.assign(m.Cols(), DimensionVector::Zero());
    p.X = std::move(m);
    p.y = std::move(y);
    p.targetDim = target;
    return p;
}
} // namespace

TEST(EvaluateBatch, IdentityFeature)
{
    auto out = EvaluateBatch(X(0), OneColumn({1, 2, 3}));
    EXPECT_EQ(out, (std::vector<double>{1, 2, 3}));
}

TEST(EvaluateBatch, DivisionByZeroIsNaN)
{
    auto m = Matrix::FromRows({{1, 2}, {1, 0}, {3, 4}});
    auto out = EvaluateBatch(ExprTree::Make(OpKind::Div, {X(0), X(1)}), m);
    EXPECT_DOUBLE_EQ(out[0], 0.5);
    EXPECT_TRUE(std::isnan(out[1]));
    EXPECT_DOUBLE_EQ(out[2], 0.75);
}

TEST(EvaluateBatch, ChargeTimesField)
{
    auto m = Matrix::FromRows({{2, 3}});
    EXPECT_EQ(EvaluateBatch(ExprTree::Make(OpKind::Mul, {X(0), X(1)}), m), std::vector<double>{6});
}

TEST(EvaluateBatch, DomainErrorsAreNaN)
{
    auto m = OneColumn({-1, 0, 4});
    auto s = EvaluateBatch(ExprTree::Make(OpKind::Sqrt, {X(0)}), m);
    EXPECT_TRUE(std::isnan(s[0]));
    EXPECT_DOUBLE_EQ(s[2], 2.0);
    auto l = EvaluateBatch(ExprTree::Make(OpKind::Log, {X(0)}), m);
    EXPECT_TRUE(std::isnan(l[0]));
    EXPECT_TRUE(std::isnan(l[1]));
    auto e = EvaluateBatch(ExprTree::Make(OpKind::Exp, {X(0)}), OneColumn({1000}));
    EXPECT_TRUE(std::isnan(e[0]));
}

TEST(EvaluateBatch, CoefficientOverride)
{
    auto t = ExprTree::Make(OpKind::Add, {C(1.0), ExprTree::Make(OpKind::Mul, {C(2.0), X(0)})});
    auto m = OneColumn({1, 2});
    EXPECT_EQ(EvaluateBatch(t, m), (std::vector<double>{3, 5}));
    std::vector<double> theta{10, -1};
    EXPECT_EQ(EvaluateBatch(t, m, theta), (std::vector<double>{9, 8}));
}

TEST(EvaluateBatch, MatchesScalarOracleBitForBit)
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.5, 3.0);
    Matrix m(32, 1);
    for (std::size_t r = 0; r < 32; ++r) { m(r, 0) = u(rng); }
    for (int i = 0; i < 500; ++i) {
        auto t = oracle::RandomTree(rng, 4);
        auto tree = oracle::ToLibrary(*t);
        auto out = EvaluateBatch(tree, m);
        for (std::size_t r = 0; r < 32; ++r) {
            std::size_t ci = 0;
            auto ref = oracle::EvalScalar(tree, 0, {m(r, 0)}, {}, ci);
            if (std::isnan(ref)) {
                ASSERT_TRUE(std::isnan(out[r])) << tree.ToString();
            } else {
                ASSERT_EQ(oracle::UlpDistance(ref, out[r]), 0U) << tree.ToString();
            }
        }
    }
}

TEST(DimensionPenalty, Cases)
{
    auto q = X(0, ParseUnit("C"));
    auto e = X(1, ParseUnit("V/m"));
    EXPECT_EQ(DimensionPenalty(ExprTree::Make(OpKind::Mul, {q, e}), ParseUnit("N")), 0.0);
    EXPECT_DOUBLE_EQ(DimensionPenalty(X(0, DimensionVector({2, 0, 0, 0, 0, 0, 0})), DimensionVector::Zero()), 2.0);
    auto bad = ExprTree::Make(OpKind::Mul, {ExprTree::Make(OpKind::Add, {ExprTree::Leaf(Node::Number(1)), q}), e});
    EXPECT_EQ(DimensionPenalty(bad, ParseUnit("N")), kInf);
}

TEST(Loss, PerfectHomogeneousIsZero)
{
    auto p = MakeProblem(OneColumn({1, 2, 3}), {1, 2, 3});
    for (double lambda : {0.0, 1.0, 10.0}) { EXPECT_EQ(Loss(p, X(0), {}, lambda), 0.0); }
}

TEST(Loss, PenaltyIsScaledByLambda)
{
    auto p = MakeProblem(OneColumn({1, 2, 3}), {1, 2, 3});
    auto t = X(0, DimensionVector({2, 0, 0, 0, 0, 0, 0}));
    EXPECT_EQ(Loss(p, t, {}, 10.0), 20.0);
    EXPECT_EQ(Loss(p, t, {}, 0.0), 0.0);
}

TEST(Loss, UndefinedIsInfiniteWithPositiveLambda)
{
    auto p = MakeProblem(Matrix::FromRows({{1, 1}, {2, 2}}), {1, 2});
    p.featureDims = {ParseUnit("m"), ParseUnit("s")};
    auto t = ExprTree::Make(OpKind::Add, {X(0, ParseUnit("m")), X(1, ParseUnit("s"))});
    EXPECT_EQ(Loss(p, t, {}, 1.0), kInf);
    EXPECT_TRUE(std::isfinite(Loss(p, t, {}, 0.0)));
}

TEST(Loss, LambdaZeroIsBitIdenticalToMse)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.5, 3.0);
    for (int i = 0; i < 1000; ++i) {
        Matrix m(16, 1);
        std::vector<double> y(16);
        for (std::size_t r = 0; r < 16; ++r) {
            m(r, 0) = u(rng);
            y[r] = u(rng);
        }
        auto tree = oracle::ToLibrary(*oracle::RandomTree(rng, 4));
        auto p = MakeProblem(m, y);
        auto mse = MeanSquaredError(y, EvaluateBatch(tree, m));
        auto loss = Loss(p, tree, {}, 0.0);
        ASSERT_EQ(std::memcmp(&mse, &loss, sizeof(double)), 0);
    }
}

TEST(MeanSquaredError, NonFiniteIsInfinite)
{
    std::vector<double> y{1, 2};
    EXPECT_EQ(MeanSquaredError(y, std::vector<double>{1, kNaN}), kInf);
    EXPECT_DOUBLE_EQ(MeanSquaredError(y, std::vector<double>{2, 4}), 2.5);
    EXPECT_THROW((void)MeanSquaredError(y, std::vector<double>{1}), std::invalid_argument);
}

TEST(OptimizeCoefficients, ScaleFactor)
{
    auto m = OneColumn({1, 2, 3, 4, 5});
    auto p = MakeProblem(m, {3, 6, 9, 12, 15});
    auto t = ExprTree::Make(OpKind::Mul, {C(0.5), X(0)});
    auto r = OptimizeCoefficients(p, t, {0.5});
    ASSERT_EQ(r.coefficients.size(), 1U);
    EXPECT_NEAR(r.coefficients[0], 3.0, 1e-4);
    EXPECT_NEAR(r.loss, 0.0, 1e-8);
}

TEST(OptimizeCoefficients, Offset)
{
    auto m = OneColumn({1, 2, 3, 4});
    auto p = MakeProblem(m, {6, 7, 8, 9});
    auto t = ExprTree::Make(OpKind::Add, {C(-1.0), X(0)});
    auto r = OptimizeCoefficients(p, t, {-1.0});
    EXPECT_NEAR(r.coefficients[0], 5.0, 1e-4);
}

TEST(OptimizeCoefficients, NoCoefficientsIsIdentity)
{
    auto p = MakeProblem(OneColumn({1, 2}), {2, 3});
    auto r = OptimizeCoefficients(p, X(0), {});
    EXPECT_TRUE(r.coefficients.empty());
    EXPECT_DOUBLE_EQ(r.loss, 1.0);
}

TEST(OptimizeCoefficients, NeverWorseThanStart)
{
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.5, 3.0);
    auto m = OneColumn({0.5, 1.0, 1.5, 2.0, 2.5, 3.0});
    std::vector<double> y;
    for (std::size_t r = 0; r < 6; ++r) { y.push_back(std::sin(m(r, 0)) * 2.0); }
    auto p = MakeProblem(m, y);
    auto t = ExprTree::Make(OpKind::Mul, {C(1.0), ExprTree::Make(OpKind::Sin, {ExprTree::Make(OpKind::Mul, {C(1.0), X(0)})})});
    for (int i = 0; i < 50; ++i) {
        std::vector<double> start{u(rng), u(rng)};
        auto before = Loss(p, t, start, 0.0);
        auto r = OptimizeCoefficients(p, t, start);
        EXPECT_LE(r.loss, before);
    }
}

TEST(OptimizeCoefficients, RespectsEvaluationBudget)
{
    auto p = MakeProblem(OneColumn({1, 2, 3}), {3, 6, 9});
    auto t = ExprTree::Make(OpKind::Mul, {C(0.5), X(0)});
    CoefficientOptions opt;
    opt.maxEvaluations = 7;
    auto r = OptimizeCoefficients(p, t, {0.5}, opt);
    EXPECT_LE(r.evaluations, 7U);
}

TEST(Matrix, SelectRowsAndColumns)
{
    auto m = Matrix::FromRows({{1, 2}, {3, 4}, {5, 6}});
    std::vector<std::size_t> idx{2, 0};
    auto s = m.SelectRows(idx);
    EXPECT_EQ(s.Rows(), 2U);
    EXPECT_EQ(s(0, 1), 6.0);
    EXPECT_EQ(s(1, 0), 1.0);
    auto col = m.Column(1);
    EXPECT_EQ(std::vector<double>(col.begin(), col.end()), (std::vector<double>{2, 4, 6}));
    EXPECT_THROW((void)Matrix::FromRows({{1, 2}, {3}}), std::invalid_argument);
}
