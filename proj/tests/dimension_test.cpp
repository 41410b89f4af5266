// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gepsbp/dimension.hpp"
#include "gepsbp/expr_tree.hpp"
#include "oracles.hpp"

using namespace gepsbp;

namespace {
auto Dim(std::initializer_list<Rational> v) -> DimensionVector { return DimensionVector(v); }

auto RandomDim(std::mt19937_64& rng) -> DimensionVector
{
    std::uniform_int_distribution<int> num(-6, 6);
    std::uniform_int_distribution<int> den(1, 4);
    DimensionVector d;
    for (std::size_t i = 0; i < DimensionVector::kSize; ++i) { d[i] = Rational(num(rng), den(rng)); }
    return d;
}

auto const kVoltPerMetre = Dim({1, 1, -3, 0, -1, 0, 0});
auto const kCoulomb = Dim({0, 0, 1, 0, 1, 0, 0});
auto const kNewton = Dim({1, 1, -2, 0, 0, 0, 0});
} // namespace

TEST(DimensionVector, ZeroIsDimensionless)
{
    EXPECT_TRUE(DimensionVector::Zero().IsDimensionless());
    EXPECT_FALSE(DimensionVector::Unit(1).IsDimensionless());
}

TEST(DimensionVector, NeedsSevenEntries)
{
    EXPECT_THROW(DimensionVector({1, 2, 3}), std::invalid_argument);
}

TEST(DimensionVector, ToStringShowsFractions)
{
    EXPECT_EQ(Dim({1, Rational(1, 2), -2, 0, 0, 0, 0}).ToString(), "[1,1/2,-2,0,0,0,0]");
}

TEST(ForwardApply, FieldTimesChargeIsForce)
{
    auto r = ForwardApply(Operator::Make(OpKind::Mul), kVoltPerMetre, kCoulomb);
    ASSERT_TRUE(r);
    EXPECT_EQ(*r, kNewton);
}

TEST(ForwardApply, AddKeepsDimension)
{
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
        auto d = RandomDim(rng);
        EXPECT_EQ(ForwardApply(Operator::Make(OpKind::Add), d, d), d);
        EXPECT_EQ(ForwardApply(Operator::Make(OpKind::Sub), d, d), d);
    }
}

TEST(ForwardApply, AddingUnequalDimensionsIsUndefined)
{
    EXPECT_EQ(ForwardApply(Operator::Make(OpKind::Add), kNewton, kCoulomb), Undefined);
}

TEST(ForwardApply, TranscendentalsNeedDimensionlessInput)
{
    for (auto k : {OpKind::Sin, OpKind::Cos, OpKind::Log, OpKind::Exp}) {
        EXPECT_EQ(ForwardApply(Operator::Make(k), DimensionVector::Unit(1)), Undefined);
        EXPECT_EQ(ForwardApply(Operator::Make(k), DimensionVector::Zero()), DimensionVector::Zero());
    }
}

TEST(ForwardApply, SqrtHalvesExponents)
{
    EXPECT_EQ(ForwardApply(Operator::Make(OpKind::Sqrt), Dim({0, 2, -2, 0, 0, 0, 0})), Dim({0, 1, -1, 0, 0, 0, 0}));
    EXPECT_EQ(ForwardApply(Operator::Make(OpKind::Sqrt), Dim({0, 1, 0, 0, 0, 0, 0})),
              Dim({0, Rational(1, 2), 0, 0, 0, 0, 0}));
}

TEST(ForwardApply, PowerScales)
{
    EXPECT_EQ(ForwardApply(Operator::Power(3), kCoulomb), Dim({0, 0, 3, 0, 3, 0, 0}));
    EXPECT_EQ(ForwardApply(Operator::Power(Rational(-1, 2)), Dim({0, 2, 0, 0, 0, 0, 0})), Dim({0, -1, 0, 0, 0, 0, 0}));
}

TEST(ForwardApply, UnknownOperatorIsAnErrorNotUndefined)
{
    Operator bogus{static_cast<OpKind>(200), 0};
    EXPECT_THROW((void)ForwardApply(bogus, kNewton), OperatorError);
}

TEST(ForwardApply, ArityMismatchThrows)
{
    EXPECT_THROW((void)ForwardApply(Operator::Make(OpKind::Mul), kNewton), OperatorError);
    EXPECT_THROW((void)ForwardApply(Operator::Make(OpKind::Sqrt), kNewton, kNewton), OperatorError);
}

TEST(ForwardApply, UndefinedPropagates)
{
    EXPECT_EQ(ForwardApply(Operator::Make(OpKind::Mul), Undefined, DimResult(kNewton), true), Undefined);
    EXPECT_EQ(ForwardApply(Operator::Make(OpKind::Sqrt), Undefined, Undefined, false), Undefined);
}

TEST(BackwardSplit, MultiplicationWithKnownLeft)
{
    auto [l, r] = BackwardSplit(Operator::Make(OpKind::Mul), kNewton, kCoulomb);
    EXPECT_EQ(l, kCoulomb);
    EXPECT_EQ(r, kVoltPerMetre);
    EXPECT_EQ(ForwardApply(Operator::Make(OpKind::Mul), l, r), kNewton);
}

TEST(BackwardSplit, MultiplicationWithKnownRight)
{
    auto [l, r] = BackwardSplit(Operator::Make(OpKind::Mul), kNewton, std::nullopt, kCoulomb);
    EXPECT_EQ(r, kCoulomb);
    EXPECT_EQ(l, kVoltPerMetre);
}

TEST(BackwardSplit, MultiplicationSplitsEvenly)
{
    auto t = Dim({1, 1, -3, 0, 0, 0, 0});
    auto [l, r] = BackwardSplit(Operator::Make(OpKind::Mul), t);
    EXPECT_EQ(l, r);
    EXPECT_EQ(l + r, t);
}

TEST(BackwardSplit, DivisionInvertsForwardRule)
{
    auto div = Operator::Make(OpKind::Div);
    auto [l1, r1] = BackwardSplit(div, kNewton, kCoulomb);
    EXPECT_EQ(ForwardApply(div, l1, r1), kNewton);
    auto [l2, r2] = BackwardSplit(div, kNewton, std::nullopt, kCoulomb);
    EXPECT_EQ(ForwardApply(div, l2, r2), kNewton);
    auto [l3, r3] = BackwardSplit(div, kNewton);
    EXPECT_EQ(ForwardApply(div, l3, r3), kNewton);
}

TEST(BackwardSplit, AddGivesTargetToBoth)
{
    auto [l, r] = BackwardSplit(Operator::Make(OpKind::Add), kNewton);
    EXPECT_EQ(l, kNewton);
    EXPECT_EQ(r, kNewton);
}

TEST(BackwardSplit, SqrtDoubles)
{
    auto [c, unused] = BackwardSplit(Operator::Make(OpKind::Sqrt), Dim({0, 1, -1, 0, 0, 0, 0}));
    EXPECT_EQ(c, Dim({0, 2, -2, 0, 0, 0, 0}));
    EXPECT_TRUE(unused.IsDimensionless());
}

TEST(BackwardSplit, TranscendentalChildIsDimensionless)
{
    auto [c, unused] = BackwardSplit(Operator::Make(OpKind::Exp), kNewton);
    EXPECT_TRUE(c.IsDimensionless());
}

TEST(BackwardSplit, PowZeroIsNotInvertible)
{
    EXPECT_THROW((void)BackwardSplit(Operator::Power(0), kNewton), std::domain_error);
}

TEST(BackwardSplit, RoundTripIsExact)
{
    std::mt19937_64 rng(7);
    std::vector<Operator> ops{Operator::Make(OpKind::Mul), Operator::Make(OpKind::Div), Operator::Make(OpKind::Sqrt),
                              Operator::Make(OpKind::Add)};
    for (int n = -3; n <= 3; ++n) {
        if (n != 0) { ops.push_back(Operator::Power(n)); }
    }
    for (int i = 0; i < 1000; ++i) {
        auto t = RandomDim(rng);
        auto known = RandomDim(rng);
        for (auto const& op : ops) {
            auto check = [&](std::optional<DimensionVector> lk, std::optional<DimensionVector> rk) {
                auto [l, r] = BackwardSplit(op, t, lk, rk);
                auto fwd = Arity(op.kind) == 2 ? ForwardApply(op, l, r) : ForwardApply(op, l);
                ASSERT_TRUE(fwd);
                EXPECT_EQ(*fwd, t) << OperatorName(op);
            };
            check(std::nullopt, std::nullopt);
            if (op.kind == OpKind::Mul || op.kind == OpKind::Div) {
                check(known, std::nullopt);
                check(std::nullopt, known);
            }
        }
    }
}

TEST(Distance, MatchesHandExpansion)
{
    EXPECT_DOUBLE_EQ(Distance(Dim({1, 0, 0, 0, 0, 0, 0}), Dim({0, 1, 0, 0, 0, 0, 0})), 2.0 / 7.0);
    EXPECT_DOUBLE_EQ(Distance(kVoltPerMetre, kCoulomb), 22.0 / 7.0);
    EXPECT_DOUBLE_EQ(Distance(kNewton, kNewton), 0.0);
}

TEST(Distance, IsSymmetricAndZeroOnlyOnEquality)
{
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        auto a = RandomDim(rng);
        auto b = RandomDim(rng);
        EXPECT_EQ(Distance(a, b), Distance(b, a));
        EXPECT_GE(Distance(a, b), 0.0);
        EXPECT_EQ(Distance(a, b) == 0.0, a == b);
    }
}

TEST(L2NormDiff, MatchesHandExpansion)
{
    EXPECT_DOUBLE_EQ(L2NormDiff(Dim({2, 0, 0, 0, 0, 0, 0}), DimensionVector::Zero()), 2.0);
    EXPECT_DOUBLE_EQ(L2NormDiff(kVoltPerMetre, kCoulomb), std::sqrt(22.0));
    EXPECT_DOUBLE_EQ(L2NormDiff(kNewton, kNewton), 0.0);
}

TEST(ForwardApply, AgreesWithIndependentOracle)
{
    std::mt19937_64 rng(11);
    int undefined = 0;
    for (int i = 0; i < 2000; ++i) {
        auto t = oracle::RandomTree(rng, 4);
        auto expected = oracle::Eval(*t);
        auto tree = oracle::ToLibrary(*t);
        undefined += expected ? 0 : 1;
        ASSERT_TRUE(oracle::Same(expected, tree.RootDim())) << tree.ToString();
    }
    EXPECT_GT(undefined, 100);
    EXPECT_LT(undefined, 1900);
}

TEST(ParseOperator, KnowsNamesAndPowers)
{
    EXPECT_EQ(ParseOperator("*").kind, OpKind::Mul);
    EXPECT_EQ(ParseOperator("sq"), Operator::Power(2));
    EXPECT_EQ(ParseOperator("pow-1"), Operator::Power(-1));
    EXPECT_EQ(ParseOperator("pow3/2"), Operator::Power(Rational(3, 2)));
    EXPECT_THROW((void)ParseOperator("tanh"), std::invalid_argument);
}
