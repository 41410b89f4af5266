// SPDX-License-Identifier: Apache-2.0

#ifndef GEPSBP_BENCH_SIMPLIFY_HPP
#define GEPSBP_BENCH_SIMPLIFY_HPP

#include <cmath>
#include <cstddef>
#include <optional>

#include "../expr_tree.hpp"
#include "../fitness.hpp"

namespace gepsbp::bench {

namespace detail {
inline auto NumberOf(ExprTree const& t) -> std::optional<double>
{
    if (t.Size() == 1 && t[0].IsNumber()) { return t[0].value; }
    return std::nullopt;
}

inline auto Num(double v) -> ExprTree { return ExprTree::Leaf(Node::Number(v)); }

inline auto Is(ExprTree const& t, double v) -> bool
{
    auto n = NumberOf(t);
    return n && *n == v;
}

inline auto Fold(ExprTree const& t) -> std::optional<double>
{
    static Matrix const one(1, 0);
    auto v = EvaluateBatch(t, one).front();
    if (!std::isfinite(v)) { return std::nullopt; }
    return v;
}

inline auto Rewrite(ExprTree const& t) -> ExprTree
{
    auto const& root = t[0];
    if (root.IsLeaf()) { return t; }
    auto a = t.Subtree(1);
    auto const op = root.op;

    if (root.arity == 1) {
        if (NumberOf(a)) {
            if (auto v = Fold(t)) { return Num(*v); }
            return t;
        }
        auto const inner = a[0];
        bool const innerUnary = !inner.IsLeaf() && inner.arity == 1;
        switch (op.kind) {
        case OpKind::Neg:
            if (innerUnary && inner.op.kind == OpKind::Neg) { return a.Subtree(1); }
            break;
        case OpKind::Log:
            if (innerUnary && inner.op.kind == OpKind::Exp) { return a.Subtree(1); }
            break;
        case OpKind::Exp:
            if (innerUnary && inner.op.kind == OpKind::Log) { return a.Subtree(1); }
            break;
        case OpKind::Pow: {
            auto const e = op.exponent;
            if (e == Rational(1)) { return a; }
            if (e == Rational(2) && innerUnary && inner.op.kind == OpKind::Sqrt) { return a.Subtree(1); }
            if (innerUnary && inner.op.kind == OpKind::Pow && e.denominator() == 1 &&
                inner.op.exponent.denominator() == 1) {
                return ExprTree::Make(Operator::Power(e * inner.op.exponent), {a.Subtree(1)});
            }
            break;
        }
        default: break;
        }
        return t;
    }

    auto b = t.Subtree(1 + t[1].length);
    auto na = NumberOf(a);
    auto nb = NumberOf(b);
    if (na && nb) {
        if (auto v = Fold(t)) { return Num(*v); }
        return t;
    }
    switch (op.kind) {
    case OpKind::Add:
        if (Is(a, 0)) { return b; }
        if (Is(b, 0)) { return a; }
        if (nb) { return ExprTree::Make(OpKind::Add, {b, a}); } // numbers to the left
        if (na && a.Size() == 1 && b[0].kind == NodeKind::Function && b[0].op.kind == OpKind::Add) {
            auto bl = b.Subtree(1);
            if (auto m = NumberOf(bl)) {
                return ExprTree::Make(OpKind::Add, {Num(*na + *m), b.Subtree(1 + b[1].length)});
            }
        }
        break;
    case OpKind::Sub:
        if (Is(b, 0)) { return a; }
        if (a == b) { return Num(0.0); }
        if (Is(a, 0)) { return ExprTree::Make(OpKind::Neg, {b}); }
        if (nb) { return ExprTree::Make(OpKind::Add, {Num(-*nb), a}); }
        break;
    case OpKind::Mul:
        if (Is(a, 0) || Is(b, 0)) { return Num(0.0); }
        if (Is(a, 1)) { return b; }
        if (Is(b, 1)) { return a; }
        if (nb) { return ExprTree::Make(OpKind::Mul, {b, a}); }
        if (na && b[0].kind == NodeKind::Function && b[0].op.kind == OpKind::Mul) {
            auto bl = b.Subtree(1);
            if (auto m = NumberOf(bl)) {
                return ExprTree::Make(OpKind::Mul, {Num(*na * *m), b.Subtree(1 + b[1].length)});
            }
        }
        break;
    case OpKind::Div:
        if (Is(b, 1)) { return a; }
        if (Is(a, 0)) { return Num(0.0); }
        if (a == b) { return Num(1.0); }
        if (nb && *nb != 0.0) { return ExprTree::Make(OpKind::Mul, {Num(1.0 / *nb), a}); }
        break;
    default: break;
    }
    return t;
}

inline auto SimplifyOnce(ExprTree const& t) -> ExprTree
{
    auto const& root = t[0];
    if (root.IsLeaf()) { return ExprTree::Leaf(root.IsNumber() ? Node::Number(root.value) : root); }
    if (root.arity == 1) { return Rewrite(ExprTree::Make(root.op, {SimplifyOnce(t.Subtree(1))})); }
    auto c2 = 1 + t[1].length;
    return Rewrite(ExprTree::Make(root.op, {SimplifyOnce(t.Subtree(1)), SimplifyOnce(t.Subtree(c2))}));
}
} // namespace detail

/// Bounded bottom-up rewriting to a fixed point. Coefficients become plain
/// numbers; x/x and x-x are taken to be 1 and 0.
inline auto Simplify(ExprTree const& tree, std::size_t maxPasses = 16) -> ExprTree
{
    if (tree.Empty()) { return tree; }
    auto current = detail::SimplifyOnce(tree);
    for (std::size_t pass = 1; pass < maxPasses; ++pass) {
        auto next = detail::SimplifyOnce(current);
        if (next == current) { break; }
        current = std::move(next);
    }
    return current;
}

/// Symbol count of the simplified expression.
inline auto Complexity(ExprTree const& tree) -> std::size_t { return Simplify(tree).Size(); }

} // namespace gepsbp::bench

#endif
