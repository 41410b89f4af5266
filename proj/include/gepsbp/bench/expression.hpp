// SPDX-License-Identifier: Apache-2.0

// Infix expression grammar used for ground-truth formulas:
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' exponent)?
//   exponent:= ['-'] number | '(' ['-'] integer ['/' integer] ')' | '(' '-' number ')'
//   primary := number | 'pi' | name | func '(' expr ')' | '(' expr ')'
//   func    := sin | cos | log | exp | sqrt
//
// Exponents must be rational. `x^0.5` becomes sqrt, `x^2` a pow(2) node.

#ifndef GEPSBP_BENCH_EXPRESSION_HPP
#define GEPSBP_BENCH_EXPRESSION_HPP

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "../dimension.hpp"
#include "../expr_tree.hpp"

namespace gepsbp::bench {

class ExpressionError : public std::invalid_argument {
public:
    ExpressionError(std::string const& msg, std::size_t pos)
        : std::invalid_argument(msg + " at position " + std::to_string(pos)), pos_(pos)
    {
    }
    [[nodiscard]] auto Position() const -> std::size_t { return pos_; }

private:
    std::size_t pos_;
};

namespace detail {
class ExpressionParser {
public:
    ExpressionParser(std::string_view text, std::vector<std::string> const& names,
                     std::vector<DimensionVector> const& dims)
        : text_(text), names_(names), dims_(dims)
    {
    }

    auto Parse() -> ExprTree
    {
        auto t = Expr();
        Skip();
        if (pos_ != text_.size()) { throw ExpressionError("unexpected trailing input", pos_); }
        return t;
    }

private:
    void Skip()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])) != 0) { ++pos_; }
    }
    auto Peek() -> char
    {
        Skip();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }
    auto Accept(char c) -> bool
    {
        if (Peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void Expect(char c)
    {
        if (!Accept(c)) { throw ExpressionError(std::string("expected '") + c + "'", pos_); }
    }

    auto Expr() -> ExprTree
    {
        auto lhs = Term();
        for (;;) {
            if (Accept('+')) {
                lhs = ExprTree::Make(OpKind::Add, {lhs, Term()});
            } else if (Accept('-')) {
                lhs = ExprTree::Make(OpKind::Sub, {lhs, Term()});
            } else {
                return lhs;
            }
        }
    }

    auto Term() -> ExprTree
    {
        auto lhs = Unary();
        for (;;) {
            if (Accept('*')) {
                lhs = ExprTree::Make(OpKind::Mul, {lhs, Unary()});
            } else if (Accept('/')) {
                lhs = ExprTree::Make(OpKind::Div, {lhs, Unary()});
            } else {
                return lhs;
            }
        }
    }

    auto Unary() -> ExprTree
    {
        if (Accept('-')) { return ExprTree::Make(OpKind::Neg, {Unary()}); }
        return Power();
    }

    auto Power() -> ExprTree
    {
        auto base = Primary();
        if (!Accept('^')) { return base; }
        auto e = Exponent();
        if (e == Rational(1, 2)) { return ExprTree::Make(OpKind::Sqrt, {base}); }
        if (e == Rational(0)) { throw ExpressionError("zero exponent", pos_); }
        return ExprTree::Make(Operator::Power(e), {base});
    }

    auto Integer() -> std::int64_t
    {
        Skip();
        bool neg = Accept('-');
        Skip();
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
        if (ec != std::errc{}) { throw ExpressionError("expected integer", pos_); }
        pos_ = static_cast<std::size_t>(p - text_.data());
        return neg ? -v : v;
    }

    auto Exponent() -> Rational
    {
        if (Accept('(')) {
            auto start = pos_;
            auto num = Integer();
            std::int64_t den = 1;
            if (Accept('/')) { den = Integer(); }
            if (Peek() == '.') {
                pos_ = start;
                auto r = FromDecimal(Number(true), start);
                Expect(')');
                return r;
            }
            Expect(')');
            if (den == 0) { throw ExpressionError("zero denominator in exponent", pos_); }
            return {num, den};
        }
        auto start = pos_;
        return FromDecimal(Number(true), start);
    }

    static auto FromDecimal(double v, std::size_t pos) -> Rational
    {
        for (std::int64_t den : {1, 2, 3, 4, 5, 6, 8, 10, 100, 1000}) {
            auto num = std::round(v * static_cast<double>(den));
            if (std::abs(num / static_cast<double>(den) - v) < 1e-12) {
                return {static_cast<std::int64_t>(num), den};
            }
        }
        throw ExpressionError("exponent is not a simple rational", pos);
    }

    auto Number(bool allowSign) -> double
    {
        Skip();
        auto start = pos_;
        if (allowSign && pos_ < text_.size() && text_[pos_] == '-') { ++pos_; }
        double v = 0.0;
        auto [p, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
        if (ec != std::errc{}) { throw ExpressionError("expected number", start); }
        pos_ = static_cast<std::size_t>(p - text_.data());
        return text_[start] == '-' ? -v : v;
    }

    auto Primary() -> ExprTree
    {
        auto c = Peek();
        if (c == '(') {
            ++pos_;
            auto t = Expr();
            Expect(')');
            return t;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) != 0 || c == '.') {
            return ExprTree::Leaf(Node::Number(Number(false)));
        }
        if (std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_') {
            auto start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) != 0 || text_[pos_] == '_')) {
                ++pos_;
            }
            std::string name(text_.substr(start, pos_ - start));
            for (std::size_t i = 0; i < names_.size(); ++i) {
                if (names_[i] == name) {
                    auto dim = i < dims_.size() ? dims_[i] : DimensionVector::Zero();
                    return ExprTree::Leaf(Node::Feature(static_cast<std::uint32_t>(i), dim));
                }
            }
            if (name == "pi") { return ExprTree::Leaf(Node::Number(std::numbers::pi)); }
            static constexpr std::pair<char const*, OpKind> kFunctions[] = {
                {"sin", OpKind::Sin}, {"cos", OpKind::Cos}, {"log", OpKind::Log}, {"exp", OpKind::Exp},
                {"sqrt", OpKind::Sqrt}};
            for (auto const& [fname, kind] : kFunctions) {
                if (name == fname) {
                    Expect('(');
                    auto arg = Expr();
                    Expect(')');
                    return ExprTree::Make(kind, {arg});
                }
            }
            throw ExpressionError("unknown name '" + name + "'", start);
        }
        throw ExpressionError("unexpected character", pos_);
    }

    std::string_view text_;
    std::vector<std::string> const& names_;
    std::vector<DimensionVector> const& dims_;
    std::size_t pos_{0};
};
} // namespace detail

/// Parses `text` with `names[i]` bound to feature column i.
inline auto ParseExpression(std::string_view text, std::vector<std::string> const& names,
                            std::vector<DimensionVector> const& dims = {}) -> ExprTree
{
    return detail::ExpressionParser(text, names, dims).Parse();
}

} // namespace gepsbp::bench

#endif
