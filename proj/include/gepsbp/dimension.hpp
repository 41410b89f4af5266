// SPDX-License-Identifier: Apache-2.0

#ifndef GEPSBP_DIMENSION_HPP
#define GEPSBP_DIMENSION_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include <boost/rational.hpp>

namespace gepsbp {

using Rational = boost::rational<std::int64_t>;

/// Physical dimension as exponents over the seven SI base units.
///
/// Index order is fixed: mass (kg), length (m), time (s), temperature (K),
/// current (A), amount of substance (mol), luminous intensity (cd).
class DimensionVector {
public:
    static constexpr std::size_t kSize = 7;
    using Storage = std::array<Rational, kSize>;

    DimensionVector() = default;
    explicit DimensionVector(Storage const& e) : exponents_(e) { }
    DimensionVector(std::initializer_list<Rational> values)
    {
        if (values.size() != kSize) {
            throw std::invalid_argument("DimensionVector needs exactly 7 exponents");
        }
        std::size_t i = 0;
        for (auto const& v : values) { exponents_[i++] = v; }
    }

    static auto Zero() -> DimensionVector { return {}; }
    static auto Unit(std::size_t axis, Rational power = 1) -> DimensionVector
    {
        DimensionVector d;
        d.exponents_.at(axis) = power;
        return d;
    }

    [[nodiscard]] auto operator[](std::size_t i) const -> Rational const& { return exponents_[i]; }
    auto operator[](std::size_t i) -> Rational& { return exponents_[i]; }
    [[nodiscard]] auto Exponents() const -> Storage const& { return exponents_; }

    [[nodiscard]] auto IsDimensionless() const -> bool
    {
        for (auto const& e : exponents_) {
            if (e != Rational(0)) { return false; }
        }
        return true;
    }

    friend auto operator+(DimensionVector a, DimensionVector const& b) -> DimensionVector
    {
        for (std::size_t i = 0; i < kSize; ++i) { a.exponents_[i] += b.exponents_[i]; }
        return a;
    }
    friend auto operator-(DimensionVector a, DimensionVector const& b) -> DimensionVector
    {
        for (std::size_t i = 0; i < kSize; ++i) { a.exponents_[i] -= b.exponents_[i]; }
        return a;
    }
    friend auto operator-(DimensionVector a) -> DimensionVector
    {
        for (auto& e : a.exponents_) { e = -e; }
        return a;
    }
    friend auto operator*(Rational s, DimensionVector a) -> DimensionVector
    {
        for (auto& e : a.exponents_) { e *= s; }
        return a;
    }
    friend auto operator/(DimensionVector a, Rational s) -> DimensionVector
    {
        for (auto& e : a.exponents_) { e /= s; }
        return a;
    }
    friend auto operator==(DimensionVector const& a, DimensionVector const& b) -> bool
    {
        return a.exponents_ == b.exponents_;
    }
    friend auto operator<(DimensionVector const& a, DimensionVector const& b) -> bool
    {
        for (std::size_t i = 0; i < kSize; ++i) {
            if (a.exponents_[i] != b.exponents_[i]) { return a.exponents_[i] < b.exponents_[i]; }
        }
        return false;
    }

    /// Renders as "[1,1,-2,0,0,0,0]"; fractional exponents print as "p/q".
    [[nodiscard]] auto ToString() const -> std::string
    {
        std::string out = "[";
        for (std::size_t i = 0; i < kSize; ++i) {
            if (i != 0) { out += ','; }
            out += std::to_string(exponents_[i].numerator());
            if (exponents_[i].denominator() != 1) {
                out += '/';
                out += std::to_string(exponents_[i].denominator());
            }
        }
        out += ']';
        return out;
    }

    [[nodiscard]] auto Hash() const noexcept -> std::size_t
    {
        std::size_t h = 0xcbf29ce484222325ULL;
        for (auto const& e : exponents_) {
            h = (h ^ static_cast<std::size_t>(e.numerator())) * 0x100000001b3ULL;
            h = (h ^ static_cast<std::size_t>(e.denominator())) * 0x100000001b3ULL;
        }
        return h;
    }

private:
    Storage exponents_{};
};

/// Result of a forward dimension pass: a vector, or empty when a rule is violated.
using DimResult = std::optional<DimensionVector>;
inline constexpr std::nullopt_t Undefined = std::nullopt;

/// Operators understood by the dimension algebra and the expression evaluator.
enum class OpKind : std::uint8_t {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Sqrt,
    Sin,
    Cos,
    Log,
    Exp,
    Neg,
};

inline constexpr std::size_t kOpKindCount = 11;

/// Thrown for operator ids outside the known set or used with the wrong arity.
class OperatorError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An operator together with its compile-time parameter (the exponent of pow).
struct Operator {
    OpKind kind{OpKind::Add};
    Rational exponent{1};

    static auto Make(OpKind k) -> Operator { return {k, Rational{1}}; }
    static auto Power(Rational n) -> Operator { return {OpKind::Pow, n}; }

    friend auto operator==(Operator const& a, Operator const& b) -> bool
    {
        return a.kind == b.kind && (a.kind != OpKind::Pow || a.exponent == b.exponent);
    }
};

inline auto IsKnown(OpKind k) -> bool { return static_cast<std::size_t>(k) < kOpKindCount; }

inline auto Arity(OpKind k) -> int
{
    switch (k) {
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul:
    case OpKind::Div:
        return 2;
    case OpKind::Pow:
    case OpKind::Sqrt:
    case OpKind::Sin:
    case OpKind::Cos:
    case OpKind::Log:
    case OpKind::Exp:
    case OpKind::Neg:
        return 1;
    }
    throw OperatorError("unknown operator id " + std::to_string(static_cast<int>(k)));
}

inline auto IsTranscendental(OpKind k) -> bool
{
    return k == OpKind::Sin || k == OpKind::Cos || k == OpKind::Log || k == OpKind::Exp;
}

inline auto OperatorName(Operator const& op) -> std::string
{
    switch (op.kind) {
    case OpKind::Add: return "+";
    case OpKind::Sub: return "-";
    case OpKind::Mul: return "*";
    case OpKind::Div: return "/";
    case OpKind::Pow: {
        auto n = std::to_string(op.exponent.numerator());
        if (op.exponent.denominator() != 1) { n += "/" + std::to_string(op.exponent.denominator()); }
        return "pow" + n;
    }
    case OpKind::Sqrt: return "sqrt";
    case OpKind::Sin: return "sin";
    case OpKind::Cos: return "cos";
    case OpKind::Log: return "log";
    case OpKind::Exp: return "exp";
    case OpKind::Neg: return "neg";
    }
    throw OperatorError("unknown operator id " + std::to_string(static_cast<int>(op.kind)));
}

/// Inverse of OperatorName; also accepts "sq" for pow2.
inline auto ParseOperator(std::string const& name) -> Operator
{
    if (name == "+") { return Operator::Make(OpKind::Add); }
    if (name == "-") { return Operator::Make(OpKind::Sub); }
    if (name == "*") { return Operator::Make(OpKind::Mul); }
    if (name == "/") { return Operator::Make(OpKind::Div); }
    if (name == "sqrt") { return Operator::Make(OpKind::Sqrt); }
    if (name == "sin") { return Operator::Make(OpKind::Sin); }
    if (name == "cos") { return Operator::Make(OpKind::Cos); }
    if (name == "log") { return Operator::Make(OpKind::Log); }
    if (name == "exp") { return Operator::Make(OpKind::Exp); }
    if (name == "neg") { return Operator::Make(OpKind::Neg); }
    if (name == "sq") { return Operator::Power(2); }
    if (name.rfind("pow", 0) == 0 && name.size() > 3) {
        auto body = name.substr(3);
        auto slash = body.find('/');
        try {
            std::size_t used = 0;
            if (slash == std::string::npos) {
                auto n = std::stoll(body, &used);
                if (used == body.size()) { return Operator::Power(Rational(n)); }
            } else {
                auto num = std::stoll(body.substr(0, slash), &used);
                auto den = std::stoll(body.substr(slash + 1));
                if (den != 0) { return Operator::Power(Rational(num, den)); }
            }
        } catch (std::exception const&) {
        }
    }
    throw OperatorError("unknown operator '" + name + "'");
}

namespace detail {
inline void CheckArity(Operator const& op, bool has_b)
{
    if (!IsKnown(op.kind)) {
        throw OperatorError("unknown operator id " + std::to_string(static_cast<int>(op.kind)));
    }
    if ((Arity(op.kind) == 2) != has_b) {
        throw OperatorError("operand count does not match arity of '" + OperatorName(op) + "'");
    }
}
} // namespace detail

/// Forward rule: dimension of op(a[, b]); Undefined on a homogeneity violation.
inline auto ForwardApply(Operator const& op, DimensionVector const& a,
                         std::optional<DimensionVector> const& b = std::nullopt) -> DimResult
{
    detail::CheckArity(op, b.has_value());
    switch (op.kind) {
    case OpKind::Add:
    case OpKind::Sub:
        if (a == *b) { return a; }
        return Undefined;
    case OpKind::Mul: return a + *b;
    case OpKind::Div: return a - *b;
    case OpKind::Pow: return op.exponent * a;
    case OpKind::Sqrt: return a / Rational(2);
    case OpKind::Neg: return a;
    case OpKind::Sin:
    case OpKind::Cos:
    case OpKind::Log:
    case OpKind::Exp:
        if (a.IsDimensionless()) { return DimensionVector::Zero(); }
        return Undefined;
    }
    return Undefined;
}

/// Propagates Undefined operands through ForwardApply.
inline auto ForwardApply(Operator const& op, DimResult const& a, DimResult const& b, bool binary) -> DimResult
{
    if (!a || (binary && !b)) { return Undefined; }
    return binary ? ForwardApply(op, *a, *b) : ForwardApply(op, *a);
}

/// Backward rule: child targets for a node that should evaluate to `target`.
///
/// For * and / a known child dimension pins its sibling's target through the
/// inverse of the forward rule; with neither known the target is halved
/// exactly between the children. Unary operators use only `.first`.
inline auto BackwardSplit(Operator const& op, DimensionVector const& target,
                          std::optional<DimensionVector> const& left_known = std::nullopt,
                          std::optional<DimensionVector> const& right_known = std::nullopt)
    -> std::pair<DimensionVector, DimensionVector>
{
    if (!IsKnown(op.kind)) {
        throw OperatorError("unknown operator id " + std::to_string(static_cast<int>(op.kind)));
    }
    auto const zero = DimensionVector::Zero();
    switch (op.kind) {
    case OpKind::Add:
    case OpKind::Sub:
        return {target, target};
    case OpKind::Mul:
        if (left_known) { return {*left_known, target - *left_known}; }
        if (right_known) { return {target - *right_known, *right_known}; }
        {
            auto left = target - target / Rational(2);
            return {left, target - left};
        }
    case OpKind::Div:
        // target = left - right
        if (left_known) { return {*left_known, *left_known - target}; }
        if (right_known) { return {target + *right_known, *right_known}; }
        {
            auto left = target - target / Rational(2);
            return {left, left - target};
        }
    case OpKind::Pow:
        if (op.exponent == Rational(0)) { throw std::domain_error("pow(0) has no backward rule"); }
        return {target / op.exponent, zero};
    case OpKind::Sqrt: return {Rational(2) * target, zero};
    case OpKind::Neg: return {target, zero};
    case OpKind::Sin:
    case OpKind::Cos:
    case OpKind::Log:
    case OpKind::Exp:
        return {zero, zero};
    }
    return {zero, zero};
}

namespace detail {
inline auto SquaredDiff(DimensionVector const& a, DimensionVector const& b) -> double
{
    double sum = 0.0;
    for (std::size_t i = 0; i < DimensionVector::kSize; ++i) {
        auto d = boost::rational_cast<double>(a[i] - b[i]);
        sum += d * d;
    }
    return sum;
}
} // namespace detail

/// Mean squared exponent difference, (1/7) * sum (a_i - b_i)^2.
inline auto Distance(DimensionVector const& a, DimensionVector const& b) -> double
{
    return detail::SquaredDiff(a, b) / static_cast<double>(DimensionVector::kSize);
}

/// Plain Euclidean norm of the exponent difference.
inline auto L2NormDiff(DimensionVector const& a, DimensionVector const& b) -> double
{
    return std::sqrt(detail::SquaredDiff(a, b));
}

} // namespace gepsbp

template <>
struct std::hash<gepsbp::DimensionVector> {
    auto operator()(gepsbp::DimensionVector const& d) const noexcept -> std::size_t { return d.Hash(); }
};

#endif
