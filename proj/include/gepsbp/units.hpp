// SPDX-License-Identifier: Apache-2.0

#ifndef GEPSBP_UNITS_HPP
#define GEPSBP_UNITS_HPP

#include <cctype>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

#include "dimension.hpp"

namespace gepsbp {

class UnitParseError : public std::runtime_error {
public:
    UnitParseError(std::string const& message, std::size_t position)
        : std::runtime_error(message + " at position " + std::to_string(position))
        , position_(position)
    {
    }
    [[nodiscard]] auto Position() const -> std::size_t { return position_; }

private:
    std::size_t position_;
};

/// Base units plus the common derived units, expanded to base exponents.
inline auto UnitTable() -> std::map<std::string, DimensionVector, std::less<>> const&
{
    // order: kg, m, s, K, A, mol, cd
    static std::map<std::string, DimensionVector, std::less<>> const table {
        { "kg", { 1, 0, 0, 0, 0, 0, 0 } },
        { "m", { 0, 1, 0, 0, 0, 0, 0 } },
        { "s", { 0, 0, 1, 0, 0, 0, 0 } },
        { "K", { 0, 0, 0, 1, 0, 0, 0 } },
        { "A", { 0, 0, 0, 0, 1, 0, 0 } },
        { "mol", { 0, 0, 0, 0, 0, 1, 0 } },
        { "cd", { 0, 0, 0, 0, 0, 0, 1 } },
        { "N", { 1, 1, -2, 0, 0, 0, 0 } },
        { "J", { 1, 2, -2, 0, 0, 0, 0 } },
        { "W", { 1, 2, -3, 0, 0, 0, 0 } },
        { "Pa", { 1, -1, -2, 0, 0, 0, 0 } },
        { "C", { 0, 0, 1, 0, 1, 0, 0 } },
        { "V", { 1, 2, -3, 0, -1, 0, 0 } },
        { "Ohm", { 1, 2, -3, 0, -2, 0, 0 } },
        { "\xCE\xA9", { 1, 2, -3, 0, -2, 0, 0 } }, // Ω
        { "Wb", { 1, 2, -2, 0, -1, 0, 0 } },
        { "Hz", { 0, 0, -1, 0, 0, 0, 0 } },
        { "F", { -1, -2, 4, 0, 2, 0, 0 } },
        { "T", { 1, 0, -2, 0, -1, 0, 0 } },
        { "H", { 1, 2, -2, 0, -2, 0, 0 } },
        { "S", { -1, -2, 3, 0, 2, 0, 0 } },
    };
    return table;
}

namespace detail {
class UnitParser {
public:
    explicit UnitParser(std::string_view text) : text_(text) { }

    auto Parse() -> DimensionVector
    {
        SkipSpace();
        if (pos_ == text_.size()) { throw UnitParseError("empty unit expression", pos_); }
        auto result = Factor();
        for (;;) {
            SkipSpace();
            if (pos_ == text_.size()) { break; }
            char c = text_[pos_];
            if (c == '*' || c == '.') {
                ++pos_;
                result = result + Factor();
            } else if (c == '/') {
                ++pos_;
                result = result - Factor();
            } else {
                throw UnitParseError(std::string("unexpected character '") + c + "'", pos_);
            }
        }
        return result;
    }

private:
    void SkipSpace()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])) != 0) { ++pos_; }
    }

    auto Factor() -> DimensionVector
    {
        SkipSpace();
        auto start = pos_;
        if (pos_ < text_.size() && text_[pos_] == '1') {
            ++pos_;
            return DimensionVector::Zero();
        }
        while (pos_ < text_.size()) {
            auto c = static_cast<unsigned char>(text_[pos_]);
            if (std::isalpha(c) != 0 || c >= 0x80) {
                ++pos_;
            } else {
                break;
            }
        }
        if (start == pos_) { throw UnitParseError("expected unit name", start); }
        auto name = text_.substr(start, pos_ - start);
        auto const& table = UnitTable();
        auto it = table.find(name);
        if (it == table.end()) { throw UnitParseError("unknown unit '" + std::string(name) + "'", start); }
        SkipSpace();
        if (pos_ < text_.size() && text_[pos_] == '^') {
            ++pos_;
            return Exponent() * it->second;
        }
        return it->second;
    }

    auto Exponent() -> Rational
    {
        SkipSpace();
        bool paren = pos_ < text_.size() && text_[pos_] == '(';
        if (paren) { ++pos_; }
        auto num = Integer();
        std::int64_t den = 1;
        if (paren) {
            SkipSpace();
            if (pos_ < text_.size() && text_[pos_] == '/') {
                ++pos_;
                auto at = pos_;
                den = Integer();
                if (den == 0) { throw UnitParseError("zero exponent denominator", at); }
            }
            SkipSpace();
            if (pos_ >= text_.size() || text_[pos_] != ')') { throw UnitParseError("expected ')'", pos_); }
            ++pos_;
        }
        return Rational(num, den);
    }

    auto Integer() -> std::int64_t
    {
        SkipSpace();
        auto start = pos_;
        bool negative = false;
        if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) {
            negative = text_[pos_] == '-';
            ++pos_;
        }
        std::int64_t value = 0;
        auto digits = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])) != 0) {
            value = value * 10 + (text_[pos_] - '0');
            ++pos_;
        }
        if (digits == pos_) { throw UnitParseError("malformed exponent", start); }
        return negative ? -value : value;
    }

    std::string_view text_;
    std::size_t pos_{0};
};
} // namespace detail

/// Parses unit expressions such as "kg*m^2*s^-3*A^-1", "V/m", "m^(1/2)" or "1".
inline auto ParseUnit(std::string_view text) -> DimensionVector
{
    return detail::UnitParser(text).Parse();
}

} // namespace gepsbp

#endif
