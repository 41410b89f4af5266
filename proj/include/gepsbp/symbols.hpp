// SPDX-License-Identifier: Apache-2.0

#ifndef GEPSBP_SYMBOLS_HPP
#define GEPSBP_SYMBOLS_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dimension.hpp"

namespace gepsbp {

using SymbolId = std::uint16_t;
inline constexpr SymbolId kNoSymbol = std::numeric_limits<SymbolId>::max();

enum class SymbolKind : std::uint8_t {
    Feature,  // input column
    Constant, // ephemeral coefficient, materialized per occurrence
    Literal,  // fixed dimensionless number
    Function, // non-terminal
};

struct Symbol {
    SymbolKind kind{SymbolKind::Feature};
    std::string name;
    DimensionVector dim;
    std::uint32_t feature{0};
    double value{0.0};
    Operator op;

    [[nodiscard]] auto Arity() const -> int { return kind == SymbolKind::Function ? gepsbp::Arity(op.kind) : 0; }
    [[nodiscard]] auto IsTerminal() const -> bool { return kind != SymbolKind::Function; }
};

/// Terminal and non-terminal alphabet of a run. Ids are dense and stable.
class SymbolTable {
public:
    auto AddFeature(std::string name, DimensionVector dim) -> SymbolId
    {
        Symbol s;
        s.kind = SymbolKind::Feature;
        s.name = std::move(name);
        s.dim = dim;
        s.feature = featureCount_++;
        return Add(std::move(s));
    }

    auto AddConstant(std::string name = "c") -> SymbolId
    {
        Symbol s;
        s.kind = SymbolKind::Constant;
        s.name = std::move(name);
        return Add(std::move(s));
    }

    auto AddLiteral(double value, std::string name = {}) -> SymbolId
    {
        Symbol s;
        s.kind = SymbolKind::Literal;
        s.value = value;
        s.name = name.empty() ? FormatNumber(value) : std::move(name);
        return Add(std::move(s));
    }

    auto AddFunction(Operator op) -> SymbolId
    {
        auto arity = gepsbp::Arity(op.kind);
        if (arity > 2) { throw std::invalid_argument("operators of arity > 2 are not supported"); }
        Symbol s;
        s.kind = SymbolKind::Function;
        s.op = op;
        s.name = OperatorName(op);
        return Add(std::move(s));
    }

    [[nodiscard]] auto operator[](SymbolId id) const -> Symbol const& { return symbols_.at(id); }
    [[nodiscard]] auto Size() const -> std::size_t { return symbols_.size(); }
    [[nodiscard]] auto Terminals() const -> std::span<SymbolId const> { return terminals_; }
    [[nodiscard]] auto Nonterminals() const -> std::span<SymbolId const> { return nonterminals_; }
    [[nodiscard]] auto FeatureCount() const -> std::uint32_t { return featureCount_; }

    [[nodiscard]] auto Find(std::string const& name) const -> std::optional<SymbolId>
    {
        for (std::size_t i = 0; i < symbols_.size(); ++i) {
            if (symbols_[i].name == name) { return static_cast<SymbolId>(i); }
        }
        return std::nullopt;
    }

    [[nodiscard]] auto FindFeature(std::uint32_t feature) const -> std::optional<SymbolId>
    {
        for (auto id : terminals_) {
            if (symbols_[id].kind == SymbolKind::Feature && symbols_[id].feature == feature) { return id; }
        }
        return std::nullopt;
    }

    [[nodiscard]] auto FindFunction(Operator const& op) const -> std::optional<SymbolId>
    {
        for (auto id : nonterminals_) {
            if (symbols_[id].op == op) { return id; }
        }
        return std::nullopt;
    }

    /// Space-separated symbol names; identifies the alphabet in persisted files.
    [[nodiscard]] auto Signature() const -> std::string
    {
        std::string out;
        for (auto const& s : symbols_) {
            if (!out.empty()) { out += ' '; }
            out += s.name;
            if (s.kind == SymbolKind::Feature) { out += ':' + s.dim.ToString(); }
        }
        return out;
    }

    static auto FormatNumber(double v) -> std::string
    {
        auto s = std::to_string(v);
        while (!s.empty() && s.back() == '0') { s.pop_back(); }
        if (!s.empty() && s.back() == '.') { s.pop_back(); }
        return s;
    }

private:
    auto Add(Symbol s) -> SymbolId
    {
        if (symbols_.size() >= kNoSymbol) { throw std::length_error("symbol table full"); }
        auto id = static_cast<SymbolId>(symbols_.size());
        (s.IsTerminal() ? terminals_ : nonterminals_).push_back(id);
        symbols_.push_back(std::move(s));
        return id;
    }

    std::vector<Symbol> symbols_;
    std::vector<SymbolId> terminals_;
    std::vector<SymbolId> nonterminals_;
    std::uint32_t featureCount_{0};
};

} // namespace gepsbp

#endif
