// SPDX-License-Identifier: Apache-2.0

#ifndef GEPSBP_EXPR_TREE_HPP
#define GEPSBP_EXPR_TREE_HPP

#include <charconv>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "dimension.hpp"
#include "symbols.hpp"

namespace gepsbp {

enum class NodeKind : std::uint8_t { Feature, Constant, Literal, Function };

/// One node of a pre-order expression tree.
///
/// `length` is the size of the subtree rooted here (self included); the first
/// child sits at index+1 and each next sibling follows the previous subtree.
struct Node {
    NodeKind kind{NodeKind::Literal};
    Operator op;
    std::uint8_t arity{0};
    std::uint32_t feature{0};
    double value{0.0};
    std::int32_t slot{-1}; // genome position for constants, -1 when detached
    SymbolId symbol{kNoSymbol};
    std::uint32_t length{1};
    bool pinned{false}; // linker nodes; never replaced by correction
    DimResult dim{DimensionVector::Zero()};

    static auto FromSymbol(SymbolTable const& table, SymbolId id, double constant = 0.0) -> Node
    {
        auto const& s = table[id];
        Node n;
        n.symbol = id;
        switch (s.kind) {
        case SymbolKind::Feature:
            n.kind = NodeKind::Feature;
            n.feature = s.feature;
            n.dim = s.dim;
            break;
        case SymbolKind::Constant:
            n.kind = NodeKind::Constant;
            n.value = constant;
            break;
        case SymbolKind::Literal:
            n.kind = NodeKind::Literal;
            n.value = s.value;
            break;
        case SymbolKind::Function:
            n.kind = NodeKind::Function;
            n.op = s.op;
            n.arity = static_cast<std::uint8_t>(s.Arity());
            n.dim = Undefined;
            break;
        }
        return n;
    }

    static auto Feature(std::uint32_t index, DimensionVector dim = {}) -> Node
    {
        Node n;
        n.kind = NodeKind::Feature;
        n.feature = index;
        n.dim = dim;
        return n;
    }
    static auto Number(double v) -> Node
    {
        Node n;
        n.kind = NodeKind::Literal;
        n.value = v;
        return n;
    }
    static auto Coefficient(double v, std::int32_t slot = -1) -> Node
    {
        Node n;
        n.kind = NodeKind::Constant;
        n.value = v;
        n.slot = slot;
        return n;
    }
    static auto Function(Operator op) -> Node
    {
        Node n;
        n.kind = NodeKind::Function;
        n.op = op;
        n.arity = static_cast<std::uint8_t>(Arity(op.kind));
        n.dim = Undefined;
        return n;
    }

    [[nodiscard]] auto IsLeaf() const -> bool { return arity == 0; }
    [[nodiscard]] auto IsNumber() const -> bool { return kind == NodeKind::Constant || kind == NodeKind::Literal; }
};

/// Same symbol content; ignores caches, slots and pinning.
inline auto SameSymbol(Node const& a, Node const& b) -> bool
{
    if (a.kind != b.kind) { return false; }
    switch (a.kind) {
    case NodeKind::Feature: return a.feature == b.feature;
    case NodeKind::Constant:
    case NodeKind::Literal: return a.value == b.value;
    case NodeKind::Function: return a.op == b.op;
    }
    return false;
}

class ExprTree {
public:
    ExprTree() = default;
    explicit ExprTree(std::vector<Node> nodes) : nodes_(std::move(nodes))
    {
        UpdateLengths();
        ForwardDims();
    }

    static auto Leaf(Node n) -> ExprTree { return ExprTree(std::vector<Node>{n}); }

    /// Builds op(children...) from subtrees.
    static auto Make(Operator op, std::initializer_list<ExprTree> children) -> ExprTree
    {
        std::vector<Node> nodes{Node::Function(op)};
        for (auto const& c : children) { nodes.insert(nodes.end(), c.nodes_.begin(), c.nodes_.end()); }
        return ExprTree(std::move(nodes));
    }
    static auto Make(OpKind k, std::initializer_list<ExprTree> children) -> ExprTree
    {
        return Make(Operator::Make(k), children);
    }

    [[nodiscard]] auto Size() const -> std::size_t { return nodes_.size(); }
    [[nodiscard]] auto Empty() const -> bool { return nodes_.empty(); }
    [[nodiscard]] auto Nodes() const -> std::vector<Node> const& { return nodes_; }
    auto Nodes() -> std::vector<Node>& { return nodes_; }
    [[nodiscard]] auto operator[](std::size_t i) const -> Node const& { return nodes_[i]; }
    auto operator[](std::size_t i) -> Node& { return nodes_[i]; }
    [[nodiscard]] auto RootDim() const -> DimResult const& { return nodes_.front().dim; }

    /// Index of child k (0-based) of node i.
    [[nodiscard]] auto Child(std::size_t i, std::size_t k) const -> std::size_t
    {
        auto c = i + 1;
        for (std::size_t j = 0; j < k; ++j) { c += nodes_[c].length; }
        return c;
    }

    [[nodiscard]] auto Subtree(std::size_t i) const -> ExprTree
    {
        auto first = nodes_.begin() + static_cast<std::ptrdiff_t>(i);
        ExprTree t;
        t.nodes_.assign(first, first + nodes_[i].length);
        return t;
    }

    /// Replaces the subtree rooted at i; lengths and dimensions are refreshed.
    void Replace(std::size_t i, ExprTree const& replacement)
    {
        auto first = nodes_.begin() + static_cast<std::ptrdiff_t>(i);
        auto last = first + nodes_[i].length;
        first = nodes_.erase(first, last);
        nodes_.insert(first, replacement.nodes_.begin(), replacement.nodes_.end());
        UpdateLengths();
        ForwardDims();
    }

    void UpdateLengths()
    {
        std::vector<std::uint32_t> stack;
        stack.reserve(nodes_.size());
        for (std::size_t k = nodes_.size(); k-- > 0;) {
            auto& n = nodes_[k];
            std::uint32_t len = 1;
            for (int a = 0; a < n.arity; ++a) {
                len += stack.back();
                stack.pop_back();
            }
            n.length = len;
            stack.push_back(len);
        }
    }

    /// Recomputes the dimension cache of every internal node, leaves first.
    void ForwardDims()
    {
        for (std::size_t k = nodes_.size(); k-- > 0;) {
            auto& n = nodes_[k];
            if (n.IsLeaf()) {
                if (n.IsNumber()) { n.dim = DimensionVector::Zero(); }
                continue;
            }
            auto c1 = k + 1;
            if (n.arity == 1) {
                n.dim = ForwardApply(n.op, nodes_[c1].dim, Undefined, false);
            } else {
                auto c2 = c1 + nodes_[c1].length;
                n.dim = ForwardApply(n.op, nodes_[c1].dim, nodes_[c2].dim, true);
            }
        }
    }

    /// True if any node carries an Undefined dimension.
    [[nodiscard]] auto HasUndefined() const -> bool
    {
        for (auto const& n : nodes_) {
            if (!n.dim) { return true; }
        }
        return false;
    }

    [[nodiscard]] auto CoefficientCount() const -> std::size_t
    {
        std::size_t c = 0;
        for (auto const& n : nodes_) { c += n.kind == NodeKind::Constant ? 1 : 0; }
        return c;
    }

    /// Values of constant leaves in pre-order occurrence.
    [[nodiscard]] auto Coefficients() const -> std::vector<double>
    {
        std::vector<double> out;
        for (auto const& n : nodes_) {
            if (n.kind == NodeKind::Constant) { out.push_back(n.value); }
        }
        return out;
    }

    void SetCoefficients(std::vector<double> const& values)
    {
        std::size_t k = 0;
        for (auto& n : nodes_) {
            if (n.kind == NodeKind::Constant && k < values.size()) { n.value = values[k++]; }
        }
    }

    friend auto operator==(ExprTree const& a, ExprTree const& b) -> bool
    {
        if (a.nodes_.size() != b.nodes_.size()) { return false; }
        for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
            if (!SameSymbol(a.nodes_[i], b.nodes_[i])) { return false; }
        }
        return true;
    }

    /// Infix rendering that the truth-expression parser reads back.
    [[nodiscard]] auto ToString(std::vector<std::string> const& featureNames = {}) const -> std::string
    {
        if (nodes_.empty()) { return {}; }
        std::string out;
        Render(0, featureNames, out);
        return out;
    }

private:
    static void AppendNumber(double v, std::string& out)
    {
        char buf[64];
        auto res = std::to_chars(buf, buf + sizeof(buf), v);
        std::string s(buf, res.ptr);
        if (v < 0) {
            out += "(" + s + ")";
        } else {
            out += s;
        }
    }

    void Render(std::size_t i, std::vector<std::string> const& names, std::string& out) const
    {
        auto const& n = nodes_[i];
        switch (n.kind) {
        case NodeKind::Feature:
            out += n.feature < names.size() ? names[n.feature] : "x" + std::to_string(n.feature);
            return;
        case NodeKind::Constant:
        case NodeKind::Literal:
            AppendNumber(n.value, out);
            return;
        case NodeKind::Function:
            break;
        }
        auto c1 = i + 1;
        switch (n.op.kind) {
        case OpKind::Add:
        case OpKind::Sub:
        case OpKind::Mul:
        case OpKind::Div:
            out += '(';
            Render(c1, names, out);
            out += ' ' + OperatorName(n.op) + ' ';
            Render(c1 + nodes_[c1].length, names, out);
            out += ')';
            return;
        case OpKind::Pow: {
            out += '(';
            Render(c1, names, out);
            out += ")^";
            auto const& e = n.op.exponent;
            if (e.denominator() == 1 && e.numerator() >= 0) {
                out += std::to_string(e.numerator());
            } else {
                out += "(" + std::to_string(e.numerator());
                if (e.denominator() != 1) { out += "/" + std::to_string(e.denominator()); }
                out += ")";
            }
            return;
        }
        case OpKind::Neg:
            out += "(-";
            Render(c1, names, out);
            out += ')';
            return;
        default:
            out += OperatorName(n.op) + "(";
            Render(c1, names, out);
            out += ')';
            return;
        }
    }

    std::vector<Node> nodes_;
};

} // namespace gepsbp

#endif
