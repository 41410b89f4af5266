// SPDX-License-Identifier: Apache-2.0

#ifndef GEPSBP_GENOME_HPP
#define GEPSBP_GENOME_HPP

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "expr_tree.hpp"
#include "random.hpp"
#include "symbols.hpp"

namespace gepsbp {

inline constexpr double kConstantLow = -2.0;
inline constexpr double kConstantHigh = 2.0;

/// A tree does not fit the head/tail layout of a gene.
class GeneCapacityError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Fixed-length genotype: head of `h` free symbols followed by `h+1` terminals.
///
/// `constants` runs parallel to `symbols` and holds the coefficient value used
/// wherever the position carries the ephemeral-constant symbol.
struct Gene {
    std::vector<SymbolId> symbols;
    std::vector<double> constants;

    [[nodiscard]] auto Length() const -> std::size_t { return symbols.size(); }
    [[nodiscard]] auto HeadLength() const -> std::size_t { return (symbols.size() - 1) / 2; }

    friend auto operator==(Gene const&, Gene const&) -> bool = default;
};

inline auto GeneLength(std::size_t headLen) -> std::size_t { return 2 * headLen + 1; }

struct Chromosome {
    std::vector<Gene> genes;
    Operator linker{Operator::Make(OpKind::Add)};

    [[nodiscard]] auto HeadLength() const -> std::size_t { return genes.front().HeadLength(); }
    [[nodiscard]] auto GeneSize() const -> std::size_t { return genes.front().Length(); }
    [[nodiscard]] auto TotalLength() const -> std::size_t { return genes.size() * GeneSize(); }

    friend auto operator==(Chromosome const&, Chromosome const&) -> bool = default;
};

namespace detail {
inline auto RandomConstant(Rng& rng) -> double
{
    return std::uniform_real_distribution<double>(kConstantLow, kConstantHigh)(rng);
}

inline auto RandomTerminal(SymbolTable const& table, Rng& rng) -> SymbolId
{
    auto t = table.Terminals();
    return t[UniformIndex(rng, t.size())];
}

inline auto RandomAny(SymbolTable const& table, Rng& rng) -> SymbolId
{
    auto t = table.Terminals();
    auto f = table.Nonterminals();
    auto k = UniformIndex(rng, t.size() + f.size());
    return k < t.size() ? t[k] : f[k - t.size()];
}
} // namespace detail

/// Draws a head position symbol (any) or a tail position symbol (terminals only).
inline auto RandomSymbolAt(SymbolTable const& table, std::size_t position, std::size_t headLen, Rng& rng) -> SymbolId
{
    return position < headLen ? detail::RandomAny(table, rng) : detail::RandomTerminal(table, rng);
}

inline auto RandomGene(SymbolTable const& table, std::size_t headLen, Rng& rng) -> Gene
{
    if (headLen < 1) { throw std::invalid_argument("head length must be >= 1"); }
    if (table.Terminals().empty()) { throw std::invalid_argument("symbol table has no terminals"); }
    Gene g;
    auto len = GeneLength(headLen);
    g.symbols.resize(len);
    g.constants.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
        g.symbols[i] = RandomSymbolAt(table, i, headLen, rng);
        g.constants[i] = detail::RandomConstant(rng);
    }
    return g;
}

inline auto RandomChromosome(SymbolTable const& table, std::size_t headLen, std::size_t geneCount, Operator linker,
                             Rng& rng) -> Chromosome
{
    if (geneCount < 1) { throw std::invalid_argument("gene count must be >= 1"); }
    Chromosome c;
    c.linker = linker;
    for (std::size_t i = 0; i < geneCount; ++i) { c.genes.push_back(RandomGene(table, headLen, rng)); }
    return c;
}

/// True when no tail position carries a non-terminal.
inline auto IsStructurallyValid(Gene const& g, SymbolTable const& table) -> bool
{
    if (g.symbols.size() % 2 == 0 || g.constants.size() != g.symbols.size()) { return false; }
    auto h = g.HeadLength();
    for (std::size_t i = h; i < g.symbols.size(); ++i) {
        if (!table[g.symbols[i]].IsTerminal()) { return false; }
    }
    return true;
}

inline auto IsStructurallyValid(Chromosome const& c, SymbolTable const& table) -> bool
{
    if (c.genes.empty()) { return false; }
    for (auto const& g : c.genes) {
        if (g.Length() != c.GeneSize() || !IsStructurallyValid(g, table)) { return false; }
    }
    return true;
}

/// Length of the K-expression: symbols consumed until every open slot is a leaf.
inline auto KExpressionLength(Gene const& g, SymbolTable const& table) -> std::size_t
{
    std::size_t open = 1;
    std::size_t i = 0;
    while (open > 0) {
        if (i >= g.symbols.size()) { throw std::logic_error("gene does not terminate; tail too short"); }
        open += static_cast<std::size_t>(table[g.symbols[i]].Arity());
        --open;
        ++i;
    }
    return i;
}

/// Pre-order decode. Constant leaves record `offset + position` as their slot.
inline auto Decode(Gene const& g, SymbolTable const& table, std::size_t offset = 0)
    -> std::pair<ExprTree, std::size_t>
{
    auto k = KExpressionLength(g, table);
    std::vector<Node> nodes;
    nodes.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        auto n = Node::FromSymbol(table, g.symbols[i], g.constants[i]);
        if (n.kind == NodeKind::Constant) { n.slot = static_cast<std::int32_t>(offset + i); }
        nodes.push_back(n);
    }
    return {ExprTree(std::move(nodes)), k};
}

/// Whether a tree can be laid out as the K-expression of a gene with this head.
inline auto FitsGene(ExprTree const& tree, std::size_t headLen, std::size_t first = 0) -> bool
{
    auto size = tree[first].length;
    if (size > GeneLength(headLen)) { return false; }
    for (std::size_t j = 0; j < size; ++j) {
        if (!tree[first + j].IsLeaf() && j >= headLen) { return false; }
    }
    return true;
}

namespace detail {
inline auto SymbolFor(Node const& n, SymbolTable const& table) -> SymbolId
{
    if (n.symbol != kNoSymbol && n.symbol < table.Size()) { return n.symbol; }
    std::optional<SymbolId> id;
    switch (n.kind) {
    case NodeKind::Feature: id = table.FindFeature(n.feature); break;
    case NodeKind::Function: id = table.FindFunction(n.op); break;
    case NodeKind::Constant:
        for (auto t : table.Terminals()) {
            if (table[t].kind == SymbolKind::Constant) {
                id = t;
                break;
            }
        }
        break;
    case NodeKind::Literal:
        for (auto t : table.Terminals()) {
            if (table[t].kind == SymbolKind::Literal && table[t].value == n.value) {
                id = t;
                break;
            }
        }
        break;
    }
    if (!id) { throw std::invalid_argument("tree node has no symbol in the table"); }
    return *id;
}
} // namespace detail

/// Writes the tree as a K-expression and pads the rest with random terminals.
inline auto Encode(ExprTree const& tree, std::size_t headLen, SymbolTable const& table, Rng& filler) -> Gene
{
    if (!FitsGene(tree, headLen)) {
        throw GeneCapacityError("tree of " + std::to_string(tree.Size()) + " symbols does not fit head length " +
                                std::to_string(headLen));
    }
    auto len = GeneLength(headLen);
    Gene g;
    g.symbols.resize(len);
    g.constants.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
        if (i < tree.Size()) {
            g.symbols[i] = detail::SymbolFor(tree[i], table);
            g.constants[i] = tree[i].kind == NodeKind::Constant ? tree[i].value : detail::RandomConstant(filler);
        } else {
            g.symbols[i] = detail::RandomTerminal(table, filler);
            g.constants[i] = detail::RandomConstant(filler);
        }
    }
    return g;
}

/// Left fold of the gene trees with the linker: L(L(t1, t2), t3) ...
///
/// In pre-order this is (n-1) pinned linker nodes followed by the gene trees.
inline auto Link(Chromosome const& c, SymbolTable const& table) -> ExprTree
{
    std::vector<Node> nodes;
    for (std::size_t i = 1; i < c.genes.size(); ++i) {
        auto n = Node::Function(c.linker);
        n.pinned = true;
        if (auto id = table.FindFunction(c.linker)) { n.symbol = *id; }
        nodes.push_back(n);
    }
    auto geneSize = c.GeneSize();
    for (std::size_t i = 0; i < c.genes.size(); ++i) {
        auto [t, k] = Decode(c.genes[i], table, i * geneSize);
        nodes.insert(nodes.end(), t.Nodes().begin(), t.Nodes().end());
    }
    return ExprTree(std::move(nodes));
}

/// Index of gene root `g` inside a linked tree.
inline auto GeneRootIndex(ExprTree const& linked, std::size_t geneCount, std::size_t g) -> std::size_t
{
    auto idx = geneCount - 1;
    for (std::size_t i = 0; i < g; ++i) { idx += linked[idx].length; }
    return idx;
}

/// Inverse of Link: the per-gene subtrees.
inline auto SplitLinked(ExprTree const& linked, std::size_t geneCount) -> std::vector<ExprTree>
{
    std::vector<ExprTree> out;
    auto idx = geneCount - 1;
    for (std::size_t i = 0; i < geneCount; ++i) {
        out.push_back(linked.Subtree(idx));
        idx += linked[idx].length;
    }
    return out;
}

} // namespace gepsbp

#endif
