// SPDX-License-Identifier: Apache-2.0

#ifndef GEPSBP_CORRECTION_HPP
#define GEPSBP_CORRECTION_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dimension.hpp"
#include "expr_tree.hpp"
#include "genome.hpp"
#include "library.hpp"
#include "random.hpp"

namespace gepsbp {

inline constexpr double kDefaultDimEpsilon = 1e-9;

struct CorrectionContext {
    SemanticLibrary const& library;
    SymbolTable const& table;
    std::size_t headLength;
    double epsilon{kDefaultDimEpsilon};
    Rng& rng;
    std::size_t lookupAttempts{3};
};

namespace detail {
inline auto Matches(DimResult const& d, DimensionVector const& target, double eps) -> bool
{
    return d && Distance(target, *d) < eps;
}

/// Swaps the subtree at `at` for a library entry of dimension `target` that keeps
/// the enclosing gene encodable. Leaves the tree untouched on a miss.
inline auto TryReplace(ExprTree& tree, std::size_t at, std::size_t geneRoot, DimensionVector const& target,
                       CorrectionContext& ctx) -> bool
{
    auto geneSize = tree[geneRoot].length;
    auto capacity = GeneLength(ctx.headLength);
    auto slack = capacity > geneSize ? capacity - geneSize : 0;
    auto maxSize = std::min<std::size_t>(ctx.headLength, tree[at].length + slack);
    if (!ctx.library.Contains(target, maxSize)) { return false; }
    for (std::size_t attempt = 0; attempt < ctx.lookupAttempts; ++attempt) {
        auto replacement = ctx.library.Lookup(ctx.table, target, maxSize, ctx.rng);
        if (!replacement) { return false; }
        auto saved = tree;
        tree.Replace(at, *replacement);
        if (FitsGene(tree, ctx.headLength, geneRoot)) { return true; }
        tree = std::move(saved);
    }
    return false;
}
} // namespace detail

/// Pushes target dimension `target` down from node `idx`, splicing library
/// subtrees into mismatched children (left child first, then right) and
/// recursing where the library has no fit. Returns true iff node `idx` ends up
/// with dimension `target` (within epsilon) after a fresh forward pass.
///
/// `geneRoot` is the root of the gene that contains `idx`; it is empty while
/// walking the pinned linker nodes above the genes.
inline auto PropagateChange(ExprTree& tree, std::size_t idx, DimensionVector const& target, CorrectionContext& ctx,
                            std::optional<std::size_t> geneRoot) -> bool
{
    auto const& node = tree[idx];
    if (detail::Matches(node.dim, target, ctx.epsilon)) { return true; }
    if (node.IsLeaf()) { return false; }
    // transcendental results are always dimensionless
    if (IsTranscendental(node.op.kind) && !target.IsDimensionless()) { return false; }

    auto const op = node.op;
    auto const arity = node.arity;
    auto c1 = idx + 1;
    std::optional<DimensionVector> leftKnown = tree[c1].dim;
    std::optional<DimensionVector> rightKnown;
    if (arity == 2) { rightKnown = tree[c1 + tree[c1].length].dim; }

    std::pair<DimensionVector, DimensionVector> targets;
    try {
        targets = BackwardSplit(op, target, leftKnown, rightKnown);
    } catch (std::domain_error const&) {
        return false;
    }

    for (std::size_t k = 0; k < arity; ++k) {
        auto child = tree.Child(idx, k);
        auto const& childTarget = k == 0 ? targets.first : targets.second;
        if (detail::Matches(tree[child].dim, childTarget, ctx.epsilon)) { continue; }
        auto childGene = geneRoot;
        if (!childGene && !tree[child].pinned) { childGene = child; }
        if (!tree[child].pinned && detail::TryReplace(tree, child, *childGene, childTarget, ctx)) { continue; }
        PropagateChange(tree, child, childTarget, ctx, childGene);
    }
    tree.ForwardDims();
    return detail::Matches(tree[idx].dim, target, ctx.epsilon);
}

struct CorrectionOutcome {
    bool homogeneousBefore{false};
    bool homogeneousAfter{false};
    bool changed{false};
};

/// Corrects one chromosome in place: up to `cycles` passes of PropagateChange
/// on the linked tree, then re-encodes the genes. A chromosome that cannot be
/// made homogeneous, or whose repair does not re-encode, is left as it was.
inline auto CorrectChromosome(Chromosome& chromosome, SymbolTable const& table, SemanticLibrary const& library,
                              DimensionVector const& target, std::size_t cycles, double epsilon, Rng& rng)
    -> CorrectionOutcome
{
    CorrectionOutcome out;
    auto tree = Link(chromosome, table);
    out.homogeneousBefore = detail::Matches(tree.RootDim(), target, epsilon);
    if (out.homogeneousBefore) {
        out.homogeneousAfter = true;
        return out;
    }
    auto const geneCount = chromosome.genes.size();
    auto const headLen = chromosome.HeadLength();
    CorrectionContext ctx{library, table, headLen, epsilon, rng};
    std::optional<std::size_t> rootGene;
    if (geneCount == 1) { rootGene = 0; }

    bool ok = false;
    for (std::size_t c = 0; c < cycles && !ok; ++c) { ok = PropagateChange(tree, 0, target, ctx, rootGene); }
    if (!ok) { return out; }

    auto original = Link(chromosome, table);
    auto before = SplitLinked(original, geneCount);
    auto after = SplitLinked(tree, geneCount);
    Chromosome repaired = chromosome;
    try {
        for (std::size_t g = 0; g < geneCount; ++g) {
            if (after[g] == before[g]) { continue; }
            repaired.genes[g] = Encode(after[g], headLen, table, rng);
        }
    } catch (GeneCapacityError const&) {
        return out;
    }
    chromosome = std::move(repaired);
    out.homogeneousAfter = true;
    out.changed = true;
    return out;
}

struct CorrectionStats {
    double homogeneousBefore{0.0};
    double homogeneousAfter{0.0};
};

/// Corrects every chromosome; individual i draws from its own stream (seed, i).
inline auto CorrectPopulation(std::span<Chromosome> population, SymbolTable const& table,
                              SemanticLibrary const& library, DimensionVector const& target, std::size_t cycles,
                              double epsilon, std::uint64_t seed) -> CorrectionStats
{
    if (cycles < 1) { throw std::invalid_argument("correction needs at least one cycle"); }
    CorrectionStats stats;
    if (population.empty()) { return stats; }
    std::size_t before = 0;
    std::size_t after = 0;
    for (std::size_t i = 0; i < population.size(); ++i) {
        auto rng = DeriveRng(seed, 0, i, Stream::Correction);
        auto r = CorrectChromosome(population[i], table, library, target, cycles, epsilon, rng);
        before += r.homogeneousBefore ? 1 : 0;
        after += r.homogeneousAfter ? 1 : 0;
    }
    stats.homogeneousBefore = static_cast<double>(before) / static_cast<double>(population.size());
    stats.homogeneousAfter = static_cast<double>(after) / static_cast<double>(population.size());
    return stats;
}

} // namespace gepsbp

#endif
