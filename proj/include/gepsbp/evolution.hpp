// SPDX-License-Identifier: Apache-2.0

#ifndef GEPSBP_EVOLUTION_HPP
#define GEPSBP_EVOLUTION_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "correction.hpp"
#include "fitness.hpp"
#include "genome.hpp"
#include "library.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace gepsbp {

/// How dimensional homogeneity enters the search.
enum class HomogeneityMode : std::uint8_t {
    None,    // plain MSE
    Penalty, // MSE + lambda * dimension penalty
    Sbp,     // library-driven correction before evaluation
    Discard, // inhomogeneous candidates get +inf
};

inline auto ModeName(HomogeneityMode m) -> std::string
{
    switch (m) {
    case HomogeneityMode::None: return "none";
    case HomogeneityMode::Penalty: return "penalty";
    case HomogeneityMode::Sbp: return "sbp";
    case HomogeneityMode::Discard: return "discard";
    }
    return "none";
}

inline auto ParseMode(std::string const& s) -> HomogeneityMode
{
    if (s == "none") { return HomogeneityMode::None; }
    if (s == "penalty") { return HomogeneityMode::Penalty; }
    if (s == "sbp") { return HomogeneityMode::Sbp; }
    if (s == "discard") { return HomogeneityMode::Discard; }
    throw std::invalid_argument("unknown mode '" + s + "'");
}

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Defaults follow the small-test column of the usual GEP parameterization.
struct EvolutionConfig {
    std::size_t populationSize{500};
    std::size_t generations{1000};
    std::size_t headLength{8};
    std::size_t geneCount{3};
    std::size_t tournamentSize{3};
    double matingFraction{0.5};
    double pMutation{0.2};
    double pInversion{0.1};
    double pCrossover1{0.5};
    double pCrossover2{0.4};
    double lambda{0.0};
    std::size_t correctionCycles{5};
    std::size_t maxEvaluations{1000000};
    std::uint64_t seed{0};
    double lossTolerance{1e-12};
    HomogeneityMode mode{HomogeneityMode::None};
    Operator linker{Operator::Make(OpKind::Add)};
    std::size_t optimizeTopK{10};
    std::size_t cgIterations{10};
    double epsilon{kDefaultDimEpsilon};
    std::size_t threads{1};

    void Validate() const
    {
        auto prob = [](double p, char const* name) {
            if (!(p >= 0.0 && p <= 1.0)) { throw ConfigError(std::string(name) + " must lie in [0, 1]"); }
        };
        prob(pMutation, "mutation probability");
        prob(pInversion, "inversion probability");
        prob(pCrossover1, "one-point crossover probability");
        prob(pCrossover2, "two-point crossover probability");
        if (!(matingFraction > 0.0 && matingFraction <= 1.0)) { throw ConfigError("mating fraction must lie in (0, 1]"); }
        if (tournamentSize < 1 || populationSize < tournamentSize) {
            throw ConfigError("need population size >= tournament size >= 1");
        }
        if (maxEvaluations < populationSize) { throw ConfigError("max evaluations must be >= population size"); }
        if (headLength < 1 || geneCount < 1) { throw ConfigError("head length and gene count must be >= 1"); }
        if (!(lambda >= 0.0)) { throw ConfigError("lambda must be non-negative"); }
        if (mode == HomogeneityMode::None && lambda != 0.0) {
            throw ConfigError("lambda has no effect in mode 'none'");
        }
        if (mode == HomogeneityMode::Penalty && lambda <= 0.0) { throw ConfigError("mode 'penalty' needs lambda > 0"); }
        if (mode == HomogeneityMode::Sbp && correctionCycles < 1) { throw ConfigError("sbp needs >= 1 correction cycle"); }
        if (Arity(linker.kind) != 2) { throw ConfigError("linker must be a binary operator"); }
    }
};

struct Individual {
    Chromosome chromosome;
    double fitness{kInf};
    DimResult rootDim;
    std::size_t complexity{0}; // node count of the linked tree
    bool evaluated{false};
    bool tuned{false}; // coefficients already fitted since the last change
};

/// Outcome of one evolutionary run. Benchmark metrics are filled in by the harness.
struct RunRecord {
    std::string problem;
    std::string mode;
    double gamma{0.0};
    std::uint64_t seed{0};
    std::size_t trial{0};
    std::string expression;
    ExprTree tree;
    std::vector<double> history; // best loss per generation
    std::size_t evaluations{0};
    std::size_t generations{0};
    double bestLoss{kInf};
    bool bestHomogeneous{false};
    double homogeneousInitial{0.0};
    bool stagnated{false};
    double r2Train{kNaN};
    double r2Test{kNaN};
    bool solution{false};
    std::size_t complexity{0};
    double wallSeconds{0.0};
    EvolutionConfig config;
};

// ---------------------------------------------------------------------------
// genetic operators

/// Resamples each position with probability p; head positions from all
/// symbols, tail positions from terminals only.
inline auto Mutate(Individual ind, double p, SymbolTable const& table, Rng& rng) -> Individual
{
    if (p <= 0.0) { return ind; }
    for (auto& g : ind.chromosome.genes) {
        auto h = g.HeadLength();
        for (std::size_t i = 0; i < g.Length(); ++i) {
            if (Uniform01(rng) < p) {
                g.symbols[i] = RandomSymbolAt(table, i, h, rng);
                g.constants[i] = detail::RandomConstant(rng);
                ind.evaluated = false;
            }
        }
    }
    return ind;
}

/// Reverses head positions [first, last] of a gene.
inline void InvertSegment(Gene& g, std::size_t first, std::size_t last)
{
    if (last >= g.HeadLength() || first > last) { throw std::out_of_range("inversion segment outside head"); }
    std::reverse(g.symbols.begin() + static_cast<std::ptrdiff_t>(first),
                 g.symbols.begin() + static_cast<std::ptrdiff_t>(last) + 1);
    std::reverse(g.constants.begin() + static_cast<std::ptrdiff_t>(first),
                 g.constants.begin() + static_cast<std::ptrdiff_t>(last) + 1);
}

inline auto Invert(Individual ind, double p, Rng& rng) -> Individual
{
    if (p <= 0.0) { return ind; }
    for (auto& g : ind.chromosome.genes) {
        if (Uniform01(rng) >= p) { continue; }
        auto h = g.HeadLength();
        auto a = UniformIndex(rng, h);
        auto b = UniformIndex(rng, h);
        if (a > b) { std::swap(a, b); }
        if (a != b) {
            InvertSegment(g, a, b);
            ind.evaluated = false;
        }
    }
    return ind;
}

namespace detail {
inline void CheckSameShape(Individual const& a, Individual const& b)
{
    auto const& ca = a.chromosome;
    auto const& cb = b.chromosome;
    if (ca.genes.size() != cb.genes.size() || ca.GeneSize() != cb.GeneSize()) {
        throw std::invalid_argument("crossover parents have different genome shapes");
    }
}

/// Swaps flattened chromosome positions [first, last).
inline void SwapRange(Individual& a, Individual& b, std::size_t first, std::size_t last)
{
    auto len = a.chromosome.GeneSize();
    for (auto pos = first; pos < last; ++pos) {
        auto& ga = a.chromosome.genes[pos / len];
        auto& gb = b.chromosome.genes[pos / len];
        std::swap(ga.symbols[pos % len], gb.symbols[pos % len]);
        std::swap(ga.constants[pos % len], gb.constants[pos % len]);
    }
    if (first < last) {
        a.evaluated = false;
        b.evaluated = false;
    }
}
} // namespace detail

/// Exchanges everything from `cut` to the end of the chromosome string.
inline auto CrossoverOnePointAt(Individual a, Individual b, std::size_t cut) -> std::pair<Individual, Individual>
{
    detail::CheckSameShape(a, b);
    auto total = a.chromosome.TotalLength();
    if (cut >= total) { throw std::out_of_range("cut beyond chromosome"); }
    detail::SwapRange(a, b, cut, total);
    return {std::move(a), std::move(b)};
}

inline auto CrossoverOnePoint(Individual a, Individual b, Rng& rng) -> std::pair<Individual, Individual>
{
    detail::CheckSameShape(a, b);
    auto cut = UniformIndex(rng, a.chromosome.TotalLength());
    return CrossoverOnePointAt(std::move(a), std::move(b), cut);
}

/// Exchanges positions [first, last).
inline auto CrossoverTwoPointAt(Individual a, Individual b, std::size_t first, std::size_t last)
    -> std::pair<Individual, Individual>
{
    detail::CheckSameShape(a, b);
    if (first > last || last > a.chromosome.TotalLength()) { throw std::out_of_range("bad crossover segment"); }
    detail::SwapRange(a, b, first, last);
    return {std::move(a), std::move(b)};
}

inline auto CrossoverTwoPoint(Individual a, Individual b, Rng& rng) -> std::pair<Individual, Individual>
{
    detail::CheckSameShape(a, b);
    auto total = a.chromosome.TotalLength();
    auto i = UniformIndex(rng, total + 1);
    auto j = UniformIndex(rng, total + 1);
    if (i > j) { std::swap(i, j); }
    return CrossoverTwoPointAt(std::move(a), std::move(b), i, j);
}

/// Strict ordering used everywhere a "better" individual is chosen:
/// lower fitness, then lower complexity, then lower index.
inline auto Better(std::span<Individual const> pop, std::size_t i, std::size_t j) -> bool
{
    auto const& a = pop[i];
    auto const& b = pop[j];
    if (a.fitness != b.fitness) { return a.fitness < b.fitness; }
    if (a.complexity != b.complexity) { return a.complexity < b.complexity; }
    return i < j;
}

/// Index of the winner among k contenders drawn without replacement.
inline auto TournamentSelect(std::span<Individual const> pop, std::size_t k, Rng& rng) -> std::size_t
{
    if (pop.empty()) { throw std::invalid_argument("tournament on empty population"); }
    if (k < 1 || k > pop.size()) { throw std::invalid_argument("tournament size out of range"); }
    std::vector<std::size_t> picked;
    picked.reserve(k);
    if (k * 4 > pop.size()) {
        std::vector<std::size_t> all(pop.size());
        for (std::size_t i = 0; i < all.size(); ++i) { all[i] = i; }
        for (std::size_t i = 0; i < k; ++i) {
            auto j = i + UniformIndex(rng, all.size() - i);
            std::swap(all[i], all[j]);
            picked.push_back(all[i]);
        }
    } else {
        while (picked.size() < k) {
            auto c = UniformIndex(rng, pop.size());
            if (std::find(picked.begin(), picked.end(), c) == picked.end()) { picked.push_back(c); }
        }
    }
    auto best = picked.front();
    for (auto c : picked) {
        if (Better(pop, c, best)) { best = c; }
    }
    return best;
}

// ---------------------------------------------------------------------------
// fitness of an individual under a homogeneity mode

struct Assessment {
    double fitness{kInf};
    DimResult rootDim;
    std::size_t complexity{0};
};

inline auto Assess(ExprTree const& tree, Problem const& problem, HomogeneityMode mode, double lambda) -> Assessment
{
    Assessment a;
    a.rootDim = tree.RootDim();
    a.complexity = tree.Size();
    auto pred = EvaluateBatch(tree, problem.X);
    auto mse = MeanSquaredError(problem.y, pred);
    switch (mode) {
    case HomogeneityMode::None: a.fitness = mse; break;
    case HomogeneityMode::Penalty:
    case HomogeneityMode::Sbp: {
        if (lambda == 0.0) {
            a.fitness = mse;
            break;
        }
        auto pen = DimensionPenalty(tree, problem.targetDim);
        a.fitness = std::isfinite(pen) ? mse + lambda * pen : kInf;
        break;
    }
    case HomogeneityMode::Discard:
        a.fitness = DimensionPenalty(tree, problem.targetDim) == 0.0 ? mse : kInf;
        break;
    }
    if (!std::isfinite(a.fitness)) { a.fitness = kInf; }
    return a;
}

/// Writes per-leaf coefficient values back to the genome positions they came from.
inline void StoreCoefficients(Chromosome& c, ExprTree const& linked)
{
    auto len = c.GeneSize();
    for (auto const& n : linked.Nodes()) {
        if (n.kind == NodeKind::Constant && n.slot >= 0) {
            auto pos = static_cast<std::size_t>(n.slot);
            c.genes[pos / len].constants[pos % len] = n.value;
        }
    }
}

// ---------------------------------------------------------------------------

/// Generational GEP with single elitism. Per generation: correction (sbp
/// mode), evaluation within the evaluation budget, coefficient fitting of the
/// top individuals, then breeding by tournament selection, crossover,
/// inversion and mutation. Every random decision draws from a stream keyed by
/// (seed, generation, slot), so results do not depend on the thread count.
inline auto Evolve(EvolutionConfig const& config, Problem const& problem, SemanticLibrary const* library) -> RunRecord
{
    config.Validate();
    problem.Validate();
    if (config.mode == HomogeneityMode::Sbp && library == nullptr) {
        throw ConfigError("mode 'sbp' requires a semantic library");
    }
    auto const start = std::chrono::steady_clock::now();
    auto const& table = problem.table;
    auto const n = config.populationSize;
    auto const target = problem.targetDim;
    bool const hasConstants = std::any_of(table.Terminals().begin(), table.Terminals().end(),
                                          [&](SymbolId id) { return table[id].kind == SymbolKind::Constant; });

    RunRecord rec;
    rec.mode = ModeName(config.mode);
    rec.seed = config.seed;
    rec.config = config;

    std::vector<Individual> pop(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto rng = DeriveRng(config.seed, 0, i, Stream::Init);
        pop[i].chromosome = RandomChromosome(table, config.headLength, config.geneCount, config.linker, rng);
    }

    {
        std::size_t homogeneous = 0;
        for (auto const& ind : pop) {
            auto t = Link(ind.chromosome, table);
            homogeneous += (t.RootDim() && *t.RootDim() == target) ? 1 : 0;
        }
        rec.homogeneousInitial = static_cast<double>(homogeneous) / static_cast<double>(n);
    }

    std::size_t evaluations = 0;
    std::size_t generation = 0;
    std::size_t bestIndex = 0;
    std::vector<char> toEvaluate(n);

    for (;; ++generation) {
        if (config.mode == HomogeneityMode::Sbp) {
            ParallelFor(n, config.threads, [&](std::size_t i) {
                if (generation > 0 && i == 0) { return; } // the elite survives unchanged
                auto rng = DeriveRng(config.seed, generation, i, Stream::Correction);
                auto r = CorrectChromosome(pop[i].chromosome, table, *library, target, config.correctionCycles,
                                           config.epsilon, rng);
                if (r.changed) { pop[i].evaluated = false; }
            });
        }

        for (std::size_t i = 0; i < n; ++i) {
            toEvaluate[i] = 0;
            if (pop[i].evaluated) { continue; }
            if (evaluations < config.maxEvaluations) {
                ++evaluations;
                toEvaluate[i] = 1;
            } else {
                pop[i].fitness = kInf;
                pop[i].evaluated = true;
            }
        }
        ParallelFor(n, config.threads, [&](std::size_t i) {
            if (toEvaluate[i] == 0) { return; }
            auto tree = Link(pop[i].chromosome, table);
            auto a = Assess(tree, problem, config.mode, config.lambda);
            pop[i].fitness = a.fitness;
            pop[i].rootDim = a.rootDim;
            pop[i].complexity = a.complexity;
            pop[i].evaluated = true;
            pop[i].tuned = false;
        });

        if (hasConstants && config.optimizeTopK > 0) {
            // the best k individuals whose coefficients have not been fitted yet
            std::vector<std::size_t> order;
            for (std::size_t i = 0; i < n; ++i) {
                if (!pop[i].tuned && std::isfinite(pop[i].fitness)) { order.push_back(i); }
            }
            auto k = std::min(config.optimizeTopK, order.size());
            std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                              [&](std::size_t a, std::size_t b) { return Better(pop, a, b); });
            for (std::size_t r = 0; r < k; ++r) {
                auto& ind = pop[order[r]];
                ind.tuned = true;
                auto tree = Link(ind.chromosome, table);
                if (tree.CoefficientCount() == 0 || evaluations >= config.maxEvaluations) { continue; }
                CoefficientOptions opt;
                opt.maxIterations = config.cgIterations;
                opt.maxEvaluations = config.maxEvaluations - evaluations;
                auto res = OptimizeCoefficients(problem, tree, tree.Coefficients(), opt);
                evaluations += res.evaluations;
                tree.SetCoefficients(res.coefficients);
                auto a = Assess(tree, problem, config.mode, config.lambda);
                if (a.fitness < ind.fitness) {
                    StoreCoefficients(ind.chromosome, tree);
                    ind.fitness = a.fitness;
                }
            }
        }

        bestIndex = 0;
        for (std::size_t i = 1; i < n; ++i) {
            if (Better(pop, i, bestIndex)) { bestIndex = i; }
        }
        rec.history.push_back(pop[bestIndex].fitness);

        if (generation >= config.generations || evaluations >= config.maxEvaluations ||
            pop[bestIndex].fitness < config.lossTolerance) {
            break;
        }

        std::vector<Individual> next(n);
        next[0] = pop[bestIndex];
        auto const variationSlots =
            static_cast<std::size_t>(std::llround(config.matingFraction * static_cast<double>(n - 1)));
        std::span<Individual const> parents(pop);
        ParallelFor(n - 1, config.threads, [&](std::size_t s) {
            auto slot = s + 1;
            auto rng = DeriveRng(config.seed, generation + 1, slot, Stream::Variation);
            auto a = pop[TournamentSelect(parents, config.tournamentSize, rng)];
            if (slot > variationSlots) {
                next[slot] = std::move(a);
                return;
            }
            auto b = pop[TournamentSelect(parents, config.tournamentSize, rng)];
            if (Uniform01(rng) < config.pCrossover1) { std::tie(a, b) = CrossoverOnePoint(std::move(a), std::move(b), rng); }
            if (Uniform01(rng) < config.pCrossover2) { std::tie(a, b) = CrossoverTwoPoint(std::move(a), std::move(b), rng); }
            a = Invert(std::move(a), config.pInversion, rng);
            a = Mutate(std::move(a), config.pMutation, table, rng);
            next[slot] = std::move(a);
        });
        pop.swap(next);
    }

    auto const& best = pop[bestIndex];
    rec.tree = Link(best.chromosome, table);
    rec.expression = rec.tree.ToString(problem.featureNames);
    rec.bestLoss = best.fitness;
    rec.bestHomogeneous = rec.tree.RootDim() && *rec.tree.RootDim() == target;
    rec.stagnated = !std::isfinite(best.fitness);
    rec.evaluations = evaluations;
    rec.generations = generation;
    rec.complexity = rec.tree.Size();
    rec.wallSeconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

} // namespace gepsbp

#endif
