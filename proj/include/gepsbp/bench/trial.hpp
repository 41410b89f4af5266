// SPDX-License-Identifier: Apache-2.0

#ifndef GEPSBP_BENCH_TRIAL_HPP
#define GEPSBP_BENCH_TRIAL_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "../evolution.hpp"
#include "../library.hpp"
#include "data.hpp"
#include "metrics.hpp"
#include "problem.hpp"
#include "simplify.hpp"

namespace gepsbp::bench {

struct TrialSettings {
    EvolutionConfig evolution; // seed is the base seed of the experiment
    TableOptions table;
    double gamma{0.0};
    std::size_t trial{0};
    double trainRatio{0.75};
    std::size_t probeRows{256};
};

/// Seed of trial `trial` under base seed `seed`; identical for every mode so
/// that modes see the same noise, split and initial population.
inline auto TrialSeed(std::uint64_t seed, std::size_t trial) -> std::uint64_t
{
    return SplitMix64(seed ^ SplitMix64(static_cast<std::uint64_t>(trial) + 1));
}

/// Library for the problem's symbol table at the configured head length.
inline auto BuildProblemLibrary(LoadedProblem const& lp, TableOptions const& table, std::size_t headLength,
                                std::size_t cap, std::uint64_t seed) -> SemanticLibrary
{
    LibraryConfig cfg;
    cfg.maxSize = headLength;
    cfg.cap = cap;
    cfg.seed = seed;
    return SemanticLibrary::Build(BuildTable(lp.featureNames, lp.featureDims, table), cfg);
}

/// One trial: redraw noise, split, evolve on the training part, score on the
/// held-out part.
inline auto RunTrial(LoadedProblem const& lp, TrialSettings const& s, SemanticLibrary const* library) -> RunRecord
{
    auto const start = std::chrono::steady_clock::now();
    auto const seed = TrialSeed(s.evolution.seed, s.trial);
    auto noiseRng = DeriveRng(seed, 0, 0, Stream::Noise);
    auto noisy = AddNoise(lp.y, s.gamma, noiseRng);
    auto splitRng = DeriveRng(seed, 0, 0, Stream::Split);
    auto parts = Split(lp.X, noisy, s.trainRatio, splitRng);

    auto problem = MakeProblem(lp, parts.XTrain, parts.yTrain, s.table);
    auto cfg = s.evolution;
    cfg.seed = seed;
    auto rec = Evolve(cfg, problem, library);
    rec.config.seed = s.evolution.seed;
    rec.problem = lp.spec.name;
    rec.gamma = s.gamma;
    rec.trial = s.trial;
    rec.seed = s.evolution.seed;

    auto r2 = [&](Matrix const& X, std::vector<double> const& y) {
        auto pred = EvaluateBatch(rec.tree, X);
        for (auto v : pred) {
            if (!std::isfinite(v)) { return kNaN; }
        }
        try {
            return R2Score(y, pred);
        } catch (std::domain_error const&) {
            return kNaN;
        }
    };
    rec.r2Train = r2(parts.XTrain, parts.yTrain);
    rec.r2Test = r2(parts.XTest, parts.yTest);
    rec.complexity = Complexity(rec.tree);
    if (lp.truth) {
        auto probeRng = DeriveRng(seed, 0, 1, Stream::Data);
        auto probe = ProbeRows(parts.XTrain, std::max<std::size_t>(s.probeRows, 64), probeRng);
        rec.solution = SymbolicSolution(*lp.truth, rec.tree, probe);
    }
    rec.wallSeconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

} // namespace gepsbp::bench

#endif
