// SPDX-License-Identifier: Apache-2.0

// Result files.
//
// Records: one JSON object per line, flat keys. Run-level fields are
//   schema_version, problem, mode, gamma, seed, trial, expression, tree_prefix,
//   history, evaluations, generations, best_loss, best_homogeneous,
//   homogeneous_initial, stagnated, r2_train, r2_test, solution, complexity,
//   wall_seconds
// and the configuration snapshot follows under the `cfg_` prefix. Non-finite
// numbers are written as null: a null loss reads back as +inf, a null R2 as NaN.
//
// Summary CSV (one row per mode and noise level, optionally per problem):
//   [problem,]mode,gamma,n,r2_median,r2_q1,r2_q3,solution_rate,complexity_median,stagnated
// Quantiles interpolate linearly; a NaN R2 sorts below every finite value.
//
// Significance CSV (per noise level and metric, modes paired by problem and trial):
//   gamma,metric,first,second,n,w_plus,w_minus,p,exact,alpha,grade

#ifndef GEPSBP_BENCH_REPORT_HPP
#define GEPSBP_BENCH_REPORT_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "../evolution.hpp"
#include "problem.hpp"
#include "wilcoxon.hpp"

namespace gepsbp::bench {

inline constexpr int kSchemaVersion = 1;

class ReportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Everything besides the problem file that determines a batch of trials.
struct ExperimentConfig {
    EvolutionConfig evolution;
    TableOptions table;
    std::vector<HomogeneityMode> modes{HomogeneityMode::Sbp};
    std::vector<double> gammas{0.0};
    std::size_t trials{1};
    double trainRatio{0.75};
    std::size_t probeRows{256};
    std::size_t libraryCap{100000};
    std::uint64_t librarySeed{0};
    std::uint64_t dataSeed{0};
    std::vector<std::string> problems;
    std::string outDir;
    std::string libraryDir;
    std::size_t jobs{0}; // 0: one per core
};

namespace detail {
using Json = nlohmann::json;

inline auto NullIfNonFinite(double v) -> Json { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline auto NumberOr(Json const& j, double fallback) -> double
{
    return j.is_null() ? fallback : j.get<double>();
}

inline auto PrefixTokens(ExprTree const& tree, std::vector<std::string> const& names) -> std::vector<std::string>
{
    std::vector<std::string> out;
    for (auto const& n : tree.Nodes()) {
        switch (n.kind) {
        case NodeKind::Feature: out.push_back(n.feature < names.size() ? names[n.feature] : "x" + std::to_string(n.feature)); break;
        case NodeKind::Constant:
        case NodeKind::Literal: {
            std::ostringstream s;
            s.precision(17);
            s << n.value;
            out.push_back(s.str());
            break;
        }
        case NodeKind::Function: out.push_back(OperatorName(n.op)); break;
        }
    }
    return out;
}

/// Evolution and table fields by their config-file names.
inline void EvolutionToJson(EvolutionConfig const& c, TableOptions const& t, Json& j)
{
    j["population"] = c.populationSize;
    j["generations"] = c.generations;
    j["head_length"] = c.headLength;
    j["genes"] = c.geneCount;
    j["tournament"] = c.tournamentSize;
    j["mating_fraction"] = c.matingFraction;
    j["p_mutation"] = c.pMutation;
    j["p_inversion"] = c.pInversion;
    j["p_crossover1"] = c.pCrossover1;
    j["p_crossover2"] = c.pCrossover2;
    j["lambda"] = c.lambda;
    j["correction_cycles"] = c.correctionCycles;
    j["max_evaluations"] = c.maxEvaluations;
    j["seed"] = c.seed;
    j["loss_tolerance"] = c.lossTolerance;
    j["linker"] = OperatorName(c.linker);
    j["optimize_top_k"] = c.optimizeTopK;
    j["cg_iterations"] = c.cgIterations;
    j["epsilon"] = c.epsilon;
    j["functions"] = t.functions;
    j["constants"] = t.constants;
}
} // namespace detail

/// The config-file form of an experiment (also the cfg_ snapshot, minus run lists).
inline auto ConfigToJson(ExperimentConfig const& c) -> nlohmann::json
{
    detail::Json j;
    detail::EvolutionToJson(c.evolution, c.table, j);
    j["threads"] = c.evolution.threads;
    std::vector<std::string> modes;
    for (auto m : c.modes) { modes.push_back(ModeName(m)); }
    j["modes"] = modes;
    j["gammas"] = c.gammas;
    j["trials"] = c.trials;
    j["train_ratio"] = c.trainRatio;
    j["probe_rows"] = c.probeRows;
    j["library_cap"] = c.libraryCap;
    j["library_seed"] = c.librarySeed;
    j["data_seed"] = c.dataSeed;
    j["problems"] = c.problems;
    j["out"] = c.outDir;
    j["library_dir"] = c.libraryDir;
    j["jobs"] = c.jobs;
    return j;
}

/// Applies the keys present in `j` on top of `c`. Unknown keys and wrong
/// types are errors.
inline void ApplyConfigJson(nlohmann::json const& j, ExperimentConfig& c)
{
    if (!j.is_object()) { throw ConfigError("config must be a JSON object"); }
    auto& e = c.evolution;
    for (auto const& [key, v] : j.items()) {
        try {
            if (key == "population") { e.populationSize = v.get<std::size_t>(); }
            else if (key == "generations") { e.generations = v.get<std::size_t>(); }
            else if (key == "head_length") { e.headLength = v.get<std::size_t>(); }
            else if (key == "genes") { e.geneCount = v.get<std::size_t>(); }
            else if (key == "tournament") { e.tournamentSize = v.get<std::size_t>(); }
            else if (key == "mating_fraction") { e.matingFraction = v.get<double>(); }
            else if (key == "p_mutation") { e.pMutation = v.get<double>(); }
            else if (key == "p_inversion") { e.pInversion = v.get<double>(); }
            else if (key == "p_crossover1") { e.pCrossover1 = v.get<double>(); }
            else if (key == "p_crossover2") { e.pCrossover2 = v.get<double>(); }
            else if (key == "lambda") { e.lambda = v.get<double>(); }
            else if (key == "correction_cycles") { e.correctionCycles = v.get<std::size_t>(); }
            else if (key == "max_evaluations") { e.maxEvaluations = v.get<std::size_t>(); }
            else if (key == "seed") { e.seed = v.get<std::uint64_t>(); }
            else if (key == "loss_tolerance") { e.lossTolerance = v.get<double>(); }
            else if (key == "linker") { e.linker = ParseOperator(v.get<std::string>()); }
            else if (key == "optimize_top_k") { e.optimizeTopK = v.get<std::size_t>(); }
            else if (key == "cg_iterations") { e.cgIterations = v.get<std::size_t>(); }
            else if (key == "epsilon") { e.epsilon = v.get<double>(); }
            else if (key == "threads") { e.threads = v.get<std::size_t>(); }
            else if (key == "functions") { c.table.functions = v.get<std::vector<std::string>>(); }
            else if (key == "constants") { c.table.constants = v.get<bool>(); }
            else if (key == "modes") {
                c.modes.clear();
                auto names = v.is_string() ? std::vector<std::string>{v.get<std::string>()} : v.get<std::vector<std::string>>();
                for (auto const& n : names) { c.modes.push_back(ParseMode(n)); }
            }
            else if (key == "gammas") { c.gammas = v.is_number() ? std::vector<double>{v.get<double>()} : v.get<std::vector<double>>(); }
            else if (key == "trials") { c.trials = v.get<std::size_t>(); }
            else if (key == "train_ratio") { c.trainRatio = v.get<double>(); }
            else if (key == "probe_rows") { c.probeRows = v.get<std::size_t>(); }
            else if (key == "library_cap") { c.libraryCap = v.get<std::size_t>(); }
            else if (key == "library_seed") { c.librarySeed = v.get<std::uint64_t>(); }
            else if (key == "data_seed") { c.dataSeed = v.get<std::uint64_t>(); }
            else if (key == "problems") { c.problems = v.get<std::vector<std::string>>(); }
            else if (key == "out") { c.outDir = v.get<std::string>(); }
            else if (key == "library_dir") { c.libraryDir = v.get<std::string>(); }
            else if (key == "jobs") { c.jobs = v.get<std::size_t>(); }
            else { throw ConfigError("unknown config key '" + key + "'"); }
        } catch (nlohmann::json::exception const& ex) {
            throw ConfigError("config key '" + key + "': " + ex.what());
        } catch (OperatorError const& ex) {
            throw ConfigError("config key '" + key + "': " + ex.what());
        }
    }
}

inline auto LoadConfigFile(std::string const& path) -> ExperimentConfig
{
    std::ifstream in(path);
    if (!in) { throw ConfigError("cannot open config " + path); }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (nlohmann::json::parse_error const& e) {
        throw ConfigError(path + ": " + e.what());
    }
    ExperimentConfig c;
    ApplyConfigJson(j, c);
    return c;
}

/// One flat JSON record for a finished trial.
inline auto RecordToJson(RunRecord const& r, ExperimentConfig const& c, std::vector<std::string> const& names)
    -> nlohmann::json
{
    detail::Json j;
    j["schema_version"] = kSchemaVersion;
    j["problem"] = r.problem;
    j["mode"] = r.mode;
    j["gamma"] = r.gamma;
    j["seed"] = r.seed;
    j["trial"] = r.trial;
    j["expression"] = r.expression;
    j["tree_prefix"] = detail::PrefixTokens(r.tree, names);
    auto history = detail::Json::array();
    for (auto h : r.history) { history.push_back(detail::NullIfNonFinite(h)); }
    j["history"] = history;
    j["evaluations"] = r.evaluations;
    j["generations"] = r.generations;
    j["best_loss"] = detail::NullIfNonFinite(r.bestLoss);
    j["best_homogeneous"] = r.bestHomogeneous;
    j["homogeneous_initial"] = r.homogeneousInitial;
    j["stagnated"] = r.stagnated;
    j["r2_train"] = detail::NullIfNonFinite(r.r2Train);
    j["r2_test"] = detail::NullIfNonFinite(r.r2Test);
    j["solution"] = r.solution;
    j["complexity"] = r.complexity;
    j["wall_seconds"] = r.wallSeconds;

    detail::Json cfg;
    detail::EvolutionToJson(r.config, c.table, cfg);
    cfg["train_ratio"] = c.trainRatio;
    cfg["probe_rows"] = c.probeRows;
    cfg["library_cap"] = c.libraryCap;
    cfg["library_seed"] = c.librarySeed;
    cfg["data_seed"] = c.dataSeed;
    for (auto const& [k, v] : cfg.items()) { j["cfg_" + k] = v; }
    return j;
}

/// The subset of a record the report needs.
struct RecordSummary {
    int schemaVersion{0};
    std::string problem;
    std::string mode;
    double gamma{0.0};
    std::size_t trial{0};
    std::uint64_t seed{0};
    double r2Test{kNaN};
    bool solution{false};
    std::size_t complexity{0};
    bool stagnated{false};
};

inline auto RecordFromJson(nlohmann::json const& j) -> RecordSummary
{
    RecordSummary s;
    try {
        s.schemaVersion = j.at("schema_version").get<int>();
        s.problem = j.at("problem").get<std::string>();
        s.mode = j.at("mode").get<std::string>();
        s.gamma = j.at("gamma").get<double>();
        s.trial = j.at("trial").get<std::size_t>();
        s.seed = j.at("seed").get<std::uint64_t>();
        s.r2Test = detail::NumberOr(j.at("r2_test"), kNaN);
        s.solution = j.at("solution").get<bool>();
        s.complexity = j.at("complexity").get<std::size_t>();
        s.stagnated = j.at("stagnated").get<bool>();
    } catch (nlohmann::json::exception const& e) {
        throw ReportError(std::string("malformed record: ") + e.what());
    }
    return s;
}

/// Reads every record line of the given files and of *.jsonl files inside
/// the given directories. All records must share one schema version.
inline auto ReadRecords(std::vector<std::string> const& paths) -> std::vector<RecordSummary>
{
    std::vector<std::string> files;
    for (auto const& p : paths) {
        if (std::filesystem::is_directory(p)) {
            for (auto const& e : std::filesystem::recursive_directory_iterator(p)) {
                if (e.is_regular_file() && e.path().extension() == ".jsonl") { files.push_back(e.path().string()); }
            }
        } else {
            files.push_back(p);
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<RecordSummary> out;
    for (auto const& f : files) {
        std::ifstream in(f);
        if (!in) { throw ReportError("cannot open " + f); }
        std::string line;
        std::size_t lineNo = 0;
        while (std::getline(in, line)) {
            ++lineNo;
            if (line.find_first_not_of(" \t\r") == std::string::npos) { continue; }
            try {
                out.push_back(RecordFromJson(nlohmann::json::parse(line)));
            } catch (nlohmann::json::parse_error const& e) {
                throw ReportError(f + ":" + std::to_string(lineNo) + ": " + e.what());
            }
        }
    }
    if (out.empty()) { throw ReportError("no records found"); }
    for (auto const& r : out) {
        if (r.schemaVersion != out.front().schemaVersion) { throw ReportError("records mix schema versions"); }
    }
    if (out.front().schemaVersion != kSchemaVersion) {
        throw ReportError("unsupported schema version " + std::to_string(out.front().schemaVersion));
    }
    return out;
}

/// Linear-interpolation quantile of an ascending sample; -inf entries stay -inf.
inline auto Quantile(std::vector<double> sorted, double q) -> double
{
    if (sorted.empty()) { return kNaN; }
    auto pos = q * static_cast<double>(sorted.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    auto hi = std::min(lo + 1, sorted.size() - 1);
    auto frac = pos - static_cast<double>(lo);
    if (frac == 0.0 || sorted[lo] == sorted[hi]) { return sorted[lo]; }
    if (!std::isfinite(sorted[lo]) || !std::isfinite(sorted[hi])) { return frac < 0.5 ? sorted[lo] : sorted[hi]; }
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

/// R2 values sorted ascending with NaN mapped to -inf.
inline auto SortedR2(std::vector<double> v) -> std::vector<double>
{
    for (auto& x : v) {
        if (std::isnan(x)) { x = -std::numeric_limits<double>::infinity(); }
    }
    std::sort(v.begin(), v.end());
    return v;
}

struct SummaryRow {
    std::string problem; // empty for the all-problem rows
    std::string mode;
    double gamma{0.0};
    std::size_t n{0};
    double r2Median{kNaN};
    double r2Q1{kNaN};
    double r2Q3{kNaN};
    double solutionRate{0.0};
    double complexityMedian{kNaN};
    std::size_t stagnated{0};
};

inline auto Summarize(std::vector<RecordSummary> const& records, bool perProblem) -> std::vector<SummaryRow>
{
    std::map<std::tuple<std::string, std::string, double>, std::vector<RecordSummary const*>> groups;
    for (auto const& r : records) { groups[{perProblem ? r.problem : std::string(), r.mode, r.gamma}].push_back(&r); }
    std::vector<SummaryRow> rows;
    for (auto const& [key, list] : groups) {
        SummaryRow row;
        std::tie(row.problem, row.mode, row.gamma) = key;
        row.n = list.size();
        std::vector<double> r2;
        std::vector<double> cx;
        std::size_t solved = 0;
        for (auto const* r : list) {
            r2.push_back(r->r2Test);
            cx.push_back(static_cast<double>(r->complexity));
            solved += r->solution ? 1 : 0;
            row.stagnated += r->stagnated ? 1 : 0;
        }
        auto s = SortedR2(r2);
        row.r2Median = Quantile(s, 0.5);
        row.r2Q1 = Quantile(s, 0.25);
        row.r2Q3 = Quantile(s, 0.75);
        std::sort(cx.begin(), cx.end());
        row.complexityMedian = Quantile(cx, 0.5);
        row.solutionRate = static_cast<double>(solved) / static_cast<double>(row.n);
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace detail {
inline auto Csv(double v) -> std::string
{
    if (std::isnan(v)) { return "nan"; }
    if (std::isinf(v)) { return v > 0 ? "inf" : "-inf"; }
    std::ostringstream s;
    s.precision(10);
    s << v;
    return s.str();
}
} // namespace detail

inline void WriteSummaryCsv(std::ostream& os, std::vector<SummaryRow> const& rows, bool perProblem)
{
    if (perProblem) { os << "problem,"; }
    os << "mode,gamma,n,r2_median,r2_q1,r2_q3,solution_rate,complexity_median,stagnated\n";
    for (auto const& r : rows) {
        if (perProblem) { os << r.problem << ','; }
        os << r.mode << ',' << detail::Csv(r.gamma) << ',' << r.n << ',' << detail::Csv(r.r2Median) << ','
           << detail::Csv(r.r2Q1) << ',' << detail::Csv(r.r2Q3) << ',' << detail::Csv(r.solutionRate) << ','
           << detail::Csv(r.complexityMedian) << ',' << r.stagnated << '\n';
    }
}

struct SignificanceRow {
    double gamma{0.0};
    std::string metric;
    SignificanceEntry entry;
};

/// Pairs modes on (problem, trial) within each noise level; keys missing in
/// any mode are dropped. Noise levels with one mode or fewer than 6 pairs
/// produce no rows. For the test, a NaN R2 counts as -1 and R2 is clipped to [-1, 1].
inline auto Significance(std::vector<RecordSummary> const& records, double alphaBase) -> std::vector<SignificanceRow>
{
    std::map<double, std::map<std::string, std::map<std::pair<std::string, std::size_t>, RecordSummary const*>>> byGamma;
    for (auto const& r : records) { byGamma[r.gamma][r.mode][{r.problem, r.trial}] = &r; }
    std::vector<SignificanceRow> out;
    for (auto const& [gamma, modes] : byGamma) {
        if (modes.size() < 2) { continue; }
        std::set<std::pair<std::string, std::size_t>> common;
        bool first = true;
        for (auto const& [mode, keyed] : modes) {
            std::set<std::pair<std::string, std::size_t>> keys;
            for (auto const& kv : keyed) { keys.insert(kv.first); }
            if (first) {
                common = keys;
                first = false;
            } else {
                std::set<std::pair<std::string, std::size_t>> both;
                std::set_intersection(common.begin(), common.end(), keys.begin(), keys.end(),
                                      std::inserter(both, both.begin()));
                common = std::move(both);
            }
        }
        if (common.size() < 6) { continue; }
        std::map<std::string, std::vector<double>> r2;
        std::map<std::string, std::vector<double>> cx;
        for (auto const& [mode, keyed] : modes) {
            for (auto const& k : common) {
                auto const* r = keyed.at(k);
                auto v = std::isnan(r->r2Test) ? -1.0 : std::clamp(r->r2Test, -1.0, 1.0);
                r2[mode].push_back(v);
                cx[mode].push_back(static_cast<double>(r->complexity));
            }
        }
        for (auto& e : WilcoxonReport(r2, alphaBase)) { out.push_back({gamma, "r2_test", std::move(e)}); }
        for (auto& e : WilcoxonReport(cx, alphaBase)) { out.push_back({gamma, "complexity", std::move(e)}); }
    }
    return out;
}

inline void WriteSignificanceCsv(std::ostream& os, std::vector<SignificanceRow> const& rows)
{
    os << "gamma,metric,first,second,n,w_plus,w_minus,p,exact,alpha,grade\n";
    for (auto const& r : rows) {
        auto const& e = r.entry;
        os << detail::Csv(r.gamma) << ',' << r.metric << ',' << e.first << ',' << e.second << ',' << e.test.n << ','
           << detail::Csv(e.test.wPlus) << ',' << detail::Csv(e.test.wMinus) << ',' << detail::Csv(e.test.p) << ','
           << (e.test.exact ? 1 : 0) << ',' << detail::Csv(e.alpha) << ',' << e.grade << '\n';
    }
}

/// Writes `text` to `path` through a temporary file and a rename.
inline void WriteFileAtomic(std::filesystem::path const& path, std::string const& text)
{
    if (path.has_parent_path()) { std::filesystem::create_directories(path.parent_path()); }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) { throw std::runtime_error("cannot write " + tmp.string()); }
        out << text;
        out.flush();
        if (!out) { throw std::runtime_error("write failed for " + tmp.string()); }
    }
    std::filesystem::rename(tmp, path);
}

} // namespace gepsbp::bench

#endif
