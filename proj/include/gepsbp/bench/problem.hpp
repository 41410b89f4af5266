// SPDX-License-Identifier: Apache-2.0

// Problem spec files are line-oriented `key: value` documents; '#' starts a
// comment. Recognised keys:
//
//   name: <identifier>
//   data: <csv path, relative to the spec file>
//   feature <name>: <unit>        one line per input column, in order
//   target <name>: <unit>
//   truth: <expression>           optional, see expression.hpp
//   difficulty: easy | medium | hard
//   samples: <rows>               synthetic data from `truth` when no data file
//   range: <low> <high>           sampling box for synthetic features
//
// A unit of `?` (or an empty unit) marks the dimension as unknown, which is
// only accepted in mode `none`.

#ifndef GEPSBP_BENCH_PROBLEM_HPP
#define GEPSBP_BENCH_PROBLEM_HPP

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "../dimension.hpp"
#include "../fitness.hpp"
#include "../random.hpp"
#include "../symbols.hpp"
#include "../units.hpp"
#include "data.hpp"
#include "expression.hpp"

namespace gepsbp::bench {

class SpecError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct VariableSpec {
    std::string name;
    std::optional<std::string> unit;
};

struct ProblemSpec {
    std::string name;
    std::string dataPath;
    std::vector<VariableSpec> features;
    VariableSpec target;
    std::string truth;
    std::string difficulty;
    std::size_t samples{0};
    double low{1.0};
    double high{5.0};

    [[nodiscard]] auto HasAllUnits() const -> bool
    {
        if (!target.unit) { return false; }
        for (auto const& f : features) {
            if (!f.unit) { return false; }
        }
        return true;
    }
};

namespace detail {
inline auto Trim(std::string s) -> std::string
{
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) { return {}; }
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline auto UnitOrUnknown(std::string const& v) -> std::optional<std::string>
{
    if (v.empty() || v == "?") { return std::nullopt; }
    return v;
}
} // namespace detail

inline auto ParseProblemSpec(std::istream& in, std::string const& baseDir = {}) -> ProblemSpec
{
    ProblemSpec spec;
    std::string line;
    std::size_t lineNo = 0;
    bool haveTarget = false;
    while (std::getline(in, line)) {
        ++lineNo;
        if (auto hash = line.find('#'); hash != std::string::npos) { line.erase(hash); }
        line = detail::Trim(line);
        if (line.empty()) { continue; }
        auto colon = line.find(':');
        auto where = "line " + std::to_string(lineNo) + ": ";
        if (colon == std::string::npos) { throw SpecError(where + "expected 'key: value'"); }
        auto key = detail::Trim(line.substr(0, colon));
        auto value = detail::Trim(line.substr(colon + 1));
        std::istringstream keyWords(key);
        std::string head;
        std::string var;
        keyWords >> head >> var;
        if (head == "feature" || head == "target") {
            if (var.empty()) { throw SpecError(where + head + " needs a name"); }
            VariableSpec v{var, detail::UnitOrUnknown(value)};
            if (head == "feature") {
                spec.features.push_back(std::move(v));
            } else {
                if (haveTarget) { throw SpecError(where + "duplicate target"); }
                spec.target = std::move(v);
                haveTarget = true;
            }
            continue;
        }
        if (!var.empty()) { throw SpecError(where + "unknown key '" + key + "'"); }
        if (key == "name") {
            spec.name = value;
        } else if (key == "data") {
            auto p = std::filesystem::path(value);
            if (p.is_relative() && !baseDir.empty()) { p = std::filesystem::path(baseDir) / p; }
            spec.dataPath = p.string();
        } else if (key == "truth") {
            spec.truth = value;
        } else if (key == "difficulty") {
            spec.difficulty = value;
        } else if (key == "samples") {
            try {
                spec.samples = std::stoul(value);
            } catch (std::exception const&) {
                throw SpecError(where + "bad sample count");
            }
        } else if (key == "range") {
            std::istringstream r(value);
            if (!(r >> spec.low >> spec.high) || !(spec.low < spec.high)) { throw SpecError(where + "bad range"); }
        } else {
            throw SpecError(where + "unknown key '" + key + "'");
        }
    }
    if (spec.name.empty()) { throw SpecError("spec has no name"); }
    if (!haveTarget) { throw SpecError("spec has no target"); }
    if (spec.features.empty()) { throw SpecError("spec has no features"); }
    if (spec.dataPath.empty() && (spec.samples == 0 || spec.truth.empty())) {
        throw SpecError("spec needs a data file, or a truth expression with a sample count");
    }
    return spec;
}

inline auto LoadProblemSpec(std::string const& path) -> ProblemSpec
{
    std::ifstream in(path);
    if (!in) { throw SpecError("cannot open " + path); }
    return ParseProblemSpec(in, std::filesystem::path(path).parent_path().string());
}

/// Problem with parsed units, truth and full data, before noise and splitting.
struct LoadedProblem {
    ProblemSpec spec;
    std::vector<std::string> featureNames;
    std::vector<DimensionVector> featureDims;
    DimensionVector targetDim;
    std::optional<ExprTree> truth;
    Matrix X;
    std::vector<double> y;
};

inline auto FeatureNames(ProblemSpec const& spec) -> std::vector<std::string>
{
    std::vector<std::string> names;
    for (auto const& f : spec.features) { names.push_back(f.name); }
    return names;
}

/// Lists unit and truth problems; empty when the spec is usable.
inline auto ValidateSpec(ProblemSpec const& spec, bool requireUnits) -> std::vector<std::string>
{
    std::vector<std::string> issues;
    auto checkUnit = [&](VariableSpec const& v, char const* role) {
        if (!v.unit) {
            if (requireUnits) { issues.push_back(std::string(role) + " '" + v.name + "' has no unit"); }
            return;
        }
        try {
            (void)ParseUnit(*v.unit);
        } catch (UnitParseError const& e) {
            issues.push_back(std::string(role) + " '" + v.name + "': " + e.what());
        }
    };
    for (auto const& f : spec.features) { checkUnit(f, "feature"); }
    checkUnit(spec.target, "target");
    if (!spec.truth.empty()) {
        try {
            (void)ParseExpression(spec.truth, FeatureNames(spec));
        } catch (ExpressionError const& e) {
            issues.push_back(std::string("truth: ") + e.what());
        }
    }
    return issues;
}

inline auto LoadProblem(ProblemSpec const& spec, std::uint64_t dataSeed = 0) -> LoadedProblem
{
    auto issues = ValidateSpec(spec, false);
    if (!issues.empty()) { throw SpecError(spec.name + ": " + issues.front()); }
    LoadedProblem p;
    p.spec = spec;
    p.featureNames = FeatureNames(spec);
    for (auto const& f : spec.features) {
        p.featureDims.push_back(f.unit ? ParseUnit(*f.unit) : DimensionVector::Zero());
    }
    p.targetDim = spec.target.unit ? ParseUnit(*spec.target.unit) : DimensionVector::Zero();
    if (!spec.truth.empty()) { p.truth = ParseExpression(spec.truth, p.featureNames, p.featureDims); }

    if (!spec.dataPath.empty()) {
        auto ds = ReadCsvFile(spec.dataPath, spec.target.name);
        std::vector<std::size_t> order;
        for (auto const& name : p.featureNames) {
            auto it = std::find(ds.featureNames.begin(), ds.featureNames.end(), name);
            if (it == ds.featureNames.end()) { throw SpecError(spec.name + ": column '" + name + "' missing in data"); }
            order.push_back(static_cast<std::size_t>(it - ds.featureNames.begin()));
        }
        p.X = Matrix(ds.X.Rows(), order.size());
        for (std::size_t c = 0; c < order.size(); ++c) {
            for (std::size_t r = 0; r < ds.X.Rows(); ++r) { p.X(r, c) = ds.X(r, order[c]); }
        }
        p.y = std::move(ds.y);
    } else {
        auto rng = DeriveRng(dataSeed, 0, 0, Stream::Data);
        p.X = Matrix(spec.samples, p.featureNames.size());
        for (std::size_t c = 0; c < p.X.Cols(); ++c) {
            for (std::size_t r = 0; r < p.X.Rows(); ++r) {
                p.X(r, c) = spec.low + (spec.high - spec.low) * Uniform01(rng);
            }
        }
        p.y = EvaluateBatch(*p.truth, p.X);
    }
    return p;
}

/// Operator and terminal choices for the symbol table.
struct TableOptions {
    std::vector<std::string> functions{"+", "-", "*", "/", "log", "exp", "sin", "cos", "sq", "sqrt"};
    bool constants{true};
};

inline auto BuildTable(std::vector<std::string> const& names, std::vector<DimensionVector> const& dims,
                       TableOptions const& options) -> SymbolTable
{
    SymbolTable t;
    for (std::size_t i = 0; i < names.size(); ++i) { t.AddFeature(names[i], dims.at(i)); }
    if (options.constants) { t.AddConstant(); }
    for (auto const& f : options.functions) { t.AddFunction(ParseOperator(f)); }
    return t;
}

inline auto MakeProblem(LoadedProblem const& lp, Matrix X, std::vector<double> y, TableOptions const& options)
    -> Problem
{
    Problem p;
    p.X = std::move(X);
    p.y = std::move(y);
    p.featureDims = lp.featureDims;
    p.targetDim = lp.targetDim;
    p.featureNames = lp.featureNames;
    p.table = BuildTable(lp.featureNames, lp.featureDims, options);
    return p;
}

/// The five hand-built easy problems used by the acceptance suite.
inline auto BuiltinSuite(std::size_t samples = 300) -> std::vector<ProblemSpec>
{
    auto mk = [&](std::string name, std::vector<VariableSpec> features, VariableSpec target, std::string truth) {
        ProblemSpec s;
        s.name = std::move(name);
        s.features = std::move(features);
        s.target = std::move(target);
        s.truth = std::move(truth);
        s.difficulty = "easy";
        s.samples = samples;
        return s;
    };
    return {
        mk("force_field", {{"q", "C"}, {"E", "V/m"}}, {"F", "N"}, "q*E"),
        mk("coulomb", {{"q1", "C"}, {"q2", "C"}, {"eps", "F/m"}, {"r", "m"}}, {"F", "N"},
           "q1*q2/(4*pi*eps*r^2)"),
        mk("velocity", {{"d", "m"}, {"t", "s"}}, {"v", "m/s"}, "d/t"),
        mk("center_of_gravity", {{"m1", "kg"}, {"m2", "kg"}, {"r1", "m"}, {"r2", "m"}}, {"x", "m"},
           "(m1*r1 + m2*r2)/(m1 + m2)"),
        mk("rest_energy", {{"m", "kg"}, {"c", "m/s"}}, {"E", "J"}, "m*c^2"),
    };
}

} // namespace gepsbp::bench

#endif
