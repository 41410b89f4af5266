// SPDX-License-Identifier: Apache-2.0

// gepsbp: run, build-library, report, validate.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "gepsbp/bench/report.hpp"
#include "gepsbp/bench/trial.hpp"
#include "gepsbp/parallel.hpp"

namespace fs = std::filesystem;
using namespace gepsbp;
using namespace gepsbp::bench;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitFailure = 1;

auto DefaultOutDir() -> std::string
{
    if (auto const* env = std::getenv("GEPSBP_OUT"); env != nullptr && *env != '\0') { return env; }
    return "results";
}

auto Token(double v) -> std::string
{
    std::ostringstream s;
    s << v;
    return s.str();
}

/// Spec files, directories of *.spec files, or "builtin" for the easy suite.
auto ResolveProblems(std::vector<std::string> const& args, std::size_t builtinSamples) -> std::vector<ProblemSpec>
{
    std::vector<ProblemSpec> out;
    for (auto const& a : args) {
        if (a == "builtin") {
            for (auto& s : BuiltinSuite(builtinSamples)) { out.push_back(std::move(s)); }
        } else if (fs::is_directory(a)) {
            std::vector<fs::path> files;
            for (auto const& e : fs::directory_iterator(a)) {
                if (e.is_regular_file() && e.path().extension() == ".spec") { files.push_back(e.path()); }
            }
            std::sort(files.begin(), files.end());
            for (auto const& f : files) { out.push_back(LoadProblemSpec(f.string())); }
        } else {
            out.push_back(LoadProblemSpec(a));
        }
    }
    if (out.empty()) { throw ConfigError("no problems given"); }
    return out;
}

auto LibraryFileName(std::string const& problem, std::size_t head, std::size_t cap, std::uint64_t seed) -> std::string
{
    return problem + "_h" + std::to_string(head) + "_cap" + std::to_string(cap) + "_s" + std::to_string(seed) + ".lib";
}

/// Loads the cached library when present, else builds it (and caches it when a directory is set).
auto ObtainLibrary(LoadedProblem const& lp, ExperimentConfig const& cfg) -> SemanticLibrary
{
    auto table = BuildTable(lp.featureNames, lp.featureDims, cfg.table);
    if (!cfg.libraryDir.empty()) {
        auto path = fs::path(cfg.libraryDir) /
                    LibraryFileName(lp.spec.name, cfg.evolution.headLength, cfg.libraryCap, cfg.librarySeed);
        if (fs::exists(path)) {
            std::ifstream in(path);
            return SemanticLibrary::Load(in, table);
        }
        auto lib = BuildProblemLibrary(lp, cfg.table, cfg.evolution.headLength, cfg.libraryCap, cfg.librarySeed);
        std::ostringstream os;
        lib.Save(os);
        WriteFileAtomic(path, os.str());
        return lib;
    }
    return BuildProblemLibrary(lp, cfg.table, cfg.evolution.headLength, cfg.libraryCap, cfg.librarySeed);
}

struct Job {
    std::size_t problem;
    HomogeneityMode mode;
    double gamma;
    std::size_t trial;
};

/// Flags shared by run and build-library. Unset flags leave config values alone.
struct Overrides {
    std::string configPath;
    std::optional<std::size_t> population, generations, headLength, genes, trials, cycles, maxEvaluations, jobs,
        threads, libraryCap;
    std::optional<std::uint64_t> seed, librarySeed, dataSeed;
    std::optional<double> lambda, pMutation, trainRatio;
    std::vector<std::string> modes;
    std::vector<double> gammas;
    std::optional<std::string> out, libraryDir;
    std::vector<std::string> problems;
    std::size_t builtinSamples{300};

    void Register(CLI::App* app, bool runFlags)
    {
        app->add_option("--config", configPath, "JSON config file")->check(CLI::ExistingFile);
        app->add_option("--head-length", headLength, "gene head length");
        app->add_option("--library-cap", libraryCap, "maximum library entries");
        app->add_option("--library-seed", librarySeed, "library sampling seed");
        app->add_option("--library-dir", libraryDir, "library cache directory");
        app->add_option("--builtin-samples", builtinSamples, "rows generated for builtin problems");
        app->add_option("problems", problems, "spec files, directories, or 'builtin'");
        if (!runFlags) { return; }
        app->add_option("--mode", modes, "none, penalty, sbp, discard (repeatable)");
        app->add_option("--gamma", gammas, "noise level (repeatable)");
        app->add_option("--trials", trials, "trials per problem, mode and noise level");
        app->add_option("--seed", seed, "base seed");
        app->add_option("--population", population);
        app->add_option("--generations", generations);
        app->add_option("--genes", genes);
        app->add_option("--lambda", lambda, "penalty weight");
        app->add_option("--p-mutation", pMutation);
        app->add_option("--correction-cycles", cycles);
        app->add_option("--max-evaluations", maxEvaluations);
        app->add_option("--train-ratio", trainRatio);
        app->add_option("--data-seed", dataSeed);
        app->add_option("--threads", threads, "worker threads inside one trial");
        app->add_option("--jobs", jobs, "concurrent trials (default: all cores)");
        app->add_option("--out", out, "output directory (default: $GEPSBP_OUT or ./results)");
    }

    /// Returns the merged config and whether lambda was set explicitly.
    auto Resolve() const -> std::pair<ExperimentConfig, bool>
    {
        ExperimentConfig c;
        bool lambdaSet = false;
        if (!configPath.empty()) {
            std::ifstream in(configPath);
            auto j = nlohmann::json::parse(in, nullptr, false);
            if (j.is_discarded()) { throw ConfigError(configPath + ": invalid JSON"); }
            ApplyConfigJson(j, c);
            lambdaSet = j.contains("lambda");
        }
        auto set = [](auto const& opt, auto& field) {
            if (opt) { field = *opt; }
        };
        auto& e = c.evolution;
        set(population, e.populationSize);
        set(generations, e.generations);
        set(headLength, e.headLength);
        set(genes, e.geneCount);
        set(cycles, e.correctionCycles);
        set(maxEvaluations, e.maxEvaluations);
        set(threads, e.threads);
        set(seed, e.seed);
        set(lambda, e.lambda);
        set(pMutation, e.pMutation);
        set(trials, c.trials);
        set(jobs, c.jobs);
        set(libraryCap, c.libraryCap);
        set(librarySeed, c.librarySeed);
        set(dataSeed, c.dataSeed);
        set(trainRatio, c.trainRatio);
        set(out, c.outDir);
        set(libraryDir, c.libraryDir);
        lambdaSet = lambdaSet || lambda.has_value();
        if (!modes.empty()) {
            c.modes.clear();
            for (auto const& m : modes) { c.modes.push_back(ParseMode(m)); }
        }
        if (!gammas.empty()) { c.gammas = gammas; }
        if (!problems.empty()) { c.problems = problems; }
        if (c.outDir.empty()) { c.outDir = DefaultOutDir(); }
        return {c, lambdaSet};
    }
};

/// Per-mode evolution config; lambda only reaches the modes that use it.
auto ModeConfig(EvolutionConfig e, HomogeneityMode m) -> EvolutionConfig
{
    e.mode = m;
    if (m == HomogeneityMode::None || m == HomogeneityMode::Discard) { e.lambda = 0.0; }
    return e;
}

auto CmdRun(Overrides const& o) -> int
{
    auto [cfg, lambdaSet] = o.Resolve();
    if (cfg.modes.empty()) { throw ConfigError("no modes given"); }
    if (cfg.gammas.empty()) { throw ConfigError("no noise levels given"); }
    for (auto g : cfg.gammas) {
        if (!(g >= 0.0)) { throw ConfigError("noise level must be non-negative"); }
    }
    if (!(cfg.trainRatio > 0.0 && cfg.trainRatio < 1.0)) { throw ConfigError("train ratio must lie in (0, 1)"); }
    if (cfg.trials < 1) { throw ConfigError("need at least one trial"); }
    if (lambdaSet && cfg.evolution.lambda != 0.0) {
        bool used = false;
        for (auto m : cfg.modes) { used = used || m == HomogeneityMode::Penalty || m == HomogeneityMode::Sbp; }
        if (!used) { throw ConfigError("lambda has no effect in the selected mode(s)"); }
    }
    bool needUnits = false;
    for (auto m : cfg.modes) {
        ModeConfig(cfg.evolution, m).Validate();
        needUnits = needUnits || m != HomogeneityMode::None;
    }

    auto specs = ResolveProblems(cfg.problems, o.builtinSamples);
    for (auto const& s : specs) {
        auto issues = ValidateSpec(s, needUnits);
        if (!issues.empty()) { throw ConfigError(s.name + ": " + issues.front()); }
    }
    std::vector<LoadedProblem> loaded;
    for (auto const& s : specs) { loaded.push_back(LoadProblem(s, cfg.dataSeed)); }

    bool needLibrary = false;
    for (auto m : cfg.modes) { needLibrary = needLibrary || m == HomogeneityMode::Sbp; }
    std::vector<std::optional<SemanticLibrary>> libraries(loaded.size());
    if (needLibrary) {
        for (std::size_t i = 0; i < loaded.size(); ++i) { libraries[i] = ObtainLibrary(loaded[i], cfg); }
    }

    std::vector<Job> jobs;
    for (std::size_t p = 0; p < loaded.size(); ++p) {
        for (auto m : cfg.modes) {
            for (auto g : cfg.gammas) {
                for (std::size_t t = 0; t < cfg.trials; ++t) { jobs.push_back({p, m, g, t}); }
            }
        }
    }

    auto recordDir = fs::path(cfg.outDir) / "records";
    fs::create_directories(recordDir);
    std::vector<std::string> written(jobs.size());
    std::atomic<std::size_t> next{0};
    std::mutex logMutex;
    std::exception_ptr error;
    auto worker = [&] {
        for (auto i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
            try {
                auto const& job = jobs[i];
                auto const& lp = loaded[job.problem];
                TrialSettings s;
                s.evolution = ModeConfig(cfg.evolution, job.mode);
                s.table = cfg.table;
                s.gamma = job.gamma;
                s.trial = job.trial;
                s.trainRatio = cfg.trainRatio;
                s.probeRows = cfg.probeRows;
                auto const* lib = libraries[job.problem] ? &*libraries[job.problem] : nullptr;
                auto rec = RunTrial(lp, s, lib);
                auto line = RecordToJson(rec, cfg, lp.featureNames).dump() + "\n";
                auto name = lp.spec.name + "__" + ModeName(job.mode) + "__g" + Token(job.gamma) + "__t" +
                            std::to_string(job.trial) + ".jsonl";
                WriteFileAtomic(recordDir / name, line);
                written[i] = (recordDir / name).string();
                std::lock_guard lock(logMutex);
                std::cerr << lp.spec.name << ' ' << ModeName(job.mode) << " gamma=" << job.gamma
                          << " trial=" << job.trial << " r2_test=" << rec.r2Test
                          << " solution=" << (rec.solution ? "yes" : "no") << '\n';
            } catch (...) {
                std::lock_guard lock(logMutex);
                if (!error) { error = std::current_exception(); }
                next = jobs.size();
            }
        }
    };
    auto workers = std::min(jobs.size(), cfg.jobs == 0 ? DefaultThreadCount() : cfg.jobs);
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) { pool.emplace_back(worker); }
    worker();
    for (auto& t : pool) { t.join(); }
    if (error) { std::rethrow_exception(error); }

    auto records = ReadRecords(written);
    std::ostringstream summary;
    WriteSummaryCsv(summary, Summarize(records, false), false);
    WriteFileAtomic(fs::path(cfg.outDir) / "summary.csv", summary.str());
    std::cout << summary.str();
    return 0;
}

auto CmdBuildLibrary(Overrides const& o) -> int
{
    auto [cfg, lambdaSet] = o.Resolve();
    (void)lambdaSet;
    if (cfg.libraryDir.empty()) { cfg.libraryDir = (fs::path(cfg.outDir) / "libraries").string(); }
    auto specs = ResolveProblems(cfg.problems, o.builtinSamples);
    for (auto const& s : specs) {
        auto issues = ValidateSpec(s, true);
        if (!issues.empty()) { throw ConfigError(s.name + ": " + issues.front()); }
    }
    for (auto const& s : specs) {
        auto lp = LoadProblem(s, cfg.dataSeed);
        auto path = fs::path(cfg.libraryDir) /
                    LibraryFileName(s.name, cfg.evolution.headLength, cfg.libraryCap, cfg.librarySeed);
        auto table = BuildTable(lp.featureNames, lp.featureDims, cfg.table);
        if (fs::exists(path)) {
            std::ifstream in(path);
            auto lib = SemanticLibrary::Load(in, table);
            std::cout << path.string() << ": cached, " << lib.TotalEntries() << " entries\n";
            continue;
        }
        auto lib = BuildProblemLibrary(lp, cfg.table, cfg.evolution.headLength, cfg.libraryCap, cfg.librarySeed);
        std::ostringstream os;
        lib.Save(os);
        WriteFileAtomic(path, os.str());
        std::cout << path.string() << ": " << lib.TotalEntries() << " entries\n";
    }
    return 0;
}

auto CmdReport(std::vector<std::string> const& inputs, std::string outDir, double alpha) -> int
{
    if (outDir.empty()) { outDir = DefaultOutDir(); }
    auto records = ReadRecords(inputs);
    std::ostringstream summary;
    WriteSummaryCsv(summary, Summarize(records, false), false);
    std::ostringstream perProblem;
    WriteSummaryCsv(perProblem, Summarize(records, true), true);
    WriteFileAtomic(fs::path(outDir) / "summary.csv", summary.str());
    WriteFileAtomic(fs::path(outDir) / "summary_by_problem.csv", perProblem.str());
    auto sig = Significance(records, alpha);
    auto sigPath = fs::path(outDir) / "significance.csv";
    if (sig.empty()) {
        fs::remove(sigPath);
    } else {
        std::ostringstream os;
        WriteSignificanceCsv(os, sig);
        WriteFileAtomic(sigPath, os.str());
    }
    std::cout << summary.str();
    std::cout << records.size() << " records, " << sig.size() << " significance rows\n";
    return 0;
}

auto CmdValidate(std::vector<std::string> const& paths, bool requireUnits) -> int
{
    int bad = 0;
    for (auto const& p : paths) {
        try {
            auto spec = LoadProblemSpec(p);
            auto issues = ValidateSpec(spec, requireUnits);
            for (auto const& i : issues) { std::cout << p << ": " << i << '\n'; }
            if (issues.empty()) {
                std::cout << p << ": ok (" << spec.features.size() << " features"
                          << (spec.HasAllUnits() ? "" : ", units incomplete") << ")\n";
            }
            bad += issues.empty() ? 0 : 1;
        } catch (SpecError const& e) {
            std::cout << p << ": " << e.what() << '\n';
            ++bad;
        }
    }
    return bad == 0 ? 0 : kExitFailure;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"GEP symbolic regression with dimensional semantic backpropagation"};
    app.require_subcommand(1);

    Overrides runOpts;
    auto* run = app.add_subcommand("run", "run trials and write records plus a summary");
    runOpts.Register(run, true);

    Overrides libOpts;
    auto* lib = app.add_subcommand("build-library", "build and cache semantic libraries");
    libOpts.Register(lib, false);
    lib->add_option("--out", libOpts.out, "output directory");

    std::vector<std::string> reportInputs;
    std::string reportOut;
    double alpha = 0.05;
    auto* report = app.add_subcommand("report", "summarize records and test paired modes");
    report->add_option("records", reportInputs, "record files or directories")->required();
    report->add_option("--out", reportOut, "output directory (default: $GEPSBP_OUT or ./results)");
    report->add_option("--alpha", alpha, "family-wise significance level");

    std::vector<std::string> validatePaths;
    bool requireUnits = false;
    auto* validate = app.add_subcommand("validate", "check problem spec files");
    validate->add_option("specs", validatePaths)->required();
    validate->add_flag("--require-units", requireUnits, "treat missing units as errors");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) { return CmdRun(runOpts); }
        if (*lib) { return CmdBuildLibrary(libOpts); }
        if (*report) { return CmdReport(reportInputs, reportOut, alpha); }
        if (*validate) { return CmdValidate(validatePaths, requireUnits); }
    } catch (ConfigError const& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (SpecError const& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (std::exception const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return 0;
}
