// SPDX-License-Identifier: Apache-2.0

#ifndef GEPSBP_BENCH_WILCOXON_HPP
#define GEPSBP_BENCH_WILCOXON_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gepsbp::bench {

struct WilcoxonResult {
    std::size_t n{0};   // non-zero differences
    double wPlus{0.0};  // rank sum of positive differences
    double wMinus{0.0};
    double p{1.0};      // two-sided
    bool exact{false};
    bool degenerate{false}; // every difference was zero
};

inline constexpr std::size_t kWilcoxonExactLimit = 25;

/// Two-sided signed-rank test on the paired differences a[i] - b[i]. Zero
/// differences are dropped; ties get mid-ranks. The null distribution is
/// enumerated exactly for n <= 25 and approximated by a normal with tie and
/// continuity correction above.
inline auto WilcoxonSignedRank(std::span<double const> a, std::span<double const> b) -> WilcoxonResult
{
    if (a.size() != b.size()) { throw std::invalid_argument("paired samples differ in length"); }
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto x = a[i] - b[i];
        if (x != 0.0) { d.push_back(x); }
    }
    WilcoxonResult res;
    res.n = d.size();
    if (d.empty()) {
        res.degenerate = true;
        return res;
    }
    std::sort(d.begin(), d.end(), [](double x, double y) { return std::abs(x) < std::abs(y); });

    // doubled mid-ranks keep every rank an integer
    auto const n = d.size();
    std::vector<std::int64_t> rank2(n);
    double tieTerm = 0.0;
    for (std::size_t i = 0; i < n;) {
        auto j = i;
        while (j + 1 < n && std::abs(d[j + 1]) == std::abs(d[i])) { ++j; }
        auto r2 = static_cast<std::int64_t>(i + j + 2); // (i+1 + j+1)
        for (auto k = i; k <= j; ++k) { rank2[k] = r2; }
        auto t = static_cast<double>(j - i + 1);
        tieTerm += t * t * t - t;
        i = j + 1;
    }
    std::int64_t plus2 = 0;
    std::int64_t total2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total2 += rank2[i];
        if (d[i] > 0) { plus2 += rank2[i]; }
    }
    res.wPlus = static_cast<double>(plus2) / 2.0;
    res.wMinus = static_cast<double>(total2 - plus2) / 2.0;

    if (n <= kWilcoxonExactLimit) {
        res.exact = true;
        // counts[s] = number of sign assignments with doubled positive sum s
        std::vector<double> counts(static_cast<std::size_t>(total2) + 1, 0.0);
        counts[0] = 1.0;
        std::int64_t reach = 0;
        for (auto r : rank2) {
            for (auto s = reach; s >= 0; --s) {
                counts[static_cast<std::size_t>(s + r)] += counts[static_cast<std::size_t>(s)];
            }
            reach += r;
        }
        auto w = std::min(plus2, total2 - plus2);
        double tail = 0.0;
        for (std::int64_t s = 0; s <= w; ++s) { tail += counts[static_cast<std::size_t>(s)]; }
        res.p = std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(n)));
        return res;
    }

    auto nd = static_cast<double>(n);
    auto mean = nd * (nd + 1.0) / 4.0;
    auto var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tieTerm / 48.0;
    if (var <= 0.0) {
        res.p = 1.0;
        return res;
    }
    auto diff = std::abs(res.wPlus - mean);
    auto z = std::max(0.0, diff - 0.5) / std::sqrt(var);
    res.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    return res;
}

struct SignificanceEntry {
    std::string first;
    std::string second;
    WilcoxonResult test;
    double alpha{0.0};
    std::string grade; // "***", "**", "*" or "ns"
};

/// Grade relative to the corrected threshold alpha.
inline auto SignificanceGrade(double p, double alpha) -> std::string
{
    if (p < alpha * 1e-3) { return "***"; }
    if (p < alpha * 1e-1) { return "**"; }
    if (p < alpha) { return "*"; }
    return "ns";
}

/// Pairwise tests over all method pairs with Bonferroni-corrected alpha.
/// Samples of different methods are paired by position.
inline auto WilcoxonReport(std::map<std::string, std::vector<double>> const& samples, double alphaBase)
    -> std::vector<SignificanceEntry>
{
    std::vector<std::string> names;
    for (auto const& [k, v] : samples) { names.push_back(k); }
    auto const comparisons = names.size() * (names.size() - 1) / 2;
    std::vector<SignificanceEntry> out;
    if (comparisons == 0) { return out; }
    auto const alpha = alphaBase / static_cast<double>(comparisons);
    for (std::size_t i = 0; i < names.size(); ++i) {
        for (std::size_t j = i + 1; j < names.size(); ++j) {
            auto const& a = samples.at(names[i]);
            auto const& b = samples.at(names[j]);
            if (a.size() != b.size()) { throw std::invalid_argument("unpaired samples for " + names[i] + "/" + names[j]); }
            if (a.size() < 6) { throw std::invalid_argument("need at least 6 paired observations"); }
            SignificanceEntry e{names[i], names[j], WilcoxonSignedRank(a, b), alpha, {}};
            e.grade = e.test.degenerate ? "ns" : SignificanceGrade(e.test.p, alpha);
            out.push_back(std::move(e));
        }
    }
    return out;
}

} // namespace gepsbp::bench

#endif
