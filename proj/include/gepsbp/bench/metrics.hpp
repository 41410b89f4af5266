// SPDX-License-Identifier: Apache-2.0

#ifndef GEPSBP_BENCH_METRICS_HPP
#define GEPSBP_BENCH_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "../expr_tree.hpp"
#include "../fitness.hpp"
#include "../random.hpp"
#include "simplify.hpp"

namespace gepsbp::bench {

/// Coefficient of determination 1 - SS_res / SS_tot.
inline auto R2Score(std::span<double const> y, std::span<double const> yhat) -> double
{
    if (y.size() != yhat.size()) { throw std::invalid_argument("size mismatch in R2"); }
    if (y.size() < 2) { throw std::invalid_argument("R2 needs at least 2 samples"); }
    double mean = 0.0;
    for (auto v : y) { mean += v; }
    mean /= static_cast<double>(y.size());
    double ssRes = 0.0;
    double ssTot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ssRes += (y[i] - yhat[i]) * (y[i] - yhat[i]);
        ssTot += (y[i] - mean) * (y[i] - mean);
    }
    if (ssTot == 0.0) { throw std::domain_error("R2 undefined for constant targets"); }
    return 1.0 - ssRes / ssTot;
}

struct SolutionOptions {
    double tolerance{1e-6};
    double minUsable{0.8};
    std::size_t minRows{64};
};

namespace detail {
/// Standard deviation of v over max(|mean|, scale).
inline auto RelativeSpread(std::vector<double> const& v, double scale) -> double
{
    double mean = 0.0;
    for (auto x : v) { mean += x; }
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (auto x : v) { var += (x - mean) * (x - mean); }
    auto sd = std::sqrt(var / static_cast<double>(v.size()));
    auto denom = std::max(std::abs(mean), scale);
    if (denom == 0.0) { return sd == 0.0 ? 0.0 : kInf; }
    return sd / denom;
}
} // namespace detail

/// True when truth - candidate or truth / candidate is constant. Tries the
/// rewriter first, then a numeric test on the probe rows.
inline auto SymbolicSolution(ExprTree const& truth, ExprTree const& candidate, Matrix const& probe,
                             SolutionOptions const& opt = {}) -> bool
{
    if (probe.Rows() < opt.minRows) { throw std::invalid_argument("too few probe rows"); }
    auto diff = Simplify(ExprTree::Make(OpKind::Sub, {truth, candidate}));
    if (diff.Size() == 1 && diff[0].IsNumber()) { return true; }
    auto ratio = Simplify(ExprTree::Make(OpKind::Div, {truth, candidate}));
    if (ratio.Size() == 1 && ratio[0].IsNumber() && ratio[0].value != 0.0) { return true; }

    auto t = EvaluateBatch(truth, probe);
    auto c = EvaluateBatch(candidate, probe);
    std::vector<double> d;
    std::vector<double> r;
    std::vector<double> tv;
    std::size_t usable = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!std::isfinite(t[i]) || !std::isfinite(c[i])) { continue; }
        ++usable;
        d.push_back(t[i] - c[i]);
        tv.push_back(t[i]);
        if (c[i] != 0.0) { r.push_back(t[i] / c[i]); }
    }
    if (static_cast<double>(usable) < opt.minUsable * static_cast<double>(t.size()) || usable < 2) { return false; }

    double rms = 0.0;
    for (auto x : tv) { rms += x * x; }
    rms = std::sqrt(rms / static_cast<double>(tv.size()));
    if (detail::RelativeSpread(d, rms) < opt.tolerance) { return true; }
    if (r.size() == usable) {
        double mean = 0.0;
        for (auto x : r) { mean += x; }
        mean /= static_cast<double>(r.size());
        if (mean != 0.0 && detail::RelativeSpread(r, 0.0) < opt.tolerance) { return true; }
    }
    return false;
}

/// Rows drawn uniformly from the bounding box of X.
inline auto ProbeRows(Matrix const& X, std::size_t rows, Rng& rng) -> Matrix
{
    Matrix P(rows, X.Cols());
    for (std::size_t c = 0; c < X.Cols(); ++c) {
        auto col = X.Column(c);
        auto [lo, hi] = std::minmax_element(col.begin(), col.end());
        for (std::size_t r = 0; r < rows; ++r) { P(r, c) = *lo + (*hi - *lo) * Uniform01(rng); }
    }
    return P;
}

} // namespace gepsbp::bench

#endif
