// SPDX-License-Identifier: Apache-2.0

#ifndef GEPSBP_FITNESS_HPP
#define GEPSBP_FITNESS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dimension.hpp"
#include "expr_tree.hpp"
#include "symbols.hpp"

namespace gepsbp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Dense column-major matrix; rows are samples, columns are features.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) { }

    static auto FromRows(std::vector<std::vector<double>> const& rows) -> Matrix
    {
        Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != m.cols_) { throw std::invalid_argument("ragged rows"); }
            for (std::size_t c = 0; c < m.cols_; ++c) { m(r, c) = rows[r][c]; }
        }
        return m;
    }

    [[nodiscard]] auto Rows() const -> std::size_t { return rows_; }
    [[nodiscard]] auto Cols() const -> std::size_t { return cols_; }
    auto operator()(std::size_t r, std::size_t c) -> double& { return data_[c * rows_ + r]; }
    auto operator()(std::size_t r, std::size_t c) const -> double { return data_[c * rows_ + r]; }
    [[nodiscard]] auto Column(std::size_t c) const -> std::span<double const>
    {
        return {data_.data() + c * rows_, rows_};
    }

    /// Copy of the given rows, in order.
    [[nodiscard]] auto SelectRows(std::span<std::size_t const> idx) const -> Matrix
    {
        Matrix m(idx.size(), cols_);
        for (std::size_t c = 0; c < cols_; ++c) {
            for (std::size_t r = 0; r < idx.size(); ++r) { m(r, c) = (*this)(idx[r], c); }
        }
        return m;
    }

    friend auto operator==(Matrix const&, Matrix const&) -> bool = default;

private:
    std::size_t rows_{0};
    std::size_t cols_{0};
    std::vector<double> data_;
};

/// A regression task with physical dimensions attached.
struct Problem {
    Matrix X;
    std::vector<double> y;
    std::vector<DimensionVector> featureDims;
    DimensionVector targetDim;
    SymbolTable table;
    std::vector<std::string> featureNames;

    void Validate() const
    {
        if (X.Cols() != featureDims.size()) { throw std::invalid_argument("feature dimension count != column count"); }
        if (X.Rows() != y.size()) { throw std::invalid_argument("target length != row count"); }
    }
};

namespace detail {
inline auto Finite(double v) -> double { return std::isfinite(v) ? v : kNaN; }

inline auto ApplyUnary(Operator const& op, double a) -> double
{
    switch (op.kind) {
    case OpKind::Pow: return Finite(std::pow(a, boost::rational_cast<double>(op.exponent)));
    case OpKind::Sqrt: return a < 0.0 ? kNaN : std::sqrt(a);
    case OpKind::Sin: return Finite(std::sin(a));
    case OpKind::Cos: return Finite(std::cos(a));
    case OpKind::Log: return a > 0.0 ? Finite(std::log(a)) : kNaN;
    case OpKind::Exp: return Finite(std::exp(a));
    case OpKind::Neg: return -a;
    default: return kNaN;
    }
}

inline auto ApplyBinary(OpKind k, double a, double b) -> double
{
    switch (k) {
    case OpKind::Add: return Finite(a + b);
    case OpKind::Sub: return Finite(a - b);
    case OpKind::Mul: return Finite(a * b);
    case OpKind::Div: return b == 0.0 ? kNaN : Finite(a / b);
    default: return kNaN;
    }
}
} // namespace detail

/// Evaluates the tree on every row of X. Constant leaf k (pre-order occurrence)
/// reads coefficients[k] when coefficients are given, otherwise its own value.
/// Domain violations and overflow produce NaN in the affected rows.
inline auto EvaluateBatch(ExprTree const& tree, Matrix const& X, std::span<double const> coefficients = {})
    -> std::vector<double>
{
    auto const rows = X.Rows();
    auto const n = tree.Size();
    if (n == 0) { throw std::invalid_argument("empty tree"); }
    thread_local std::vector<double> buffer;
    thread_local std::vector<std::size_t> coeffIndex;
    buffer.resize(n * rows);
    coeffIndex.assign(n, 0);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (tree[i].kind == NodeKind::Constant) { coeffIndex[i] = k++; }
    }
    if (!coefficients.empty() && coefficients.size() < k) {
        throw std::invalid_argument("fewer coefficients than constant leaves");
    }

    for (std::size_t i = n; i-- > 0;) {
        auto const& node = tree[i];
        double* out = buffer.data() + i * rows;
        switch (node.kind) {
        case NodeKind::Feature: {
            if (node.feature >= X.Cols()) {
                throw std::out_of_range("unknown feature index " + std::to_string(node.feature));
            }
            auto col = X.Column(node.feature);
            std::copy(col.begin(), col.end(), out);
            break;
        }
        case NodeKind::Constant: {
            auto v = coefficients.empty() ? node.value : coefficients[coeffIndex[i]];
            std::fill(out, out + rows, v);
            break;
        }
        case NodeKind::Literal: std::fill(out, out + rows, node.value); break;
        case NodeKind::Function: {
            double const* a = buffer.data() + (i + 1) * rows;
            if (node.arity == 1) {
                for (std::size_t r = 0; r < rows; ++r) { out[r] = detail::ApplyUnary(node.op, a[r]); }
            } else {
                double const* b = buffer.data() + (i + 1 + tree[i + 1].length) * rows;
                auto kind = node.op.kind;
                for (std::size_t r = 0; r < rows; ++r) { out[r] = detail::ApplyBinary(kind, a[r], b[r]); }
            }
            break;
        }
        }
    }
    return {buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(rows)};
}

/// 0 when the root matches `target`, the L2 norm of the difference when the
/// root is defined but differs, +inf when any node is Undefined.
inline auto DimensionPenalty(ExprTree const& tree, DimensionVector const& target) -> double
{
    if (tree.HasUndefined()) { return kInf; }
    auto const& root = *tree.RootDim();
    if (root == target) { return 0.0; }
    return L2NormDiff(root, target);
}

/// Mean squared error; +inf if any prediction is not finite.
inline auto MeanSquaredError(std::span<double const> y, std::span<double const> yhat) -> double
{
    if (y.size() != yhat.size() || y.empty()) { throw std::invalid_argument("size mismatch in MSE"); }
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!std::isfinite(yhat[i])) { return kInf; }
        auto d = y[i] - yhat[i];
        sum += d * d;
    }
    auto mse = sum / static_cast<double>(y.size());
    return std::isfinite(mse) ? mse : kInf;
}

/// MSE(y, f(X)) + lambda * DimensionPenalty. With lambda == 0 this is the MSE itself.
inline auto Loss(Problem const& problem, ExprTree const& tree, std::span<double const> coefficients, double lambda)
    -> double
{
    auto pred = EvaluateBatch(tree, problem.X, coefficients);
    auto mse = MeanSquaredError(problem.y, pred);
    if (lambda == 0.0) { return mse; }
    auto penalty = DimensionPenalty(tree, problem.targetDim);
    if (!std::isfinite(penalty) || !std::isfinite(mse)) { return kInf; }
    return mse + lambda * penalty;
}

struct CoefficientOptions {
    std::size_t maxIterations{30};
    double gradientTolerance{1e-12};
    double relativeImprovement{1e-14};
    std::size_t maxEvaluations{std::numeric_limits<std::size_t>::max()};
};

struct CoefficientResult {
    std::vector<double> coefficients;
    double loss{kInf};
    std::size_t evaluations{0};
};

/// Minimizes the training MSE over the constant leaves with Polak-Ribiere+
/// conjugate gradient. Gradients are central differences with step
/// 1e-6 * max(1, |theta_i|); the line search backtracks with quadratic
/// interpolation and only accepts improvements, so the returned loss never
/// exceeds the starting loss.
inline auto OptimizeCoefficients(Problem const& problem, ExprTree const& tree, std::vector<double> coefficients,
                                 CoefficientOptions const& options = {}) -> CoefficientResult
{
    CoefficientResult res;
    auto const n = tree.CoefficientCount();
    if (coefficients.size() != n) { throw std::invalid_argument("coefficient count mismatch"); }

    auto eval = [&](std::vector<double> const& theta) {
        ++res.evaluations;
        auto pred = EvaluateBatch(tree, problem.X, theta);
        return MeanSquaredError(problem.y, pred);
    };
    auto budgetLeft = [&](std::size_t need) { return res.evaluations + need <= options.maxEvaluations; };

    if (!budgetLeft(1)) {
        res.coefficients = std::move(coefficients);
        return res;
    }
    double f = eval(coefficients);
    if (n == 0 || !std::isfinite(f)) {
        res.coefficients = std::move(coefficients);
        res.loss = f;
        return res;
    }

    auto gradient = [&](std::vector<double> const& theta, std::vector<double>& g) {
        g.assign(n, 0.0);
        auto probe = theta;
        for (std::size_t i = 0; i < n; ++i) {
            auto h = 1e-6 * std::max(1.0, std::abs(theta[i]));
            probe[i] = theta[i] + h;
            auto fp = eval(probe);
            probe[i] = theta[i] - h;
            auto fm = eval(probe);
            probe[i] = theta[i];
            g[i] = (fp - fm) / (2.0 * h);
            if (!std::isfinite(g[i])) { return false; }
        }
        return true;
    };
    auto dot = [](std::vector<double> const& a, std::vector<double> const& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) { s += a[i] * b[i]; }
        return s;
    };

    std::vector<double> theta = coefficients;
    std::vector<double> g;
    std::vector<double> gNew;
    if (!budgetLeft(2 * n) || !gradient(theta, g)) {
        res.coefficients = std::move(theta);
        res.loss = f;
        return res;
    }
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) { d[i] = -g[i]; }
    double step = 1.0;

    for (std::size_t it = 0; it < options.maxIterations; ++it) {
        if (std::sqrt(dot(g, g)) < options.gradientTolerance) { break; }
        auto slope = dot(g, d);
        if (slope >= 0.0) {
            for (std::size_t i = 0; i < n; ++i) { d[i] = -g[i]; }
            slope = -dot(g, g);
        }
        // backtracking with quadratic interpolation (Armijo c1 = 1e-4)
        double alpha = step;
        double fNew = kInf;
        std::vector<double> trial(n);
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            if (!budgetLeft(1)) { break; }
            for (std::size_t i = 0; i < n; ++i) { trial[i] = theta[i] + alpha * d[i]; }
            fNew = eval(trial);
            if (std::isfinite(fNew) && fNew <= f + 1e-4 * alpha * slope) {
                accepted = true;
                break;
            }
            double next = 0.5 * alpha;
            if (std::isfinite(fNew)) {
                auto denom = 2.0 * (fNew - f - slope * alpha);
                if (denom > 0.0) { next = std::clamp(-slope * alpha * alpha / denom, 0.1 * alpha, 0.5 * alpha); }
            }
            alpha = next;
        }
        if (!accepted) { break; }

        // the interpolated minimizer of the last bracket is often better still
        if (budgetLeft(1) && alpha == step) {
            std::vector<double> further(n);
            for (std::size_t i = 0; i < n; ++i) { further[i] = theta[i] + 2.0 * alpha * d[i]; }
            auto fFar = eval(further);
            if (std::isfinite(fFar) && fFar < fNew) {
                trial = further;
                fNew = fFar;
                alpha *= 2.0;
            }
        }

        auto improvement = f - fNew;
        theta = trial;
        f = fNew;
        step = alpha;
        if (improvement <= options.relativeImprovement * (1.0 + std::abs(f))) { break; }
        if (!budgetLeft(2 * n) || !gradient(theta, gNew)) { break; }
        auto beta = std::max(0.0, dot(gNew, gNew) - dot(gNew, g)) / std::max(dot(g, g), 1e-300);
        if ((it + 1) % n == 0) { beta = 0.0; } // periodic restart
        for (std::size_t i = 0; i < n; ++i) { d[i] = -gNew[i] + beta * d[i]; }
        g.swap(gNew);
    }
    res.coefficients = std::move(theta);
    res.loss = f;
    return res;
}

} // namespace gepsbp

#endif
