// SPDX-License-Identifier: Apache-2.0

#ifndef GEPSBP_BENCH_DATA_HPP
#define GEPSBP_BENCH_DATA_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "../fitness.hpp"
#include "../random.hpp"

namespace gepsbp::bench {

struct Dataset {
    std::vector<std::string> featureNames;
    std::string targetName;
    Matrix X;
    std::vector<double> y;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {
inline auto SplitCsvLine(std::string const& line) -> std::vector<std::string>
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        auto b = cell.find_first_not_of(" \t\r");
        auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') { out.emplace_back(); }
    return out;
}
} // namespace detail

/// Reads a CSV with a header row. The target is the column named `target`,
/// or the last column when `target` is empty.
inline auto ReadCsv(std::istream& in, std::string const& target = {}) -> Dataset
{
    std::string line;
    if (!std::getline(in, line)) { throw DataError("empty CSV"); }
    auto header = detail::SplitCsvLine(line);
    if (header.size() < 2) { throw DataError("CSV needs at least one feature and a target column"); }
    std::size_t targetCol = header.size() - 1;
    if (!target.empty()) {
        auto it = std::find(header.begin(), header.end(), target);
        if (it == header.end()) { throw DataError("target column '" + target + "' not found"); }
        targetCol = static_cast<std::size_t>(it - header.begin());
    }
    Dataset ds;
    ds.targetName = header[targetCol];
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c != targetCol) { ds.featureNames.push_back(header[c]); }
    }
    std::vector<std::vector<double>> rows;
    std::size_t lineNo = 1;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.find_first_not_of(" \t\r") == std::string::npos) { continue; }
        auto cells = detail::SplitCsvLine(line);
        if (cells.size() != header.size()) {
            throw DataError("line " + std::to_string(lineNo) + ": expected " + std::to_string(header.size()) +
                            " fields");
        }
        std::vector<double> row;
        double yv = 0.0;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            double v = 0.0;
            auto const& s = cells[c];
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc{} || p != s.data() + s.size()) {
                throw DataError("line " + std::to_string(lineNo) + ": bad number '" + s + "'");
            }
            if (c == targetCol) {
                yv = v;
            } else {
                row.push_back(v);
            }
        }
        rows.push_back(std::move(row));
        ds.y.push_back(yv);
    }
    ds.X = Matrix::FromRows(rows);
    if (rows.empty()) { ds.X = Matrix(0, ds.featureNames.size()); }
    return ds;
}

inline auto ReadCsvFile(std::string const& path, std::string const& target = {}) -> Dataset
{
    std::ifstream in(path);
    if (!in) { throw DataError("cannot open " + path); }
    return ReadCsv(in, target);
}

inline auto RootMeanSquare(std::span<double const> y) -> double
{
    if (y.empty()) { return 0.0; }
    double s = 0.0;
    for (auto v : y) { s += v * v; }
    return std::sqrt(s / static_cast<double>(y.size()));
}

/// y + N(0, gamma * RMS(y)) per entry. gamma == 0 returns y unchanged.
inline auto AddNoise(std::vector<double> y, double gamma, Rng& rng) -> std::vector<double>
{
    if (!(gamma >= 0.0)) { throw std::invalid_argument("noise level must be non-negative"); }
    if (gamma == 0.0) { return y; }
    std::normal_distribution<double> eta(0.0, gamma * RootMeanSquare(y));
    for (auto& v : y) { v += eta(rng); }
    return y;
}

struct SplitData {
    Matrix XTrain;
    std::vector<double> yTrain;
    Matrix XTest;
    std::vector<double> yTest;
    std::vector<std::size_t> trainRows;
    std::vector<std::size_t> testRows;
};

/// Shuffles row indices and puts round(ratio * n) rows in the training part.
inline auto Split(Matrix const& X, std::span<double const> y, double ratio, Rng& rng) -> SplitData
{
    if (X.Rows() != y.size()) { throw std::invalid_argument("X and y disagree on row count"); }
    if (X.Rows() < 2) { throw std::invalid_argument("split needs at least 2 rows"); }
    if (!(ratio > 0.0 && ratio < 1.0)) { throw std::invalid_argument("split ratio must lie in (0, 1)"); }
    auto n = X.Rows();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = n - 1; i > 0; --i) { std::swap(idx[i], idx[UniformIndex(rng, i + 1)]); }
    auto nTrain = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
    nTrain = std::clamp<std::size_t>(nTrain, 1, n - 1);
    SplitData s;
    s.trainRows.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(nTrain));
    s.testRows.assign(idx.begin() + static_cast<std::ptrdiff_t>(nTrain), idx.end());
    s.XTrain = X.SelectRows(s.trainRows);
    s.XTest = X.SelectRows(s.testRows);
    for (auto r : s.trainRows) { s.yTrain.push_back(y[r]); }
    for (auto r : s.testRows) { s.yTest.push_back(y[r]); }
    return s;
}

} // namespace gepsbp::bench

#endif
