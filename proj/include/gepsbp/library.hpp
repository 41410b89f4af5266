// SPDX-License-Identifier: Apache-2.0

#ifndef GEPSBP_LIBRARY_HPP
#define GEPSBP_LIBRARY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <boost/crc.hpp>

#include "expr_tree.hpp"
#include "genome.hpp"
#include "random.hpp"
#include "symbols.hpp"

namespace gepsbp {

class LibraryFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Pairs (outer, inner) of directly nested unary operators refused at build time.
using BannedNesting = std::set<std::pair<OpKind, OpKind>>;

inline auto DefaultBannedNesting() -> BannedNesting
{
    BannedNesting banned;
    for (auto outer : {OpKind::Sin, OpKind::Cos, OpKind::Log, OpKind::Exp}) {
        for (auto inner : {OpKind::Sin, OpKind::Cos, OpKind::Log, OpKind::Exp}) { banned.emplace(outer, inner); }
    }
    return banned;
}

struct LibraryConfig {
    std::size_t maxSize{8}; // usually the head length
    std::size_t cap{100000};
    std::uint64_t seed{0};
    BannedNesting banned{DefaultBannedNesting()};
};

/// Upper bound on distinct trees per size class for m terminals, o operators
/// and head length hl: (4(m+1)o)^((hl-1)/2).
inline auto SearchSpaceBound(std::size_t m, std::size_t o, std::size_t hl) -> double
{
    return std::pow(4.0 * static_cast<double>(m + 1) * static_cast<double>(o),
                    (static_cast<double>(hl) - 1.0) / 2.0);
}

/// Map from (dimension, pre-order size) to replacement subtrees.
///
/// Entries are symbol-id sequences in pre-order. Built once, then read-only.
class SemanticLibrary {
public:
    using Entry = std::vector<SymbolId>;
    using SizeClasses = std::map<std::size_t, std::vector<Entry>>;

    static auto Build(SymbolTable const& table, LibraryConfig const& config) -> SemanticLibrary
    {
        SemanticLibrary lib;
        lib.config_ = config;
        lib.signature_ = table.Signature();
        lib.Grow(table);
        return lib;
    }

    /// Random entry with dimension `dim` and size <= maxSize; size class first, then entry.
    [[nodiscard]] auto Lookup(SymbolTable const& table, DimensionVector const& dim, std::size_t maxSize, Rng& rng) const
        -> std::optional<ExprTree>
    {
        auto it = entries_.find(dim);
        if (it == entries_.end()) { return std::nullopt; }
        std::vector<std::vector<Entry> const*> classes;
        for (auto const& [size, list] : it->second) {
            if (size > maxSize) { break; }
            if (!list.empty()) { classes.push_back(&list); }
        }
        if (classes.empty()) { return std::nullopt; }
        auto const& list = *classes[UniformIndex(rng, classes.size())];
        return Materialize(table, list[UniformIndex(rng, list.size())], rng);
    }

    [[nodiscard]] auto Contains(DimensionVector const& dim, std::size_t maxSize) const -> bool
    {
        auto it = entries_.find(dim);
        if (it == entries_.end()) { return false; }
        return std::any_of(it->second.begin(), it->second.end(),
                           [&](auto const& kv) { return kv.first <= maxSize && !kv.second.empty(); });
    }

    /// Deep copy of an entry; constant leaves draw fresh coefficients.
    static auto Materialize(SymbolTable const& table, Entry const& entry, Rng& rng) -> ExprTree
    {
        std::vector<Node> nodes;
        nodes.reserve(entry.size());
        for (auto id : entry) {
            double c = 0.0;
            if (table[id].kind == SymbolKind::Constant) {
                c = std::uniform_real_distribution<double>(kConstantLow, kConstantHigh)(rng);
            }
            nodes.push_back(Node::FromSymbol(table, id, c));
        }
        return ExprTree(std::move(nodes));
    }

    [[nodiscard]] auto Entries() const -> std::unordered_map<DimensionVector, SizeClasses> const& { return entries_; }
    [[nodiscard]] auto Config() const -> LibraryConfig const& { return config_; }
    [[nodiscard]] auto Signature() const -> std::string const& { return signature_; }

    [[nodiscard]] auto SizeClassCount(std::size_t size) const -> std::size_t
    {
        std::size_t n = 0;
        for (auto const& [dim, classes] : entries_) {
            auto it = classes.find(size);
            if (it != classes.end()) { n += it->second.size(); }
        }
        return n;
    }

    [[nodiscard]] auto TotalEntries() const -> std::size_t
    {
        std::size_t n = 0;
        for (auto const& [dim, classes] : entries_) {
            for (auto const& [size, list] : classes) { n += list.size(); }
        }
        return n;
    }

    /// Text dump, keys sorted; the last line carries a CRC-32 of everything before it.
    void Save(std::ostream& os) const
    {
        std::ostringstream body;
        body << "gepsbp-library 1\n";
        body << "symbols " << signature_ << '\n';
        body << "config " << config_.maxSize << ' ' << config_.cap << ' ' << config_.seed << '\n';
        std::vector<DimensionVector> keys;
        keys.reserve(entries_.size());
        for (auto const& kv : entries_) { keys.push_back(kv.first); }
        std::sort(keys.begin(), keys.end());
        body << "entries " << TotalEntries() << '\n';
        for (auto const& key : keys) {
            for (auto const& [size, list] : entries_.at(key)) {
                for (auto const& e : list) {
                    body << key.ToString() << ' ' << size;
                    for (auto id : e) { body << ' ' << id; }
                    body << '\n';
                }
            }
        }
        auto text = body.str();
        os << text << "checksum " << std::hex << std::setw(8) << std::setfill('0') << Crc(text) << std::dec << '\n';
    }

    /// Reads a dump written by Save; the table must match the one it was built for.
    static auto Load(std::istream& is, SymbolTable const& table) -> SemanticLibrary
    {
        std::string all((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
        auto pos = all.rfind("checksum ");
        if (pos == std::string::npos) { throw LibraryFormatError("library file has no checksum line"); }
        auto body = all.substr(0, pos);
        std::uint32_t stored = 0;
        try {
            stored = static_cast<std::uint32_t>(std::stoul(all.substr(pos + 9), nullptr, 16));
        } catch (std::exception const&) {
            throw LibraryFormatError("malformed checksum line");
        }
        if (stored != Crc(body)) { throw LibraryFormatError("library checksum mismatch"); }

        std::istringstream in(body);
        std::string line;
        std::getline(in, line);
        if (line != "gepsbp-library 1") { throw LibraryFormatError("unsupported library header '" + line + "'"); }
        SemanticLibrary lib;
        std::getline(in, line);
        if (line.rfind("symbols ", 0) != 0) { throw LibraryFormatError("missing symbols line"); }
        lib.signature_ = line.substr(8);
        if (lib.signature_ != table.Signature()) {
            throw LibraryFormatError("library was built for a different symbol table");
        }
        std::string tag;
        in >> tag >> lib.config_.maxSize >> lib.config_.cap >> lib.config_.seed;
        if (tag != "config") { throw LibraryFormatError("missing config line"); }
        std::size_t count = 0;
        in >> tag >> count;
        if (tag != "entries") { throw LibraryFormatError("missing entries line"); }
        std::getline(in, line);
        for (std::size_t k = 0; k < count; ++k) {
            if (!std::getline(in, line)) { throw LibraryFormatError("truncated library"); }
            std::istringstream row(line);
            std::string dimText;
            std::size_t size = 0;
            row >> dimText >> size;
            Entry e;
            std::size_t id = 0;
            while (row >> id) {
                if (id >= table.Size()) { throw LibraryFormatError("symbol id out of range"); }
                e.push_back(static_cast<SymbolId>(id));
            }
            if (e.size() != size) { throw LibraryFormatError("entry size mismatch"); }
            lib.entries_[ParseDimText(dimText)][size].push_back(std::move(e));
        }
        return lib;
    }

private:
    struct Candidate {
        Entry seq;
        DimensionVector dim;
        OpKind rootOp{OpKind::Add};
        bool rootIsFunction{false};
    };

    static auto Crc(std::string const& text) -> std::uint32_t
    {
        boost::crc_32_type crc;
        crc.process_bytes(text.data(), text.size());
        return crc.checksum();
    }

    static auto ParseDimText(std::string const& text) -> DimensionVector
    {
        if (text.size() < 2 || text.front() != '[' || text.back() != ']') {
            throw LibraryFormatError("malformed dimension '" + text + "'");
        }
        DimensionVector d;
        std::istringstream in(text.substr(1, text.size() - 2));
        std::string part;
        std::size_t i = 0;
        while (std::getline(in, part, ',')) {
            if (i >= DimensionVector::kSize) { throw LibraryFormatError("too many exponents"); }
            auto slash = part.find('/');
            try {
                if (slash == std::string::npos) {
                    d[i] = Rational(std::stoll(part));
                } else {
                    d[i] = Rational(std::stoll(part.substr(0, slash)), std::stoll(part.substr(slash + 1)));
                }
            } catch (std::exception const&) {
                throw LibraryFormatError("malformed exponent '" + part + "'");
            }
            ++i;
        }
        if (i != DimensionVector::kSize) { throw LibraryFormatError("dimension needs 7 exponents"); }
        return d;
    }

    auto Banned(OpKind outer, Candidate const& child) const -> bool
    {
        return child.rootIsFunction && config_.banned.count({outer, child.rootOp}) != 0;
    }

    // Combination `index` of the size class: unary ops first, then binary
    // operators over every (left size, right size) split.
    struct Shape {
        SymbolId op;
        std::size_t leftSize;
        std::size_t rightSize; // 0 for unary operators
        std::size_t count;     // number of combinations in this block
    };

    void Grow(SymbolTable const& table)
    {
        std::vector<std::vector<Candidate>> bySize(config_.maxSize + 1);
        std::unordered_map<DimensionVector, std::map<std::size_t, std::size_t>> perKey;

        auto accept = [&](Candidate c, std::size_t size) {
            auto& n = perKey[c.dim][size];
            if (n >= config_.cap) { return false; }
            ++n;
            entries_[c.dim][size].push_back(c.seq);
            bySize[size].push_back(std::move(c));
            return true;
        };

        if (config_.maxSize >= 1) {
            for (auto id : table.Terminals()) {
                auto n = Node::FromSymbol(table, id);
                accept(Candidate{{id}, n.IsNumber() ? DimensionVector::Zero() : *n.dim, OpKind::Add, false}, 1);
            }
        }

        auto m = table.Terminals().size();
        auto o = table.Nonterminals().size();
        auto bound = SearchSpaceBound(m, o, config_.maxSize);
        auto limit = static_cast<std::size_t>(std::min(static_cast<double>(config_.cap), std::floor(bound)));
        Rng rng = DeriveRng(config_.seed, 0, 0, Stream::Library);
        std::map<std::size_t, std::vector<std::vector<std::size_t>>> groupCache;

        for (std::size_t size = 2; size <= config_.maxSize; ++size) {
            std::vector<Shape> shapes;
            double total = 0.0;
            for (auto id : table.Nonterminals()) {
                auto arity = table[id].Arity();
                if (arity == 1) {
                    auto c = bySize[size - 1].size();
                    if (c > 0) { shapes.push_back({id, size - 1, 0, c}); }
                    total += static_cast<double>(c);
                } else {
                    for (std::size_t left = 1; left + 1 < size; ++left) {
                        auto right = size - 1 - left;
                        double c = static_cast<double>(bySize[left].size()) * static_cast<double>(bySize[right].size());
                        if (c > 0) {
                            shapes.push_back({id, left, right, static_cast<std::size_t>(std::min(c, 1e18))});
                            total += c;
                        }
                    }
                }
            }
            if (shapes.empty() || limit == 0) { continue; }

            std::size_t accepted = 0;
            auto consider = [&](Shape const& s, std::size_t k) {
                auto cand = Combine(table, bySize, s, k);
                if (!cand) { return; }
                if (accept(std::move(*cand), size)) { ++accepted; }
            };

            if (total <= static_cast<double>(limit)) {
                for (auto const& s : shapes) {
                    for (std::size_t k = 0; k < s.count && accepted < limit; ++k) { consider(s, k); }
                }
            } else {
                // Sample over dimension groups rather than raw entries so that
                // rare dimensions are not crowded out by common ones.
                auto groups = [&](std::size_t sz) -> std::vector<std::vector<std::size_t>> const& {
                    return GroupsOf(bySize, groupCache, sz);
                };
                std::vector<double> weights;
                for (auto const& s : shapes) {
                    double w = static_cast<double>(groups(s.leftSize).size());
                    if (s.rightSize > 0) { w *= static_cast<double>(groups(s.rightSize).size()); }
                    weights.push_back(w);
                }
                std::discrete_distribution<std::size_t> pickShape(weights.begin(), weights.end());
                std::unordered_set<std::string> seen;
                auto pick = [&](std::size_t sz) {
                    auto const& g = groups(sz);
                    auto const& members = g[UniformIndex(rng, g.size())];
                    return members[UniformIndex(rng, members.size())];
                };
                auto attempts = limit * 20;
                for (std::size_t a = 0; a < attempts && accepted < limit; ++a) {
                    auto const& s = shapes[pickShape(rng)];
                    std::size_t k = pick(s.leftSize);
                    if (s.rightSize > 0) { k = k * bySize[s.rightSize].size() + pick(s.rightSize); }
                    auto cand = Combine(table, bySize, s, k);
                    if (!cand) { continue; }
                    std::string key(reinterpret_cast<char const*>(cand->seq.data()), cand->seq.size() * sizeof(SymbolId));
                    if (!seen.insert(key).second) { continue; }
                    if (accept(std::move(*cand), size)) { ++accepted; }
                }
            }
        }
    }

    // Indices of bySize[size] grouped by dimension, in first-seen order.
    static auto GroupsOf(std::vector<std::vector<Candidate>> const& bySize,
                         std::map<std::size_t, std::vector<std::vector<std::size_t>>>& cache, std::size_t size)
        -> std::vector<std::vector<std::size_t>> const&
    {
        auto it = cache.find(size);
        if (it != cache.end()) { return it->second; }
        std::vector<std::vector<std::size_t>> groups;
        std::unordered_map<DimensionVector, std::size_t> index;
        auto const& list = bySize[size];
        for (std::size_t i = 0; i < list.size(); ++i) {
            auto [pos, fresh] = index.try_emplace(list[i].dim, groups.size());
            if (fresh) { groups.emplace_back(); }
            groups[pos->second].push_back(i);
        }
        return cache.emplace(size, std::move(groups)).first->second;
    }

    auto Combine(SymbolTable const& table, std::vector<std::vector<Candidate>> const& bySize, Shape const& s,
                 std::size_t k) const -> std::optional<Candidate>
    {
        auto const& sym = table[s.op];
        Candidate out;
        out.rootOp = sym.op.kind;
        out.rootIsFunction = true;
        out.seq.push_back(s.op);
        if (sym.Arity() == 1) {
            auto const& child = bySize[s.leftSize][k];
            if (Banned(sym.op.kind, child)) { return std::nullopt; }
            auto dim = ForwardApply(sym.op, child.dim);
            if (!dim) { return std::nullopt; }
            out.dim = *dim;
            out.seq.insert(out.seq.end(), child.seq.begin(), child.seq.end());
            return out;
        }
        auto const& lefts = bySize[s.leftSize];
        auto const& rights = bySize[s.rightSize];
        auto const& l = lefts[k / rights.size()];
        auto const& r = rights[k % rights.size()];
        auto dim = ForwardApply(sym.op, l.dim, r.dim);
        if (!dim) { return std::nullopt; }
        out.dim = *dim;
        out.seq.insert(out.seq.end(), l.seq.begin(), l.seq.end());
        out.seq.insert(out.seq.end(), r.seq.begin(), r.seq.end());
        return out;
    }

    LibraryConfig config_;
    std::string signature_;
    std::unordered_map<DimensionVector, SizeClasses> entries_;
};

} // namespace gepsbp

#endif
