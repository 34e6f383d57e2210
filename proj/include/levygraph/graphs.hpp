#pragma once

// Generalized amputated Feynman graphs stored as (K, I) pairs over the leg
// labels Omega(p_1..p_m): K holds the legs wired to outer empty vertices and I
// partitions the remaining legs into inner empty vertices.

#include "levygraph/combinatorics.hpp"
#include "levygraph/core_model.hpp"

#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace levygraph {

inline constexpr int kCanonicalVertexCap = 16;

class FeynmanGraph {
public:
    FeynmanGraph() = default;

    /// `block_of[leg]` (vertex-major leg order) is the block index of a leg, or
    /// -1 when the leg belongs to K. Block indices must be numbered by first
    /// occurrence.
    FeynmanGraph(std::vector<int> leg_counts, std::vector<int> block_of, int num_blocks)
        : leg_counts_(std::move(leg_counts)), block_of_(std::move(block_of)), num_blocks_(num_blocks) {
        int total = 0;
        for (int p : leg_counts_) {
            if (p < 0) fail(ErrorCategory::MalformedPartition, "negative leg count");
            total += p;
        }
        if (static_cast<int>(block_of_.size()) != total) fail(ErrorCategory::MalformedPartition, "block assignment size differs from leg total");
        int next = 0;
        for (int b : block_of_) {
            if (b < -1 || b > next) fail(ErrorCategory::MalformedPartition, "block indices must follow first occurrence");
            if (b == next) ++next;
        }
        if (next != num_blocks_) fail(ErrorCategory::MalformedPartition, "block count mismatch");
        refresh_connected();
    }

    /// Direction (K, I) -> graph.
    static FeynmanGraph from_pair(std::span<const int> leg_counts, const LabelSet& K, const Partition& I) {
        const LabelSet all = omega(leg_counts);
        std::vector<int> offset(leg_counts.size() + 1, 0);
        for (std::size_t v = 0; v < leg_counts.size(); ++v) offset[v + 1] = offset[v] + leg_counts[v];
        auto flat = [&](const Leg& l) {
            if (l.vertex < 0 || l.vertex >= static_cast<int>(leg_counts.size()) || l.slot < 0 || l.slot >= leg_counts[l.vertex])
                fail(ErrorCategory::MalformedPartition, "leg outside Omega");
            return offset[l.vertex] + l.slot;
        };
        std::vector<int> raw(all.size(), -2);
        for (const Leg& l : K) {
            int& slot = raw[flat(l)];
            if (slot != -2) fail(ErrorCategory::MalformedPartition, "leg repeated in K");
            slot = -1;
        }
        for (std::size_t b = 0; b < I.blocks().size(); ++b)
            for (const Leg& l : I.blocks()[b]) {
                int& slot = raw[flat(l)];
                if (slot != -2) fail(ErrorCategory::MalformedPartition, "K and the blocks of I overlap");
                slot = static_cast<int>(b);
            }
        for (int s : raw)
            if (s == -2) fail(ErrorCategory::MalformedPartition, "K and I do not cover Omega");
        // Renumber by first occurrence.
        std::vector<int> relabel(I.blocks().size(), -1);
        int next = 0;
        for (int& s : raw) {
            if (s < 0) continue;
            if (relabel[s] < 0) relabel[s] = next++;
            s = relabel[s];
        }
        return FeynmanGraph(std::vector<int>(leg_counts.begin(), leg_counts.end()), std::move(raw), next);
    }

    int order() const noexcept { return static_cast<int>(leg_counts_.size()); }
    const std::vector<int>& leg_counts() const noexcept { return leg_counts_; }
    const std::vector<int>& block_of() const noexcept { return block_of_; }
    int num_blocks() const noexcept { return num_blocks_; }
    int num_legs() const noexcept { return static_cast<int>(block_of_.size()); }
    int num_outer() const noexcept {
        return static_cast<int>(std::count(block_of_.begin(), block_of_.end(), -1));
    }
    bool connected() const noexcept { return connected_; }

    std::vector<int> block_sizes() const {
        std::vector<int> s(static_cast<std::size_t>(num_blocks_), 0);
        for (int b : block_of_)
            if (b >= 0) ++s[b];
        return s;
    }

    LabelSet K() const {
        LabelSet out;
        const LabelSet all = omega(leg_counts_);
        for (std::size_t i = 0; i < all.size(); ++i)
            if (block_of_[i] < 0) out.push_back(all[i]);
        return out;
    }

    Partition I() const {
        const LabelSet all = omega(leg_counts_);
        std::vector<LabelSet> blocks(static_cast<std::size_t>(num_blocks_));
        LabelSet ground;
        for (std::size_t i = 0; i < all.size(); ++i)
            if (block_of_[i] >= 0) {
                blocks[block_of_[i]].push_back(all[i]);
                ground.push_back(all[i]);
            }
        return Partition(std::move(blocks), ground);
    }

    friend bool operator==(const FeynmanGraph& a, const FeynmanGraph& b) {
        return a.leg_counts_ == b.leg_counts_ && a.block_of_ == b.block_of_;
    }

    // In-place mutation for the enumerators, which reuse one object.
    void assign_unchecked(const std::vector<int>& leg_counts, const std::vector<int>& block_of, int num_blocks) {
        leg_counts_ = leg_counts;
        block_of_ = block_of;
        num_blocks_ = num_blocks;
        refresh_connected();
    }

private:
    void refresh_connected() { connected_ = is_connected_blocks(leg_counts_, block_of_, num_blocks_); }

    std::vector<int> leg_counts_;
    std::vector<int> block_of_;
    int num_blocks_ = 0;
    bool connected_ = false;
};

inline bool is_connected(const FeynmanGraph& g) { return g.connected(); }

/// Vertex/edge form of a graph: full vertices 0..m-1, inner empty vertices
/// 0..num_inner-1, outer empty vertices 0..num_outer-1. One edge per leg.
struct ExplicitGraph {
    struct Edge {
        Leg leg;
        bool outer = false;
        int target = 0;
        friend bool operator==(const Edge&, const Edge&) = default;
    };
    std::vector<int> leg_counts;
    int num_inner = 0;
    int num_outer = 0;
    std::vector<Edge> edges;
    friend bool operator==(const ExplicitGraph&, const ExplicitGraph&) = default;
};

inline ExplicitGraph pair_to_graph(std::span<const int> leg_counts, const LabelSet& K, const Partition& I) {
    const FeynmanGraph g = FeynmanGraph::from_pair(leg_counts, K, I);
    ExplicitGraph out;
    out.leg_counts.assign(leg_counts.begin(), leg_counts.end());
    out.num_inner = g.num_blocks();
    const LabelSet all = omega(leg_counts);
    for (std::size_t i = 0; i < all.size(); ++i) {
        ExplicitGraph::Edge e;
        e.leg = all[i];
        if (g.block_of()[i] < 0) {
            e.outer = true;
            e.target = out.num_outer++;
        } else {
            e.target = g.block_of()[i];
        }
        out.edges.push_back(e);
    }
    return out;
}

inline std::pair<LabelSet, Partition> graph_to_pair(const ExplicitGraph& g) {
    LabelSet K;
    LabelSet ground;
    std::vector<LabelSet> blocks(static_cast<std::size_t>(g.num_inner));
    std::vector<int> outer_hits(static_cast<std::size_t>(g.num_outer), 0);
    for (const auto& e : g.edges) {
        if (e.outer) {
            if (e.target < 0 || e.target >= g.num_outer) fail(ErrorCategory::MalformedPartition, "outer vertex out of range");
            ++outer_hits[e.target];
            K.push_back(e.leg);
        } else {
            if (e.target < 0 || e.target >= g.num_inner) fail(ErrorCategory::MalformedPartition, "inner vertex out of range");
            blocks[e.target].push_back(e.leg);
            ground.push_back(e.leg);
        }
    }
    for (int h : outer_hits)
        if (h != 1) fail(ErrorCategory::MalformedPartition, "outer empty vertex must be hit by exactly one edge");
    std::sort(K.begin(), K.end());
    return {std::move(K), Partition(std::move(blocks), ground)};
}

inline ExplicitGraph pair_to_graph(const FeynmanGraph& g) {
    return pair_to_graph(g.leg_counts(), g.K(), g.I());
}

/// Filter applied during enumeration. Block sizes n with
/// vanishing_block_order[n] set are skipped (their C^(n) is identically zero).
struct GraphFilter {
    std::vector<bool> vanishing_block_order;
    bool connected_only = false;

    bool block_vanishes(int n) const {
        return n < static_cast<int>(vanishing_block_order.size()) && vanishing_block_order[n];
    }
};

/// Marks the orders 1..max_order whose symbol coefficient is identically zero.
inline GraphFilter prune_vanishing(const OperatorSymbol& sym) {
    GraphFilter f;
    f.vanishing_block_order.assign(static_cast<std::size_t>(sym.max_order()) + 1, false);
    for (int n = 1; n <= sym.max_order(); ++n) f.vanishing_block_order[n] = sym.vanishes(n);
    return f;
}

namespace detail {

/// Calls f(p) for every ordered tuple p in degrees^m (mixed radix, first
/// component slowest).
template <typename F>
void for_each_degree_tuple(int m, const std::vector<int>& degrees, F&& f) {
    std::vector<int> p(static_cast<std::size_t>(m));
    if (m == 0) {
        f(std::as_const(p));
        return;
    }
    if (degrees.empty()) return;
    std::vector<std::size_t> digit(static_cast<std::size_t>(m), 0);
    while (true) {
        for (int j = 0; j < m; ++j) p[j] = degrees[digit[j]];
        f(std::as_const(p));
        int j = m - 1;
        while (j >= 0 && ++digit[j] == degrees.size()) digit[j--] = 0;
        if (j < 0) return;
    }
}

} // namespace detail

/// Streams every element of F-bar(m) for the given potential: all ordered
/// leg-count tuples with lambda^(p_j) != 0, every K and every partition I of
/// the remaining legs. The callback receives a graph object that is reused.
template <typename F>
void enumerate_graphs(int m, const Potential& pot, const GraphFilter& filter, F&& f) {
    if (m < 0) fail(ErrorCategory::InvalidArgument, "graph order must be >= 0");
    const std::vector<int> degrees = pot.active_degrees();
    FeynmanGraph g;
    std::vector<int> block_of;
    std::vector<int> rest;
    std::vector<int> sizes;
    detail::for_each_degree_tuple(m, degrees, [&](const std::vector<int>& p) {
        const int L = std::accumulate(p.begin(), p.end(), 0);
        if (L > kSubsetCap) fail(ErrorCategory::CapExceeded, "leg total " + std::to_string(L) + " exceeds subset cap");
        block_of.assign(static_cast<std::size_t>(L), -1);
        for_each_subset(L, [&](std::uint64_t mask) {
            rest.clear();
            for (int i = 0; i < L; ++i)
                if (!(mask & (std::uint64_t{1} << i))) rest.push_back(i);
            const int n = static_cast<int>(rest.size());
            for_each_set_partition(n, [&](const std::vector<int>& rgs, int k) {
                if (!filter.vanishing_block_order.empty()) {
                    sizes.assign(static_cast<std::size_t>(k), 0);
                    for (int r : rgs) ++sizes[r];
                    for (int s : sizes)
                        if (filter.block_vanishes(s)) return;
                }
                for (int i = 0; i < L; ++i) block_of[i] = -1;
                for (int i = 0; i < n; ++i) block_of[rest[i]] = rgs[i];
                g.assign_unchecked(p, block_of, k);
                if (filter.connected_only && !g.connected()) return;
                f(std::as_const(g));
            });
        });
    });
}

inline std::vector<FeynmanGraph> collect_graphs(int m, const Potential& pot, const GraphFilter& filter = {}) {
    std::vector<FeynmanGraph> out;
    enumerate_graphs(m, pot, filter, [&](const FeynmanGraph& g) { out.push_back(g); });
    return out;
}

/// Leg-count data of a graph up to leg relabelling: per full vertex j the leg
/// count p_j and the number k_j of its legs in K, plus one row per inner empty
/// vertex counting how many of its legs sit on each full vertex.
struct CountStructure {
    std::vector<int> p;
    std::vector<int> k;
    std::vector<std::vector<int>> rows;
    friend bool operator==(const CountStructure&, const CountStructure&) = default;
};

inline CountStructure count_structure(const FeynmanGraph& g) {
    CountStructure cs;
    const int m = g.order();
    cs.p = g.leg_counts();
    cs.k.assign(static_cast<std::size_t>(m), 0);
    cs.rows.assign(static_cast<std::size_t>(g.num_blocks()), std::vector<int>(static_cast<std::size_t>(m), 0));
    std::size_t leg = 0;
    for (int v = 0; v < m; ++v)
        for (int s = 0; s < cs.p[v]; ++s, ++leg) {
            const int b = g.block_of()[leg];
            if (b < 0)
                ++cs.k[v];
            else
                ++cs.rows[b][v];
        }
    return cs;
}

/// A raw graph realising the count structure (K legs first on each vertex,
/// then the legs of each row in row order).
inline FeynmanGraph representative(const CountStructure& cs) {
    const int m = static_cast<int>(cs.p.size());
    std::vector<int> block_of;
    for (int v = 0; v < m; ++v) {
        for (int i = 0; i < cs.k[v]; ++i) block_of.push_back(-1);
        for (std::size_t b = 0; b < cs.rows.size(); ++b)
            for (int i = 0; i < cs.rows[b][v]; ++i) block_of.push_back(static_cast<int>(b));
    }
    // Renumber by first occurrence.
    std::vector<int> relabel(cs.rows.size(), -1);
    int next = 0;
    for (int& b : block_of) {
        if (b < 0) continue;
        if (relabel[b] < 0) relabel[b] = next++;
        b = relabel[b];
    }
    return FeynmanGraph(cs.p, std::move(block_of), next);
}

inline bool is_connected(const CountStructure& cs) {
    const int m = static_cast<int>(cs.p.size());
    if (m == 0) return false;
    detail::UnionFind uf(m);
    for (const auto& row : cs.rows) {
        int first = -1;
        for (int v = 0; v < m; ++v)
            if (row[v] > 0) {
                if (first < 0)
                    first = v;
                else
                    uf.unite(first, v);
            }
    }
    for (int v = 1; v < m; ++v)
        if (uf.find(v) != uf.find(0)) return false;
    return true;
}

/// Number of raw (K, I) pairs with exactly this ordered count structure:
/// prod_j p_j! / (k_j! prod_b c_bj!) divided by (count of each repeated row)!.
inline std::uint64_t raw_count(const CountStructure& cs) {
    unsigned __int128 r = 1;
    const int m = static_cast<int>(cs.p.size());
    for (int v = 0; v < m; ++v) {
        // Multinomial p_v! / (k_v! prod_b c_bv!) built as a product of binomials.
        int used = 0;
        auto mul_binom = [&](int take) {
            for (int i = 1; i <= take; ++i) r = r * static_cast<unsigned>(used + i) / static_cast<unsigned>(i);
            used += take;
        };
        mul_binom(cs.k[v]);
        for (const auto& row : cs.rows) mul_binom(row[v]);
    }
    std::vector<std::vector<int>> rows = cs.rows;
    std::sort(rows.begin(), rows.end());
    std::size_t i = 0;
    while (i < rows.size()) {
        std::size_t j = i;
        while (j < rows.size() && rows[j] == rows[i]) ++j;
        for (std::size_t q = 2; q <= j - i; ++q) r /= q;
        i = j;
    }
    if (r > std::numeric_limits<std::uint64_t>::max()) fail(ErrorCategory::CapExceeded, "multiplicity overflow");
    return static_cast<std::uint64_t>(r);
}

namespace detail {

inline std::vector<int> serialize_permuted(const CountStructure& cs, const std::vector<int>& order) {
    const std::size_t m = order.size();
    std::vector<std::vector<int>> rows(cs.rows.size(), std::vector<int>(m));
    for (std::size_t b = 0; b < cs.rows.size(); ++b)
        for (std::size_t c = 0; c < m; ++c) rows[b][c] = cs.rows[b][order[c]];
    std::sort(rows.begin(), rows.end(), std::greater<>());
    std::vector<int> out;
    out.reserve(2 + 2 * m + rows.size() * m);
    out.push_back(static_cast<int>(m));
    for (std::size_t c = 0; c < m; ++c) {
        out.push_back(cs.p[order[c]]);
        out.push_back(cs.k[order[c]]);
    }
    out.push_back(static_cast<int>(rows.size()));
    for (const auto& r : rows) out.insert(out.end(), r.begin(), r.end());
    return out;
}

inline std::string to_hex(const std::vector<int>& v) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(2 * v.size());
    for (int x : v) {
        if (x < 0 || x > 255) fail(ErrorCategory::CapExceeded, "canonical key entry exceeds one byte");
        s.push_back(digits[(x >> 4) & 0xF]);
        s.push_back(digits[x & 0xF]);
    }
    return s;
}

} // namespace detail

/// Canonical key, invariant under relabelling inner and outer empty vertices,
/// legs within a full vertex, and full vertices. Columns are sorted by a
/// permutation invariant; the lexicographic minimum is taken by brute force
/// over permutations inside each group of equal invariants.
inline std::string canonical_key(const CountStructure& cs) {
    const int m = static_cast<int>(cs.p.size());
    const int total_vertices = m + static_cast<int>(cs.rows.size()) +
                               std::accumulate(cs.k.begin(), cs.k.end(), 0);
    if (m > kCanonicalVertexCap || total_vertices > 4 * kCanonicalVertexCap)
        fail(ErrorCategory::CapExceeded, "graph too large for brute-force canonical labelling");
    using Inv = std::tuple<int, int, std::vector<int>>;
    std::vector<Inv> inv(static_cast<std::size_t>(m));
    for (int v = 0; v < m; ++v) {
        std::vector<int> col;
        for (const auto& row : cs.rows) col.push_back(row[v]);
        std::sort(col.begin(), col.end(), std::greater<>());
        inv[v] = {cs.p[v], cs.k[v], std::move(col)};
    }
    std::vector<int> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return inv[a] < inv[b]; });
    std::vector<std::pair<int, int>> groups;
    for (int i = 0; i < m;) {
        int j = i;
        while (j < m && inv[order[j]] == inv[order[i]]) ++j;
        if (j - i > 1) groups.emplace_back(i, j);
        i = j;
    }
    std::vector<int> best = detail::serialize_permuted(cs, order);
    // Odometer over the per-group permutations.
    std::function<void(std::size_t)> rec = [&](std::size_t gi) {
        if (gi == groups.size()) {
            auto s = detail::serialize_permuted(cs, order);
            if (s < best) best = std::move(s);
            return;
        }
        auto [lo, hi] = groups[gi];
        std::sort(order.begin() + lo, order.begin() + hi);
        do {
            rec(gi + 1);
        } while (std::next_permutation(order.begin() + lo, order.begin() + hi));
    };
    rec(0);
    return detail::to_hex(best);
}

inline std::string canonicalize(const FeynmanGraph& g) {
    const int total = g.order() + g.num_blocks() + g.num_outer();
    if (total > kCanonicalVertexCap)
        fail(ErrorCategory::CapExceeded, "graph has " + std::to_string(total) + " vertices, canonical labelling cap is " +
                                             std::to_string(kCanonicalVertexCap));
    return canonical_key(count_structure(g));
}

struct TopoClass {
    std::string canonical_key;
    std::uint64_t multiplicity = 0;
    FeynmanGraph representative;
    bool connected = false;
};

/// Topological classes of F-bar(m) by grouping the raw enumeration. Sorted by
/// key. Classes are merged associatively, so per-worker maps can be combined.
inline std::vector<TopoClass> topo_classes_by_grouping(int m, const Potential& pot, const GraphFilter& filter = {}) {
    std::map<std::string, TopoClass> acc;
    enumerate_graphs(m, pot, filter, [&](const FeynmanGraph& g) {
        std::string key = canonical_key(count_structure(g));
        auto [it, inserted] = acc.try_emplace(key);
        if (inserted) {
            it->second.canonical_key = key;
            it->second.representative = g;
            it->second.connected = g.connected();
        }
        ++it->second.multiplicity;
    });
    std::vector<TopoClass> out;
    for (auto& [k, c] : acc) out.push_back(std::move(c));
    return out;
}

namespace detail {

// Multisets of non-zero rows (each <= the residual componentwise) summing to
// `residual`, emitted with rows in non-increasing lexicographic order.
template <typename F>
void for_each_row_multiset(std::vector<int>& residual, std::vector<std::vector<int>>& rows, const GraphFilter& filter, F&& f) {
    const int m = static_cast<int>(residual.size());
    if (std::all_of(residual.begin(), residual.end(), [](int x) { return x == 0; })) {
        f(std::as_const(rows));
        return;
    }
    // Candidate rows: every vector 0 <= c <= residual, c != 0, c <= previous row.
    std::vector<int> c(static_cast<std::size_t>(m), 0);
    // Bound the search: the first non-zero residual column must be covered by
    // some row; the largest remaining row in lex order is the next one, so
    // requiring c to touch the first non-zero residual column is complete.
    int first = 0;
    while (residual[first] == 0) ++first;
    std::function<void(int)> rec = [&](int col) {
        if (col == m) {
            if (c[first] == 0) return;
            if (!rows.empty() && c > rows.back()) return;
            const int size = std::accumulate(c.begin(), c.end(), 0);
            if (filter.block_vanishes(size)) return;
            for (int v = 0; v < m; ++v) residual[v] -= c[v];
            rows.push_back(c);
            for_each_row_multiset(residual, rows, filter, f);
            rows.pop_back();
            for (int v = 0; v < m; ++v) residual[v] += c[v];
            return;
        }
        for (int x = residual[col]; x >= 0; --x) {
            c[col] = x;
            rec(col + 1);
        }
        c[col] = 0;
    };
    rec(0);
}

} // namespace detail

/// Streams every ordered count structure of F-bar(m) together with the number
/// of raw graphs it stands for. Summing value x weight reproduces the raw sum.
template <typename F>
void for_each_count_structure(int m, const Potential& pot, const GraphFilter& filter, F&& f) {
    const std::vector<int> degrees = pot.active_degrees();
    detail::for_each_degree_tuple(m, degrees, [&](const std::vector<int>& p) {
        CountStructure cs;
        cs.p = p;
        cs.k.assign(static_cast<std::size_t>(m), 0);
        // Odometer over k_j in [0, p_j].
        while (true) {
            std::vector<int> residual(static_cast<std::size_t>(m));
            for (int v = 0; v < m; ++v) residual[v] = p[v] - cs.k[v];
            std::vector<std::vector<int>> rows;
            detail::for_each_row_multiset(residual, rows, filter, [&](const std::vector<std::vector<int>>& r) {
                cs.rows = r;
                if (filter.connected_only && !is_connected(cs)) return;
                f(std::as_const(cs), raw_count(cs));
            });
            int j = m - 1;
            while (j >= 0 && ++cs.k[j] > p[j]) cs.k[j--] = 0;
            if (j < 0) break;
        }
    });
}

/// Topological classes built directly from count structures with the
/// multiplicity formula (no raw enumeration). Sorted by key.
inline std::vector<TopoClass> topo_classes(int m, const Potential& pot, const GraphFilter& filter = {}) {
    std::map<std::string, TopoClass> acc;
    for_each_count_structure(m, pot, filter, [&](const CountStructure& cs, std::uint64_t w) {
        std::string key = canonical_key(cs);
        auto [it, inserted] = acc.try_emplace(key);
        if (inserted) {
            it->second.canonical_key = key;
            it->second.representative = representative(cs);
            it->second.connected = is_connected(cs);
        }
        it->second.multiplicity += w;
    });
    std::vector<TopoClass> out;
    for (auto& [k, c] : acc) out.push_back(std::move(c));
    return out;
}

/// One line of the debug dump:
/// p=(p1,..,pm) K={(s,q),..} I=[{(s,q),..},..] connected=0|1 key=<hex>
/// with 1-based leg labels (s = leg, q = vertex).
inline std::string dump_line(const FeynmanGraph& g) {
    std::ostringstream os;
    auto leg = [&](const Leg& l) { os << '(' << l.slot + 1 << ',' << l.vertex + 1 << ')'; };
    os << "p=(";
    for (int j = 0; j < g.order(); ++j) os << (j ? "," : "") << g.leg_counts()[j];
    os << ") K={";
    const LabelSet K = g.K();
    for (std::size_t i = 0; i < K.size(); ++i) {
        if (i) os << ',';
        leg(K[i]);
    }
    os << "} I=[";
    const Partition I = g.I();
    for (std::size_t b = 0; b < I.size(); ++b) {
        os << (b ? ",{" : "{");
        for (std::size_t i = 0; i < I.blocks()[b].size(); ++i) {
            if (i) os << ',';
            leg(I.blocks()[b][i]);
        }
        os << '}';
    }
    os << "] connected=" << (g.connected() ? 1 : 0) << " key=" << canonical_key(count_structure(g));
    return os.str();
}

/// Graph of the quadratic specialization: m directed edges between inner
/// empty vertices 0..num_inner-1 and outer empty vertices
/// num_inner..num_inner+num_outer-1; every outer vertex is hit exactly once.
struct QuadGraph {
    int num_inner = 0;
    int num_outer = 0;
    std::vector<std::pair<int, int>> edges;
    friend bool operator==(const QuadGraph&, const QuadGraph&) = default;

    int order() const noexcept { return static_cast<int>(edges.size()); }
    bool is_outer(int vertex) const noexcept { return vertex >= num_inner; }
};

/// Edge j runs from the endpoint of leg 1 of full vertex j to the endpoint of leg 2.
inline QuadGraph to_quad_graph(const FeynmanGraph& g) {
    for (int p : g.leg_counts())
        if (p != 2) fail(ErrorCategory::InvalidArgument, "quadratic graphs need p_j = 2 for all vertices");
    QuadGraph q;
    q.num_inner = g.num_blocks();
    int outer = 0;
    std::vector<int> end(static_cast<std::size_t>(g.num_legs()));
    for (int i = 0; i < g.num_legs(); ++i) end[i] = g.block_of()[i] >= 0 ? g.block_of()[i] : g.num_blocks() + outer++;
    q.num_outer = outer;
    for (int j = 0; j < g.order(); ++j) q.edges.emplace_back(end[2 * j], end[2 * j + 1]);
    return q;
}

inline FeynmanGraph from_quad_graph(const QuadGraph& q) {
    std::vector<int> block_of;
    std::vector<int> outer_hits(static_cast<std::size_t>(q.num_outer), 0);
    int outer_seen = 0;
    for (const auto& [a, b] : q.edges)
        for (int x : {a, b}) {
            if (x < 0 || x >= q.num_inner + q.num_outer) fail(ErrorCategory::MalformedPartition, "edge endpoint out of range");
            if (x >= q.num_inner) {
                if (x - q.num_inner != outer_seen) fail(ErrorCategory::MalformedPartition, "outer vertices must be numbered in edge order");
                ++outer_hits[x - q.num_inner];
                ++outer_seen;
                block_of.push_back(-1);
            } else {
                block_of.push_back(x);
            }
        }
    for (int h : outer_hits)
        if (h != 1) fail(ErrorCategory::MalformedPartition, "outer empty vertex must be hit exactly once");
    return FeynmanGraph(std::vector<int>(q.edges.size(), 2), std::move(block_of), q.num_inner);
}

/// Streams Q-bar(m): one graph per (K, I) pair on 2m legs.
template <typename F>
void enumerate_quad_graphs(int m, F&& f, const GraphFilter& filter = {}) {
    if (2 * m > kSubsetCap) fail(ErrorCategory::CapExceeded, "quadratic graph order beyond cap");
    const Potential quad = Potential::isotropic_quadratic(1);
    enumerate_graphs(m, quad, filter, [&](const FeynmanGraph& g) { f(to_quad_graph(g)); });
}

inline std::vector<QuadGraph> collect_quad_graphs(int m, const GraphFilter& filter = {}) {
    std::vector<QuadGraph> out;
    enumerate_quad_graphs(m, [&](const QuadGraph& q) { out.push_back(q); }, filter);
    return out;
}

} // namespace levygraph
