#pragma once

// Subsets, set partitions, Bell numbers, the h_q block-shape count and the
// connectedness predicate on (K, I) pairs. Labels are 0-based internally.

#include "levygraph/errors.hpp"

#include <algorithm>
#include <cmath>
#include <compare>
#include <iterator>
#include <limits>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace levygraph {

inline constexpr int kSubsetCap = 24;
inline constexpr int kPartitionCap = 14;
inline constexpr int kBellCap = 25;

/// Leg `slot` of full vertex `vertex`.
struct Leg {
    int slot = 0;
    int vertex = 0;
    friend auto operator<=>(const Leg& a, const Leg& b) {
        if (auto c = a.vertex <=> b.vertex; c != 0) return c;
        return a.slot <=> b.slot;
    }
    friend bool operator==(const Leg&, const Leg&) = default;
};

using LabelSet = std::vector<Leg>;

/// Omega(p_1..p_m) in vertex-major order.
inline LabelSet omega(std::span<const int> leg_counts) {
    LabelSet out;
    for (int v = 0; v < static_cast<int>(leg_counts.size()); ++v)
        for (int s = 0; s < leg_counts[v]; ++s) out.push_back({s, v});
    return out;
}

/// Set partition of a ground set into non-empty blocks. Blocks are kept sorted
/// internally and ordered by their least element.
class Partition {
public:
    Partition() = default;

    Partition(std::vector<LabelSet> blocks, const LabelSet& ground) : blocks_(std::move(blocks)) {
        LabelSet seen;
        for (auto& b : blocks_) {
            if (b.empty()) fail(ErrorCategory::MalformedPartition, "empty block");
            std::sort(b.begin(), b.end());
            seen.insert(seen.end(), b.begin(), b.end());
        }
        std::sort(seen.begin(), seen.end());
        if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
            fail(ErrorCategory::MalformedPartition, "blocks overlap");
        LabelSet g = ground;
        std::sort(g.begin(), g.end());
        if (seen != g) fail(ErrorCategory::MalformedPartition, "blocks do not cover the ground set");
        std::sort(blocks_.begin(), blocks_.end(), [](const LabelSet& a, const LabelSet& b) { return a.front() < b.front(); });
    }

    const std::vector<LabelSet>& blocks() const noexcept { return blocks_; }
    std::size_t size() const noexcept { return blocks_.size(); }

    friend bool operator==(const Partition&, const Partition&) = default;

private:
    std::vector<LabelSet> blocks_;
};

/// Visits every subset of {0..n-1} as a bit mask, in binary counting order.
template <typename F>
void for_each_subset(int n, F&& f, int cap = kSubsetCap) {
    if (n < 0) fail(ErrorCategory::InvalidArgument, "negative ground size");
    if (n > cap || n > 62) fail(ErrorCategory::CapExceeded, "subset enumeration of " + std::to_string(n) + " labels exceeds cap " + std::to_string(cap));
    const std::uint64_t end = std::uint64_t{1} << n;
    for (std::uint64_t mask = 0; mask < end; ++mask) f(mask);
}

/// Visits every set partition of {0..n-1} as a restricted growth string
/// (rgs[i] = block of element i, blocks numbered by first occurrence) together
/// with the block count, in lexicographic RGS order. n = 0 yields one empty
/// partition.
template <typename F>
void for_each_set_partition(int n, F&& f, int cap = kPartitionCap) {
    if (n < 0) fail(ErrorCategory::InvalidArgument, "negative ground size");
    if (n > cap) fail(ErrorCategory::CapExceeded, "partition enumeration of " + std::to_string(n) + " labels exceeds cap " + std::to_string(cap));
    std::vector<int> rgs(static_cast<std::size_t>(n), 0);
    if (n == 0) {
        f(std::as_const(rgs), 0);
        return;
    }
    // prefix_max[i] = max(rgs[0..i]).
    std::vector<int> prefix_max(static_cast<std::size_t>(n), 0);
    while (true) {
        f(std::as_const(rgs), prefix_max[n - 1] + 1);
        int i = n - 1;
        while (i > 0 && rgs[i] > prefix_max[i - 1]) --i;
        if (i == 0) return;
        ++rgs[i];
        prefix_max[i] = std::max(prefix_max[i - 1], rgs[i]);
        for (int j = i + 1; j < n; ++j) {
            rgs[j] = 0;
            prefix_max[j] = prefix_max[i];
        }
    }
}

inline std::vector<LabelSet> enumerate_subsets(const LabelSet& ground, int cap = kSubsetCap) {
    std::vector<LabelSet> out;
    const int n = static_cast<int>(ground.size());
    for_each_subset(
        n,
        [&](std::uint64_t mask) {
            LabelSet s;
            for (int i = 0; i < n; ++i)
                if (mask & (std::uint64_t{1} << i)) s.push_back(ground[i]);
            out.push_back(std::move(s));
        },
        cap);
    return out;
}

inline std::vector<Partition> enumerate_partitions(const LabelSet& ground, int cap = kPartitionCap) {
    std::vector<Partition> out;
    const int n = static_cast<int>(ground.size());
    for_each_set_partition(
        n,
        [&](const std::vector<int>& rgs, int k) {
            std::vector<LabelSet> blocks(static_cast<std::size_t>(k));
            for (int i = 0; i < n; ++i) blocks[rgs[i]].push_back(ground[i]);
            out.emplace_back(std::move(blocks), ground);
        },
        cap);
    return out;
}

/// Bell number b_m from the Bell triangle; exact for m <= 25.
inline std::uint64_t bell_number(int m) {
    if (m < 0) fail(ErrorCategory::InvalidArgument, "bell_number needs m >= 0");
    if (m > kBellCap) fail(ErrorCategory::CapExceeded, "bell_number beyond exact 64-bit range (m <= 25)");
    std::vector<std::uint64_t> row{1};
    for (int i = 1; i <= m; ++i) {
        std::vector<std::uint64_t> next{row.back()};
        for (std::uint64_t v : row) next.push_back(next.back() + v);
        row = std::move(next);
    }
    return row.front();
}

/// Solution of lambda * ln(lambda) = m by Newton iteration (m > 0).
inline double bell_lambda(double m) {
    if (!(m > 0.0)) fail(ErrorCategory::InvalidArgument, "bell_lambda needs m > 0");
    double x = std::max(1.5, m / std::log(m + 1.0) + 1.0);
    for (int it = 0; it < 200; ++it) {
        const double g = x * std::log(x) - m;
        const double step = g / (std::log(x) + 1.0);
        double nx = x - step;
        if (nx <= 1.0) nx = 0.5 * (x + 1.0);
        if (std::abs(nx - x) <= 1e-15 * std::max(1.0, std::abs(x))) return nx;
        x = nx;
    }
    return x;
}

/// b_m ~ m^{-1/2} lambda^{m+1/2} e^{lambda - m - 1}.
inline double bell_asymptotic(int m) {
    if (m < 1) fail(ErrorCategory::InvalidArgument, "bell_asymptotic needs m >= 1");
    const double lam = bell_lambda(m);
    return std::exp(-0.5 * std::log(m) + (m + 0.5) * std::log(lam) + lam - m - 1.0);
}

/// Number of partitions of l_1 + ... + l_q objects whose blocks have exactly the
/// sizes l_1..l_q: multinomial(l) / prod over distinct sizes of (multiplicity)!.
inline std::uint64_t h_factor(std::span<const int> sizes) {
    if (sizes.empty()) fail(ErrorCategory::InvalidArgument, "h_factor needs at least one block size");
    std::vector<int> l(sizes.begin(), sizes.end());
    std::sort(l.begin(), l.end());
    if (l.front() < 1) fail(ErrorCategory::InvalidArgument, "block sizes must be positive");
    unsigned __int128 r = 1;
    int total = 0;
    for (int li : l) {
        // r *= C(total + li, li), kept exact by incremental division.
        for (int i = 1; i <= li; ++i) r = r * static_cast<unsigned>(total + i) / static_cast<unsigned>(i);
        total += li;
    }
    std::size_t i = 0;
    while (i < l.size()) {
        std::size_t j = i;
        while (j < l.size() && l[j] == l[i]) ++j;
        for (std::size_t k = 2; k <= j - i; ++k) r /= k;
        i = j;
    }
    if (r > std::numeric_limits<std::uint64_t>::max()) fail(ErrorCategory::CapExceeded, "h_factor overflow");
    return static_cast<std::uint64_t>(r);
}

namespace detail {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

} // namespace detail

/// Connectedness of the bipartite graph whose nodes are the m full vertices
/// and the blocks of I (edge when a block contains a leg of the vertex).
/// `block_of[leg]` is the block index of each leg in vertex-major order, or -1
/// for legs in K. The empty graph (m = 0) is not connected.
inline bool is_connected_blocks(std::span<const int> leg_counts, std::span<const int> block_of, int num_blocks) {
    const int m = static_cast<int>(leg_counts.size());
    if (m == 0) return false;
    if (m == 1) return true;
    detail::UnionFind uf(m + num_blocks);
    std::size_t leg = 0;
    for (int v = 0; v < m; ++v)
        for (int s = 0; s < leg_counts[v]; ++s, ++leg)
            if (block_of[leg] >= 0) uf.unite(v, m + block_of[leg]);
    const int root = uf.find(0);
    for (int v = 1; v < m; ++v)
        if (uf.find(v) != root) return false;
    return true;
}

inline bool is_connected_pair(std::span<const int> leg_counts, const LabelSet& K, const Partition& I) {
    const LabelSet all = omega(leg_counts);
    LabelSet rest;
    LabelSet ks = K;
    std::sort(ks.begin(), ks.end());
    if (std::adjacent_find(ks.begin(), ks.end()) != ks.end()) fail(ErrorCategory::MalformedPartition, "K has repeated legs");
    for (const Leg& l : ks)
        if (!std::binary_search(all.begin(), all.end(), l)) fail(ErrorCategory::MalformedPartition, "K contains a leg outside Omega");
    std::set_difference(all.begin(), all.end(), ks.begin(), ks.end(), std::back_inserter(rest));
    // Re-validate I against Omega \ K.
    Partition checked(I.blocks(), rest);
    std::vector<int> offset(leg_counts.size() + 1, 0);
    for (std::size_t v = 0; v < leg_counts.size(); ++v) offset[v + 1] = offset[v] + leg_counts[v];
    std::vector<int> block_of(all.size(), -1);
    for (std::size_t b = 0; b < checked.blocks().size(); ++b)
        for (const Leg& l : checked.blocks()[b]) block_of[offset[l.vertex] + l.slot] = static_cast<int>(b);
    return is_connected_blocks(leg_counts, block_of, static_cast<int>(checked.size()));
}

} // namespace levygraph
