#pragma once

// Feynman rules and series assembly. Every coefficient h_m stored in a
// BetaSeries already carries its (-1)^m / m! weight, so the series is a plain
// power series sum_m h_m beta^m.

#include "levygraph/combinatorics.hpp"
#include "levygraph/core_model.hpp"
#include "levygraph/graphs.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace levygraph {

enum class SeriesKind { phi, log_phi, large_diffusion, large_diffusion_log };

constexpr std::string_view kind_name(SeriesKind k) noexcept {
    switch (k) {
    case SeriesKind::phi: return "phi";
    case SeriesKind::log_phi: return "log_phi";
    case SeriesKind::large_diffusion: return "large_diffusion";
    case SeriesKind::large_diffusion_log: return "large_diffusion_log";
    }
    return "unknown";
}

constexpr bool is_log_kind(SeriesKind k) noexcept {
    return k == SeriesKind::log_phi || k == SeriesKind::large_diffusion_log;
}

struct BetaSeries {
    SeriesKind kind = SeriesKind::phi;
    double t = 1.0;
    std::vector<double> phi;
    std::vector<double> coeffs;

    int order() const noexcept { return static_cast<int>(coeffs.size()) - 1; }

    double partial_sum(double beta) const {
        double acc = 0.0;
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * beta + *it;
        return acc;
    }
};

enum class SeriesMethod { raw, topological };

/// t * C^(n) at the given index tuple (any order).
inline double truncated_moment(const OperatorSymbol& sym, double t, std::span<const int> indices) {
    if (indices.empty()) fail(ErrorCategory::InvalidArgument, "moment order must be >= 1");
    return t * sym.coeff(static_cast<int>(indices.size()))(indices);
}

/// Ordinary moment from truncated ones: sum over set partitions of the
/// positions of products of t * C over the blocks.
inline double moment(const OperatorSymbol& sym, double t, std::span<const int> indices) {
    const int n = static_cast<int>(indices.size());
    if (n == 0) fail(ErrorCategory::InvalidArgument, "moment order must be >= 1");
    if (n > sym.max_order())
        fail(ErrorCategory::SymbolOrderMissing, "moment of order " + std::to_string(n) + " needs C beyond truncation");
    double acc = 0.0;
    std::vector<std::vector<int>> blocks;
    for_each_set_partition(n, [&](const std::vector<int>& rgs, int k) {
        blocks.assign(static_cast<std::size_t>(k), {});
        for (int i = 0; i < n; ++i) blocks[rgs[i]].push_back(indices[i]);
        double prod = 1.0;
        for (const auto& b : blocks) prod *= truncated_moment(sym, t, b);
        acc += prod;
    });
    return acc;
}

namespace detail {

inline constexpr std::size_t kDenseCap = std::size_t{1} << 22;

/// Dense lookup tables shared by every graph of one series evaluation.
class EvalContext {
public:
    EvalContext(const OperatorSymbol& sym, const Potential& pot, const EvalPoint& point, bool drop_lambda = false)
        : d_(sym.dim()), t_(point.t) {
        if (pot.dim() != d_) fail(ErrorCategory::DimensionMismatch, "potential and symbol dimensions differ");
        if (static_cast<int>(point.phi.size()) != d_) fail(ErrorCategory::DimensionMismatch, "phi has wrong dimension");
        minus_phi_.resize(point.phi.size());
        for (std::size_t i = 0; i < point.phi.size(); ++i) minus_phi_[i] = -point.phi[i];
        tc_.resize(static_cast<std::size_t>(sym.max_order()) + 1);
        for (int n = 1; n <= sym.max_order(); ++n) {
            check_dense(n);
            tc_[n] = sym.coeff(n).dense();
            for (double& v : tc_[n]) v *= t_;
        }
        lam_.resize(static_cast<std::size_t>(pot.max_degree()) + 1);
        for (int p = 0; p <= pot.max_degree(); ++p) {
            if (pot.coeff(p).is_zero()) continue;
            check_dense(p);
            lam_[p] = pot.coeff(p).dense();
            if (drop_lambda)
                for (double& v : lam_[p]) v = v != 0.0 ? 1.0 : 0.0;
        }
    }

    int dim() const noexcept { return d_; }
    double t() const noexcept { return t_; }
    double minus_phi(int x) const noexcept { return minus_phi_[x]; }

    const std::vector<double>& tc(int n) const {
        if (n < 1 || n >= static_cast<int>(tc_.size()))
            fail(ErrorCategory::SymbolOrderMissing, "graph needs C^(" + std::to_string(n) + ") beyond symbol truncation");
        return tc_[n];
    }
    const std::vector<double>& lam(int p) const {
        static const std::vector<double> empty;
        if (p < 0 || p >= static_cast<int>(lam_.size())) return empty;
        return lam_[p];
    }

private:
    void check_dense(int n) const {
        double sz = std::pow(static_cast<double>(d_), n);
        if (sz > static_cast<double>(kDenseCap)) fail(ErrorCategory::CapExceeded, "dense tensor table too large");
    }

    int d_;
    double t_;
    std::vector<double> minus_phi_;
    std::vector<std::vector<double>> tc_;
    std::vector<std::vector<double>> lam_;
};

inline double tensor_entry(const std::vector<double>& dense, const std::vector<int>& legs, const std::vector<int>& x, int d) {
    std::size_t flat = 0;
    for (int leg : legs) flat = flat * static_cast<std::size_t>(d) + static_cast<std::size_t>(x[leg]);
    return dense[flat];
}

/// Depth-first sum over all index assignments of the legs; factors are
/// multiplied in as soon as the last leg of a vertex or block is fixed.
inline double eval_graph(const FeynmanGraph& g, const EvalContext& ctx) {
    const int m = g.order();
    const int L = g.num_legs();
    const int d = ctx.dim();
    double constant = 1.0;
    for (int v = 0; v < m; ++v) {
        const auto& lam = ctx.lam(g.leg_counts()[v]);
        if (lam.empty()) return 0.0;
        if (g.leg_counts()[v] == 0) constant *= lam[0];
    }
    const std::vector<int> sizes = g.block_sizes();
    for (int s : sizes) (void)ctx.tc(s);
    if (d == 1) {
        double v = constant;
        for (int j = 0; j < m; ++j)
            if (g.leg_counts()[j] > 0) v *= ctx.lam(g.leg_counts()[j])[0];
        for (int s : sizes) v *= ctx.tc(s)[0];
        for (int b : g.block_of())
            if (b < 0) v *= ctx.minus_phi(0);
        return v;
    }
    // Completion events per leg position.
    std::vector<std::vector<int>> vertex_legs(static_cast<std::size_t>(m));
    std::vector<std::vector<int>> block_legs(static_cast<std::size_t>(g.num_blocks()));
    std::vector<std::vector<int>> vertex_done(static_cast<std::size_t>(L));
    std::vector<std::vector<int>> block_done(static_cast<std::size_t>(L));
    int leg = 0;
    for (int v = 0; v < m; ++v) {
        for (int s = 0; s < g.leg_counts()[v]; ++s, ++leg) {
            vertex_legs[v].push_back(leg);
            if (g.block_of()[leg] >= 0) block_legs[g.block_of()[leg]].push_back(leg);
        }
        if (g.leg_counts()[v] > 0) vertex_done[leg - 1].push_back(v);
    }
    for (int b = 0; b < g.num_blocks(); ++b) block_done[block_legs[b].back()].push_back(b);
    std::vector<int> x(static_cast<std::size_t>(L), 0);
    double total = 0.0;
    auto rec = [&](auto&& self, int i, double acc) -> void {
        if (i == L) {
            total += acc;
            return;
        }
        for (int xi = 0; xi < d; ++xi) {
            x[i] = xi;
            double a = acc;
            if (g.block_of()[i] < 0) a *= ctx.minus_phi(xi);
            for (int v : vertex_done[i]) a *= tensor_entry(ctx.lam(g.leg_counts()[v]), vertex_legs[v], x, d);
            for (int b : block_done[i]) a *= tensor_entry(ctx.tc(static_cast<int>(block_legs[b].size())), block_legs[b], x, d);
            if (a == 0.0) continue;
            self(self, i + 1, a);
        }
    };
    rec(rec, 0, constant);
    return total;
}

inline double signed_weight(int m) {
    double w = (m % 2 == 0) ? 1.0 : -1.0;
    for (int i = 2; i <= m; ++i) w /= i;
    return w;
}

} // namespace detail

/// Value V[G](t, phi) by the Feynman rules: (-phi_X) per K-leg, t*C per inner
/// block, lambda^(p_j) per full vertex, summed over all leg indices.
inline double eval_graph(const FeynmanGraph& g, const OperatorSymbol& sym, const Potential& pot, const EvalPoint& point) {
    point.validate(sym.dim());
    const detail::EvalContext ctx(sym, pot, point);
    return detail::eval_graph(g, ctx);
}

/// Quadratic-specialization rules: one index per edge, t*C per inner vertex
/// (self-loops repeat the index), (-phi_X) per outer vertex, lambda per edge.
inline double eval_quad_graph(const QuadGraph& q, const OperatorSymbol& sym, double lambda, const EvalPoint& point) {
    point.validate(sym.dim());
    const int d = sym.dim();
    const int m = q.order();
    std::vector<std::vector<int>> inner_edges(static_cast<std::size_t>(q.num_inner));
    std::vector<int> outer_edge(static_cast<std::size_t>(q.num_outer), -1);
    for (int e = 0; e < m; ++e)
        for (int end : {q.edges[e].first, q.edges[e].second}) {
            if (q.is_outer(end))
                outer_edge[end - q.num_inner] = e;
            else
                inner_edges[end].push_back(e);
        }
    std::vector<std::vector<double>> tc(1);
    for (const auto& ie : inner_edges) {
        const int n = static_cast<int>(ie.size());
        while (static_cast<int>(tc.size()) <= n) {
            const int k = static_cast<int>(tc.size());
            auto dense = sym.coeff(k).dense();
            for (double& v : dense) v *= point.t;
            tc.push_back(std::move(dense));
        }
    }
    std::vector<int> x(static_cast<std::size_t>(m), 0);
    double total = 0.0;
    const std::size_t assignments = static_cast<std::size_t>(std::pow(static_cast<double>(d), m) + 0.5);
    for (std::size_t flat = 0; flat < assignments; ++flat) {
        std::size_t rem = flat;
        for (int e = 0; e < m; ++e) {
            x[e] = static_cast<int>(rem % static_cast<std::size_t>(d));
            rem /= static_cast<std::size_t>(d);
        }
        double v = 1.0;
        for (const auto& ie : inner_edges) {
            std::size_t idx = 0;
            for (int e : ie) idx = idx * static_cast<std::size_t>(d) + static_cast<std::size_t>(x[e]);
            v *= tc[ie.size()][idx];
        }
        for (int e : outer_edge) v *= -point.phi[x[e]];
        total += v;
    }
    return total * std::pow(lambda, m);
}

/// lambda from an isotropic quadratic potential lambda*||phi||^2.
inline double isotropic_lambda(const Potential& pot) {
    if (!pot.is_quadratic()) fail(ErrorCategory::NonDiagonalQuadratic, "potential is not purely quadratic");
    const SymTensor& l2 = pot.coeff(2);
    const double lam = l2({0, 0});
    for (int x = 0; x < pot.dim(); ++x)
        for (int y = x; y < pot.dim(); ++y) {
            const double expect = (x == y) ? lam : 0.0;
            if (l2({x, y}) != expect) fail(ErrorCategory::NonDiagonalQuadratic, "quadratic potential is not lambda * identity");
        }
    return lam;
}

inline double eval_quad_graph(const QuadGraph& q, const OperatorSymbol& sym, const Potential& pot, const EvalPoint& point) {
    return eval_quad_graph(q, sym, isotropic_lambda(pot), point);
}

namespace detail {

inline BetaSeries assemble_series(const OperatorSymbol& sym, const Potential& pot, const EvalPoint& point, int N,
                                  bool connected_only, SeriesMethod method, bool drop_lambda, SeriesKind kind) {
    point.validate(sym.dim());
    if (N < 0) fail(ErrorCategory::InvalidArgument, "series order must be >= 0");
    const EvalContext ctx(sym, pot, point, drop_lambda);
    GraphFilter filter = prune_vanishing(sym);
    filter.connected_only = connected_only;
    BetaSeries s;
    s.kind = kind;
    s.t = point.t;
    s.phi = point.phi;
    s.coeffs.assign(static_cast<std::size_t>(N) + 1, 0.0);
    s.coeffs[0] = connected_only ? 0.0 : 1.0;
    for (int m = 1; m <= N; ++m) {
        double sum = 0.0;
        if (method == SeriesMethod::raw) {
            enumerate_graphs(m, pot, filter, [&](const FeynmanGraph& g) { sum += eval_graph(g, ctx); });
        } else {
            // Classes come sorted by canonical key, which fixes the summation order.
            for (const TopoClass& c : topo_classes(m, pot, filter))
                sum += static_cast<double>(c.multiplicity) * eval_graph(c.representative, ctx);
        }
        s.coeffs[m] = signed_weight(m) * sum;
    }
    return s;
}

} // namespace detail

/// Series of Phi_t(phi) in the auxiliary parameter multiplying V.
inline BetaSeries phi_series(const OperatorSymbol& sym, const Potential& pot, const EvalPoint& point, int N,
                             SeriesMethod method = SeriesMethod::topological) {
    return detail::assemble_series(sym, pot, point, N, false, method, false, SeriesKind::phi);
}

/// Series of log Phi_t(phi): connected graphs only, h_0 = 0.
inline BetaSeries log_phi_series(const OperatorSymbol& sym, const Potential& pot, const EvalPoint& point, int N,
                                 SeriesMethod method = SeriesMethod::topological) {
    return detail::assemble_series(sym, pot, point, N, true, method, false, SeriesKind::log_phi);
}

/// d = 1 coefficients as polynomials in phi: result[m][k] multiplies phi^k.
inline std::vector<std::vector<double>> phi_series_1d_poly(const OperatorSymbol& sym, const Potential& pot, double t, int N) {
    if (sym.dim() != 1 || pot.dim() != 1) fail(ErrorCategory::DimensionMismatch, "the scalar fast path needs d = 1");
    if (N < 0) fail(ErrorCategory::InvalidArgument, "series order must be >= 0");
    const std::vector<int> degrees = pot.active_degrees();
    const int pmax = degrees.empty() ? 0 : degrees.back();
    const int Pmax = N * pmax;
    // M[n] = sum over block shapes l of n: t^q h_q(l) prod C^(l_s); M[0] = 1.
    std::vector<double> M(static_cast<std::size_t>(Pmax) + 1, 0.0);
    M[0] = 1.0;
    std::vector<int> parts;
    auto shapes = [&](auto&& self, int remaining, int max_part, double acc_c) -> void {
        if (remaining == 0) {
            const double h = static_cast<double>(h_factor(parts));
            M[std::accumulate(parts.begin(), parts.end(), 0)] += std::pow(t, static_cast<double>(parts.size())) * h * acc_c;
            return;
        }
        for (int l = std::min(remaining, max_part); l >= 1; --l) {
            if (l > sym.max_order())
                fail(ErrorCategory::SymbolOrderMissing, "scalar path needs C^(" + std::to_string(l) + ") beyond truncation");
            const std::vector<int> zeros(static_cast<std::size_t>(l), 0);
            const double c = sym.coeff(l)(zeros);
            if (c == 0.0) continue;
            parts.push_back(l);
            self(self, remaining - l, l, acc_c * c);
            parts.pop_back();
        }
    };
    for (int n = 1; n <= Pmax; ++n) shapes(shapes, n, n, 1.0);
    std::vector<std::vector<double>> out(static_cast<std::size_t>(N) + 1);
    out[0] = {1.0};
    for (int m = 1; m <= N; ++m) {
        std::vector<double> poly(static_cast<std::size_t>(m * pmax) + 1, 0.0);
        detail::for_each_degree_tuple(m, degrees, [&](const std::vector<int>& p) {
            double lam = 1.0;
            int P = 0;
            for (int pj : p) {
                const std::vector<int> zeros(static_cast<std::size_t>(pj), 0);
                lam *= pot.coeff(pj)(zeros);
                P += pj;
            }
            for (int k = 0; k <= P; ++k) {
                const double term = lam * static_cast<double>(detail::binomial(P, k)) * ((k % 2) ? -1.0 : 1.0) * M[P - k];
                poly[k] += term;
            }
        });
        const double w = detail::signed_weight(m);
        for (double& c : poly) c *= w;
        out[m] = std::move(poly);
    }
    return out;
}

/// Scalar fast path: no graph enumeration, block shapes counted by h_q.
inline BetaSeries phi_series_1d(const OperatorSymbol& sym, const Potential& pot, const EvalPoint& point, int N) {
    point.validate(1);
    const auto poly = phi_series_1d_poly(sym, pot, point.t, N);
    BetaSeries s;
    s.kind = SeriesKind::phi;
    s.t = point.t;
    s.phi = point.phi;
    for (const auto& c : poly) {
        double v = 0.0;
        for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * point.phi[0] + *it;
        s.coeffs.push_back(v);
    }
    return s;
}

/// Coefficients of P(a < Z_t <= b): exact integrals of the phi-polynomials of
/// the density coefficients over [a, b].
inline std::vector<double> cdf_series(const OperatorSymbol& sym, const Potential& pot, double a, double b, double t, int N) {
    if (!(a < b)) fail(ErrorCategory::InvalidArgument, "cdf_series needs a < b");
    const auto poly = phi_series_1d_poly(sym, pot, t, N);
    std::vector<double> out;
    for (const auto& c : poly) {
        double v = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k)
            v += c[k] * (std::pow(b, static_cast<double>(k + 1)) - std::pow(a, static_cast<double>(k + 1))) / static_cast<double>(k + 1);
        out.push_back(v);
    }
    return out;
}

/// The distribution-function series in its printed form, with
/// (a^{k+1} - b^{k+1})/(k+1) in place of (-phi)^k. It equals
/// -cdf_series(-b, -a), i.e. it describes the mirrored variable with the
/// opposite overall sign.
inline std::vector<double> cdf_series_literal(const OperatorSymbol& sym, const Potential& pot, double a, double b, double t, int N) {
    if (!(a < b)) fail(ErrorCategory::InvalidArgument, "cdf_series_literal needs a < b");
    const auto poly = phi_series_1d_poly(sym, pot, t, N);
    std::vector<double> out;
    for (const auto& c : poly) {
        double v = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k) {
            // c[k] = coefficient of phi^k = (-1)^k * coefficient of (-phi)^k.
            const double minus_phi_coeff = (k % 2) ? -c[k] : c[k];
            v += minus_phi_coeff * (std::pow(a, static_cast<double>(k + 1)) - std::pow(b, static_cast<double>(k + 1))) /
                 static_cast<double>(k + 1);
        }
        out.push_back(v);
    }
    return out;
}

/// Formal exponential of a power series.
inline std::vector<double> series_exp(const std::vector<double>& f) {
    const std::size_t n = f.size();
    std::vector<double> g(n, 0.0);
    if (n == 0) return g;
    g[0] = std::exp(f[0]);
    for (std::size_t k = 1; k < n; ++k) {
        double acc = 0.0;
        for (std::size_t j = 1; j <= k; ++j) acc += static_cast<double>(j) * f[j] * g[k - j];
        g[k] = acc / static_cast<double>(k);
    }
    return g;
}

/// Formal logarithm of a power series with non-zero constant term.
inline std::vector<double> series_log(const std::vector<double>& g) {
    const std::size_t n = g.size();
    std::vector<double> f(n, 0.0);
    if (n == 0) return f;
    if (g[0] == 0.0) fail(ErrorCategory::InvalidArgument, "series_log needs a non-zero constant term");
    f[0] = std::log(g[0]);
    for (std::size_t k = 1; k < n; ++k) {
        double acc = 0.0;
        for (std::size_t j = 1; j < k; ++j) acc += static_cast<double>(j) * f[j] * g[k - j];
        f[k] = (g[k] - acc / static_cast<double>(k)) / g[0];
    }
    return f;
}

/// Diffusion constant mu of an isotropic D = mu * identity.
inline double isotropic_mu(const LevyJumpSpec& spec) {
    const double mu = spec.diffusion.at(0).at(0);
    for (int x = 0; x < spec.dim; ++x)
        for (int y = 0; y < spec.dim; ++y) {
            const double expect = (x == y) ? mu : 0.0;
            if (std::abs(spec.diffusion[x][y] - expect) > 1e-14 * std::max(1.0, std::abs(mu)))
                fail(ErrorCategory::AnisotropicDiffusion, "large-diffusion mode needs D = mu * identity");
        }
    if (!(mu > 0.0)) fail(ErrorCategory::AnisotropicDiffusion, "large-diffusion mode needs mu > 0");
    return mu;
}

/// Series in beta = 1/(4 mu t) of (beta/pi)^{-d/2} Phi_t for the process
/// started at the origin (or of its logarithm). The diffusive part becomes the
/// initial condition exp(-beta ||phi||^2); the remaining symbol has mu = 0 and
/// the lambda factors of the quadratic rules are dropped, leaving beta^m to the
/// series variable. The coefficients do not depend on mu.
inline BetaSeries large_diffusion_series(const LevyJumpSpec& spec, const EvalPoint& point, int N, bool log,
                                         SeriesMethod method = SeriesMethod::topological) {
    spec.validate();
    isotropic_mu(spec);
    LevyJumpSpec jump = spec;
    for (auto& row : jump.diffusion) std::fill(row.begin(), row.end(), 0.0);
    const OperatorSymbol sym = levy_to_symbol(jump, std::max(2 * N, 1));
    const Potential pot = Potential::isotropic_quadratic(spec.dim, 1.0);
    return detail::assemble_series(sym, pot, point, N, log, method, true,
                                   log ? SeriesKind::large_diffusion_log : SeriesKind::large_diffusion);
}

/// Coefficients of the same series in powers of 1/mu: h_m / (4t)^m.
inline std::vector<double> inverse_mu_coefficients(const BetaSeries& s) {
    std::vector<double> out(s.coeffs.size());
    for (std::size_t m = 0; m < s.coeffs.size(); ++m) out[m] = s.coeffs[m] / std::pow(4.0 * s.t, static_cast<double>(m));
    return out;
}

} // namespace levygraph
