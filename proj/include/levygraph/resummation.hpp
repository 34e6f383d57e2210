#pragma once

// [M/N] Pade approximants, the second-order Pade log-density and truncated
// Borel-Laplace evaluation by Gauss-Laguerre quadrature.

#include "levygraph/core_model.hpp"
#include "levygraph/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace levygraph {

/// a(beta) / b(beta) with a = a_0 + ... + a_M beta^M and
/// b = 1 + b_1 beta + ... + b_N beta^N. `b` stores b_1..b_N.
struct PadeApprox {
    int M = 0;
    int N = 0;
    std::vector<double> a;
    std::vector<double> b;
    double condition = 1.0; // pivot ratio of the linear solve (1 = trivial)
};

namespace detail {

/// Dense solve with partial pivoting. Throws SingularSystem when a pivot is
/// negligible relative to the matrix scale.
inline std::vector<double> solve_linear(std::vector<std::vector<double>> A, std::vector<double> rhs, double* pivot_ratio = nullptr) {
    const std::size_t n = rhs.size();
    double scale = 0.0;
    for (const auto& row : A)
        for (double v : row) scale = std::max(scale, std::abs(v));
    if (scale == 0.0 && n > 0) fail(ErrorCategory::SingularSystem, "Pade system matrix is zero");
    double min_piv = std::numeric_limits<double>::infinity();
    double max_piv = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
        const double pv = std::abs(A[piv][c]);
        if (pv <= 1e-13 * scale) fail(ErrorCategory::SingularSystem, "Pade linear system is numerically singular");
        min_piv = std::min(min_piv, pv);
        max_piv = std::max(max_piv, pv);
        std::swap(A[piv], A[c]);
        std::swap(rhs[piv], rhs[c]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = A[r][c] / A[c][c];
            if (f == 0.0) continue;
            for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
            rhs[r] -= f * rhs[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double acc = rhs[i];
        for (std::size_t k = i + 1; k < n; ++k) acc -= A[i][k] * x[k];
        x[i] = acc / A[i][i];
    }
    if (pivot_ratio) *pivot_ratio = n ? max_piv / min_piv : 1.0;
    return x;
}

} // namespace detail

/// Relative tolerance of the re-match check in pade().
inline constexpr double kPadeMatchTol = 1e-10;

/// First `count` Taylor coefficients of a/b.
inline std::vector<double> taylor(const PadeApprox& p, int count) {
    std::vector<double> c(static_cast<std::size_t>(count), 0.0);
    for (int k = 0; k < count; ++k) {
        double acc = k <= p.M ? p.a[k] : 0.0;
        for (int j = 1; j <= std::min(k, p.N); ++j) acc -= p.b[j - 1] * c[k - j];
        c[k] = acc;
    }
    return c;
}

/// [M/N] approximant from h_0..h_{M+N}: b solves
/// sum_{j=0..N} b_j h_{M+i-j} = 0 for i = 1..N (b_0 = 1, h_k = 0 for k < 0),
/// then a_k = sum_{j=0..min(k,N)} b_j h_{k-j}.
inline PadeApprox pade(const std::vector<double>& h, int M, int N) {
    if (M < 0 || N < 0) fail(ErrorCategory::InvalidArgument, "Pade degrees must be >= 0");
    if (static_cast<int>(h.size()) < M + N + 1)
        fail(ErrorCategory::InvalidArgument, "Pade [" + std::to_string(M) + "/" + std::to_string(N) + "] needs " +
                                                 std::to_string(M + N + 1) + " coefficients");
    auto hk = [&](int k) { return k < 0 ? 0.0 : h[static_cast<std::size_t>(k)]; };
    PadeApprox p;
    p.M = M;
    p.N = N;
    if (N > 0) {
        std::vector<std::vector<double>> A(static_cast<std::size_t>(N), std::vector<double>(static_cast<std::size_t>(N)));
        std::vector<double> rhs(static_cast<std::size_t>(N));
        for (int i = 1; i <= N; ++i) {
            for (int j = 1; j <= N; ++j) A[i - 1][j - 1] = hk(M + i - j);
            rhs[i - 1] = -hk(M + i);
        }
        // h_{M+1..M+N} = 0: the polynomial part already matches, b = 0.
        if (std::all_of(rhs.begin(), rhs.end(), [](double v) { return v == 0.0; }))
            p.b.assign(static_cast<std::size_t>(N), 0.0);
        else
            p.b = detail::solve_linear(std::move(A), std::move(rhs), &p.condition);
    }
    p.a.resize(static_cast<std::size_t>(M) + 1);
    for (int k = 0; k <= M; ++k) {
        double acc = hk(k);
        for (int j = 1; j <= std::min(k, N); ++j) acc += p.b[j - 1] * hk(k - j);
        p.a[k] = acc;
    }
    // A pole close to the origin amplifies rounding in a by |b| per order;
    // refuse approximants that no longer reproduce their input.
    const auto back = taylor(p, M + N + 1);
    for (int k = 0; k <= M + N; ++k)
        if (!(std::abs(back[k] - h[k]) <= kPadeMatchTol * std::max(1.0, std::abs(h[k]))))
            fail(ErrorCategory::SingularSystem, "Pade [" + std::to_string(M) + "/" + std::to_string(N) +
                                                    "] is ill-conditioned: Taylor coefficient " + std::to_string(k) + " is not reproduced");
    return p;
}

inline PadeApprox pade(const BetaSeries& s, int M, int N) { return pade(s.coeffs, M, N); }

/// Closed form of [1/1]: b_1 = -h_2/h_1, a_0 = h_0, a_1 = h_1 - h_0 h_2 / h_1.
inline PadeApprox pade_11(double h0, double h1, double h2) {
    if (h1 == 0.0 && h2 == 0.0) return PadeApprox{1, 1, {h0, 0.0}, {0.0}, 1.0};
    if (h1 == 0.0) fail(ErrorCategory::SingularSystem, "[1/1] Pade needs h_1 != 0");
    PadeApprox p;
    p.M = 1;
    p.N = 1;
    p.b = {-h2 / h1};
    p.a = {h0, h1 - h0 * h2 / h1};
    return p;
}

namespace detail {

inline double horner(const std::vector<double>& c, double x) {
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
    return acc;
}

/// All complex roots of c_0 + c_1 x + ... + c_n x^n (Durand-Kerner).
inline std::vector<std::complex<long double>> poly_roots(std::vector<double> c) {
    while (!c.empty() && c.back() == 0.0) c.pop_back();
    const int n = static_cast<int>(c.size()) - 1;
    if (n <= 0) return {};
    using C = std::complex<long double>;
    if (n == 1) return {C(-static_cast<long double>(c[0]) / c[1], 0)};
    std::vector<long double> mono(c.begin(), c.end());
    for (auto& v : mono) v /= c[n];
    long double radius = 0;
    for (int i = 0; i < n; ++i) radius = std::max(radius, std::abs(mono[i]));
    radius += 1;
    std::vector<C> z(static_cast<std::size_t>(n));
    const C seed(0.4L, 0.9L);
    for (int i = 0; i < n; ++i) z[i] = radius * std::pow(seed, i);
    auto eval = [&](C x) {
        C acc = 1;
        for (int i = n - 1; i >= 0; --i) acc = acc * x + mono[i];
        return acc;
    };
    for (int it = 0; it < 2000; ++it) {
        long double change = 0;
        for (int i = 0; i < n; ++i) {
            C den = 1;
            for (int j = 0; j < n; ++j)
                if (j != i) den *= (z[i] - z[j]);
            const C step = eval(z[i]) / den;
            z[i] -= step;
            change = std::max(change, std::abs(step));
        }
        if (change < 1e-18L) break;
    }
    return z;
}

} // namespace detail

/// Real roots of the denominator, ascending.
inline std::vector<double> real_poles(const PadeApprox& p) {
    std::vector<double> den{1.0};
    den.insert(den.end(), p.b.begin(), p.b.end());
    std::vector<double> out;
    for (const auto& r : detail::poly_roots(den))
        if (std::abs(r.imag()) <= 1e-9L * (1 + std::abs(r.real()))) out.push_back(static_cast<double>(r.real()));
    std::sort(out.begin(), out.end());
    return out;
}

/// a(beta)/b(beta). Throws PoleOnPath when the denominator vanishes for some
/// beta' strictly between 0 and beta (inclusive of beta); callers fall back
/// to the partial sum.
inline double eval_pade(const PadeApprox& p, double beta) {
    std::vector<double> den{1.0};
    den.insert(den.end(), p.b.begin(), p.b.end());
    if (beta != 0.0) {
        for (double r : real_poles(p)) {
            const bool on_path = beta > 0 ? (r > 0 && r <= beta) : (r < 0 && r >= beta);
            if (on_path) fail(ErrorCategory::PoleOnPath, "Pade denominator vanishes at beta = " + std::to_string(r));
        }
        // Sign scan guards against a pair of nearly coincident real roots.
        const double d0 = detail::horner(den, 0.0);
        const int steps = 256;
        for (int i = 1; i <= steps; ++i) {
            const double x = beta * i / steps;
            if (detail::horner(den, x) * d0 <= 0.0)
                fail(ErrorCategory::PoleOnPath, "Pade denominator changes sign before beta = " + std::to_string(beta));
        }
    }
    return detail::horner(p.a, beta) / detail::horner(den, beta);
}

/// Second-order Pade log-density of the large-diffusion expansion for d = 1,
///   -beta (t z r2 + phi^2) / (1 + (beta/2) X / (t z r2 + phi^2)),
///   X = t z r4 + 2 t^2 z^2 r2^2 + 4 t z r2 phi^2 + 4 t z r3 phi,
/// i.e. log[(beta/pi)^{-1/2} Phi_t(phi)] in the frame where C^(1) = 0. The
/// drift and r1 of `spec` are not used; mu enters only through beta.
inline double pade_log_density_2nd(const LevyJumpSpec& spec, double t, double phi, double beta) {
    if (spec.dim != 1) fail(ErrorCategory::DimensionMismatch, "the closed-form Pade density is scalar");
    if (!(spec.activity >= 0.0)) fail(ErrorCategory::NegativeActivity, "activity z must be >= 0");
    const double z = spec.activity;
    if (z == 0.0) return -beta * phi * phi;
    auto r = [&](int n) {
        auto it = spec.jump_moments.find(n);
        if (it == spec.jump_moments.end())
            fail(ErrorCategory::MissingJumpMoments, "closed-form Pade density needs r_" + std::to_string(n));
        const std::vector<int> zeros(static_cast<std::size_t>(n), 0);
        return it->second(zeros);
    };
    const double r2 = r(2), r3 = r(3), r4 = r(4);
    const double first = t * z * r2 + phi * phi;
    if (first == 0.0) fail(ErrorCategory::ZeroDenominatorH1, "first-order coefficient vanishes (r2 = 0 and phi = 0)");
    const double second = t * z * r4 + 2.0 * t * t * z * z * r2 * r2 + 4.0 * t * z * r2 * phi * phi + 4.0 * t * z * r3 * phi;
    return -beta * first / (1.0 + 0.5 * beta * second / first);
}

/// Gauss-Laguerre rule for int_0^inf e^{-u} f(u) du.
struct GaussLaguerre {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussLaguerre(int n) {
        if (n < 2) fail(ErrorCategory::InvalidArgument, "Gauss-Laguerre needs at least 2 nodes");
        nodes.resize(static_cast<std::size_t>(n));
        weights.resize(static_cast<std::size_t>(n));
        long double z = 0;
        for (int i = 0; i < n; ++i) {
            if (i == 0) {
                z = 3.0L / (1.0L + 2.4L * n);
            } else if (i == 1) {
                z += 15.0L / (1.0L + 2.5L * n);
            } else {
                const long double ai = i - 1;
                z += ((1.0L + 2.55L * ai) / (1.9L * ai)) * (z - nodes[i - 2]);
            }
            long double p1 = 1, p2 = 0, pp = 0;
            for (int it = 0; it < 100; ++it) {
                p1 = 1;
                p2 = 0;
                for (int j = 0; j < n; ++j) {
                    const long double p3 = p2;
                    p2 = p1;
                    p1 = ((2.0L * j + 1.0L - z) * p2 - j * p3) / (j + 1.0L);
                }
                pp = (n * p1 - n * p2) / z;
                const long double z1 = z;
                z = z1 - p1 / pp;
                if (std::abs(z - z1) <= 1e-17L * std::max<long double>(1, z)) break;
            }
            nodes[i] = static_cast<double>(z);
            weights[i] = static_cast<double>(-1.0L / (pp * n * p2));
        }
    }
};

struct BorelSpec {
    int node_count = 64;
};

/// Truncated Borel-Laplace value
///   (beta/pi)^{d/2} int_0^inf e^{-u} B_N(beta u) du,  B_N(tau) = sum_m h_m tau^m / m!,
/// which reproduces (beta/pi)^{d/2} sum_m h_m beta^m up to quadrature error.
/// d = 0 drops the prefactor. Log-kind series are accepted only with
/// `experimental_log`, because their Borel transform is not known to continue.
inline double borel_resum(const BetaSeries& s, double beta, const BorelSpec& spec = {}, int d = 0, bool experimental_log = false) {
    if (spec.node_count < 2) fail(ErrorCategory::InvalidArgument, "Borel quadrature needs node_count >= 2");
    if (d < 0) fail(ErrorCategory::InvalidArgument, "dimension must be >= 0");
    if (is_log_kind(s.kind) && !experimental_log)
        fail(ErrorCategory::InvalidArgument, "Borel resummation of a log series is experimental; enable it explicitly");
    if (!(beta > 0.0)) fail(ErrorCategory::InvalidArgument, "Borel resummation needs beta > 0");
    const GaussLaguerre rule(spec.node_count);
    std::vector<double> borel(s.coeffs.size());
    double fact = 1.0;
    for (std::size_t m = 0; m < s.coeffs.size(); ++m) {
        if (m > 0) fact *= static_cast<double>(m);
        borel[m] = s.coeffs[m] / fact;
    }
    long double acc = 0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        acc += static_cast<long double>(rule.weights[i]) * detail::horner(borel, beta * rule.nodes[i]);
    const double pref = d == 0 ? 1.0 : std::pow(beta / std::numbers::pi, 0.5 * d);
    return pref * static_cast<double>(acc);
}

/// Resummation selector used by the command line: partial sum, [M/N] Pade or
/// truncated Borel with K nodes.
struct ResumMethod {
    enum class Kind { partial, pade, borel } kind = Kind::partial;
    int M = 0;
    int N = 0;
    int nodes = 64;

    static ResumMethod parse(const std::string& text) {
        ResumMethod r;
        if (text == "partial" || text == "partial_sum") return r;
        auto bad = [&]() -> ResumMethod { fail(ErrorCategory::InvalidArgument, "unknown resummation '" + text + "'"); };
        if (text.rfind("pade:", 0) == 0) {
            const auto slash = text.find('/');
            if (slash == std::string::npos) return bad();
            try {
                r.kind = Kind::pade;
                r.M = std::stoi(text.substr(5, slash - 5));
                r.N = std::stoi(text.substr(slash + 1));
            } catch (const std::exception&) {
                return bad();
            }
            if (r.M < 0 || r.N < 0) return bad();
            return r;
        }
        if (text.rfind("borel:", 0) == 0) {
            try {
                r.kind = Kind::borel;
                r.nodes = std::stoi(text.substr(6));
            } catch (const std::exception&) {
                return bad();
            }
            if (r.nodes < 2) return bad();
            return r;
        }
        return bad();
    }

    std::string str() const {
        switch (kind) {
        case Kind::partial: return "partial";
        case Kind::pade: return "pade:" + std::to_string(M) + "/" + std::to_string(N);
        case Kind::borel: return "borel:" + std::to_string(nodes);
        }
        return "partial";
    }
};

/// Applies a resummation to a series at beta (no dimension prefactor).
inline double resum(const BetaSeries& s, double beta, const ResumMethod& method, bool experimental_log = false) {
    switch (method.kind) {
    case ResumMethod::Kind::partial: return s.partial_sum(beta);
    case ResumMethod::Kind::pade: return eval_pade(pade(s, method.M, method.N), beta);
    case ResumMethod::Kind::borel: return borel_resum(s, beta, BorelSpec{method.nodes}, 0, experimental_log);
    }
    return s.partial_sum(beta);
}

} // namespace levygraph
