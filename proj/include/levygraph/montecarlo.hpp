#pragma once

// Time-one marginal of a Gaussian plus two-sided Poisson jump process,
// Z = X(a, 1/(2 beta)) + s1 Y1(z1) - s2 Y2(z2), with seeded, chunk-split
// sampling, empirical estimators, density normalization and the quantile
// comparison between sample, second-order Pade density and Gaussian fit.

#include "levygraph/core_model.hpp"
#include "levygraph/errors.hpp"
#include "levygraph/resummation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace levygraph {

struct JumpDiffusionModel {
    double a = 0.0;
    double beta = 1.0;
    double z1 = 0.0;
    double z2 = 0.0;
    double s1 = 1.0;
    double s2 = 1.0;

    void validate() const {
        if (!(beta > 0.0)) fail(ErrorCategory::InvalidModel, "beta must be > 0");
        if (!(z1 >= 0.0) || !(z2 >= 0.0)) fail(ErrorCategory::NegativeActivity, "Poisson rates must be >= 0");
        if (!(s1 > 0.0) || !(s2 > 0.0)) fail(ErrorCategory::InvalidModel, "jump lengths must be > 0");
        if (!std::isfinite(a)) fail(ErrorCategory::InvalidModel, "a must be finite");
    }

    double sigma() const { return 1.0 / std::sqrt(2.0 * beta); }
    double z() const { return z1 + z2; }
    double mean() const { return a + s1 * z1 - s2 * z2; }
    double variance() const { return 1.0 / (2.0 * beta) + s1 * s1 * z1 + s2 * s2 * z2; }

    /// Jump moment r_n of r = (z1 delta_{s1} + z2 delta_{-s2}) / z.
    double jump_moment(int n) const {
        if (z() == 0.0) return 0.0;
        return (z1 * std::pow(s1, n) + z2 * std::pow(-s2, n)) / z();
    }

    /// One-dimensional Levy data at t = 1: activity z, moments r_1..r_max and
    /// diffusion mu = 1/(4 beta). The drift -z r_1 makes C^(1) vanish, so the
    /// series describe Z - E[Z]; evaluate them at phi = x - mean().
    LevyJumpSpec levy_spec(int max_moment = 6) const {
        LevyJumpSpec spec;
        spec.dim = 1;
        spec.drift = {-z() * jump_moment(1)};
        spec.diffusion = {{1.0 / (4.0 * beta)}};
        spec.activity = z();
        for (int n = 1; n <= max_moment; ++n) {
            SymTensor r(n, 1);
            r.set(std::vector<int>(static_cast<std::size_t>(n), 0), jump_moment(n));
            spec.jump_moments.emplace(n, std::move(r));
        }
        return spec;
    }

    /// One-sided benchmark: upward jumps of length s1 (z2 = 0 by default), with
    /// the Gaussian mean set to a = z1 s1 - z2 s2.
    static JumpDiffusionModel skewed(double z1, double s1 = 6.0, double beta = 0.2, double z2 = 0.0, double s2 = 1.0) {
        JumpDiffusionModel m;
        m.beta = beta;
        m.z1 = z1;
        m.z2 = z2;
        m.s1 = s1;
        m.s2 = s2;
        m.a = z1 * s1 - z2 * s2;
        return m;
    }
};

struct Sample {
    std::vector<double> values;
    std::uint64_t seed = 0;
    std::size_t chunk_size = 0;
    JumpDiffusionModel model;
};

inline constexpr std::size_t kDefaultChunk = 1u << 16;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of chunk `index`, a pure function of (seed, index).
inline std::uint64_t chunk_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ (index * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

/// Open-interval uniform from the top 53 bits.
inline double to_uniform(std::uint64_t x) { return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53; }

} // namespace detail

/// Standard normal quantile: rational approximation refined by one Halley step
/// against erfc (relative error near machine precision).
inline double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) fail(ErrorCategory::InvalidArgument, "normal quantile needs 0 < p < 1");
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

/// Poisson(rate) by inversion of one uniform: sequential search from zero for
/// rate <= 30, otherwise a search outward from the mode with log-space pmf.
inline std::uint64_t poisson_inverse(double rate, double u) {
    if (rate <= 0.0) return 0;
    if (rate <= 30.0) {
        double p = std::exp(-rate);
        double cdf = p;
        std::uint64_t k = 0;
        while (u > cdf && k < 1000) {
            ++k;
            p *= rate / static_cast<double>(k);
            cdf += p;
            if (p == 0.0) break;
        }
        return k;
    }
    const double mode = std::floor(rate);
    auto logpmf = [&](double k) { return -rate + k * std::log(rate) - std::lgamma(k + 1.0); };
    // CDF at the mode by summing downward until terms vanish.
    double cdf_mode = 0.0;
    for (double k = mode; k >= 0.0; k -= 1.0) {
        const double p = std::exp(logpmf(k));
        cdf_mode += p;
        if (p < 1e-300 || (k < mode - 10.0 && p < 1e-18 * cdf_mode)) break;
    }
    double k = mode;
    double cdf = cdf_mode;
    if (u <= cdf) {
        // Walk down while the CDF just below k still exceeds u.
        while (k > 0.0) {
            const double below = cdf - std::exp(logpmf(k));
            if (below < u) break;
            cdf = below;
            k -= 1.0;
        }
    } else {
        while (u > cdf) {
            k += 1.0;
            const double p = std::exp(logpmf(k));
            cdf += p;
            if (p < 1e-300 && k > rate) break;
        }
    }
    return static_cast<std::uint64_t>(k);
}

/// n independent draws of Z. Chunk c uses its own engine seeded from
/// (seed, c); results are bit-identical for any thread count.
inline Sample simulate(const JumpDiffusionModel& model, std::size_t n, std::uint64_t seed, unsigned threads = 0,
                       std::size_t chunk_size = kDefaultChunk) {
    model.validate();
    if (n < 1) fail(ErrorCategory::InvalidArgument, "sample size must be >= 1");
    if (chunk_size < 1) fail(ErrorCategory::InvalidArgument, "chunk size must be >= 1");
    Sample s;
    s.seed = seed;
    s.chunk_size = chunk_size;
    s.model = model;
    s.values.resize(n);
    const std::size_t chunks = (n + chunk_size - 1) / chunk_size;
    const double sigma = model.sigma();
    auto run_chunk = [&](std::size_t c) {
        std::mt19937_64 eng(detail::chunk_seed(seed, c));
        const std::size_t lo = c * chunk_size;
        const std::size_t hi = std::min(n, lo + chunk_size);
        for (std::size_t i = lo; i < hi; ++i) {
            const double ug = detail::to_uniform(eng());
            const double u1 = detail::to_uniform(eng());
            const double u2 = detail::to_uniform(eng());
            double x = model.a + sigma * inverse_normal_cdf(ug);
            x += model.s1 * static_cast<double>(poisson_inverse(model.z1, u1));
            x -= model.s2 * static_cast<double>(poisson_inverse(model.z2, u2));
            s.values[i] = x;
        }
    };
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));
    if (threads <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t c = w; c < chunks; c += threads) run_chunk(c);
            });
        for (auto& th : pool) th.join();
    }
    return s;
}

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    double bin_width = 0.0;
    std::vector<std::size_t> counts;
    std::vector<double> frequency; // counts / n
    std::vector<double> density;   // frequency / bin_width
};

/// Relative-frequency histogram over [lo, hi) with `bins` equal bins; the
/// range defaults to the sample range.
inline Histogram empirical_density(const std::vector<double>& values, int bins, double lo = NAN, double hi = NAN) {
    if (values.empty()) fail(ErrorCategory::EmptySample, "histogram of an empty sample");
    if (bins < 1) fail(ErrorCategory::InvalidArgument, "need at least one bin");
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    if (std::isnan(lo)) lo = *mn;
    if (std::isnan(hi)) hi = *mx;
    if (!(hi > lo)) hi = lo + 1.0;
    Histogram h;
    h.lo = lo;
    h.hi = hi;
    h.bin_width = (hi - lo) / bins;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double v : values) {
        if (v < lo || v > hi) continue;
        auto b = static_cast<std::size_t>((v - lo) / h.bin_width);
        if (b >= h.counts.size()) b = h.counts.size() - 1;
        ++h.counts[b];
    }
    const double n = static_cast<double>(values.size());
    for (std::size_t c : h.counts) {
        h.frequency.push_back(static_cast<double>(c) / n);
        h.density.push_back(static_cast<double>(c) / n / h.bin_width);
    }
    return h;
}

/// Quantile by linear interpolation between order statistics:
/// position (n - 1) alpha in the sorted sample.
inline double quantile_sorted(const std::vector<double>& sorted, double alpha) {
    if (sorted.empty()) fail(ErrorCategory::EmptySample, "quantile of an empty sample");
    if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCategory::InvalidArgument, "quantile level must be in (0, 1)");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * alpha;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double empirical_quantile(std::vector<double> values, double alpha) {
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, alpha);
}

namespace detail {

struct SimpsonState {
    const std::function<double(double)>* f;
    int max_depth;
    bool exhausted = false;
};

inline double checked(const std::function<double(double)>& f, double x) {
    const double v = f(x);
    if (!std::isfinite(v)) fail(ErrorCategory::NonFiniteDensity, "integrand is not finite at x = " + std::to_string(x));
    return v;
}

inline double simpson_rec(SimpsonState& st, double a, double b, double fa, double fm, double fb, double whole, double eps, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = checked(*st.f, lm);
    const double frm = checked(*st.f, rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
    if (depth >= st.max_depth) {
        st.exhausted = true;
        return left + right + delta / 15.0;
    }
    return simpson_rec(st, a, m, fa, flm, fm, left, 0.5 * eps, depth + 1) +
           simpson_rec(st, m, b, fm, frm, fb, right, 0.5 * eps, depth + 1);
}

} // namespace detail

/// Adaptive Simpson integral of f over [a, b] to relative tolerance `tol`,
/// started from `panels` equal panels so narrow peaks are not missed.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-8, int panels = 64,
                               int max_depth = 40) {
    if (a == b) return 0.0;
    if (!(tol > 0.0)) fail(ErrorCategory::InvalidArgument, "tolerance must be > 0");
    detail::SimpsonState st{&f, max_depth};
    const double h = (b - a) / panels;
    std::vector<double> fx(static_cast<std::size_t>(2 * panels + 1));
    for (int i = 0; i <= 2 * panels; ++i) fx[i] = detail::checked(f, a + 0.5 * h * i);
    double rough = 0.0;
    for (int i = 0; i < panels; ++i) rough += h / 6.0 * (fx[2 * i] + 4.0 * fx[2 * i + 1] + fx[2 * i + 2]);
    const double scale = std::max(std::abs(rough), 1e-300);
    double total = 0.0;
    for (int i = 0; i < panels; ++i) {
        const double x0 = a + h * i;
        const double whole = h / 6.0 * (fx[2 * i] + 4.0 * fx[2 * i + 1] + fx[2 * i + 2]);
        total += detail::simpson_rec(st, x0, x0 + h, fx[2 * i], fx[2 * i + 1], fx[2 * i + 2], whole, tol * scale / panels, 0);
    }
    if (st.exhausted) fail(ErrorCategory::ToleranceNotReached, "adaptive Simpson hit its depth limit");
    return total;
}

using LogDensity = std::function<double(double)>;

struct Window {
    double lo = 0.0;
    double hi = 0.0;
};

/// Integral of exp(log_density) over the window.
inline double normalize_density(const LogDensity& log_density, Window w, double tol = 1e-8) {
    if (!(w.hi > w.lo)) fail(ErrorCategory::InvalidArgument, "empty integration window");
    const std::function<double(double)> f = [&](double x) { return std::exp(log_density(x)); };
    const double z = adaptive_simpson(f, w.lo, w.hi, tol);
    if (!(z > 0.0) || !std::isfinite(z)) fail(ErrorCategory::NonFiniteDensity, "normalization constant is not positive and finite");
    return z;
}

/// mean +- 12 sd, widened until the integrand at both ends is below 1e-14 of
/// the peak found on a grid.
inline Window choose_window(const LogDensity& log_density, double mean, double sd) {
    Window w{mean - 12.0 * sd, mean + 12.0 * sd};
    for (int iter = 0; iter < 40; ++iter) {
        double peak = -std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 2000; ++i) peak = std::max(peak, log_density(w.lo + (w.hi - w.lo) * i / 2000.0));
        const double cut = peak + std::log(1e-14);
        if (log_density(w.lo) < cut && log_density(w.hi) < cut) return w;
        const double half = 0.5 * (w.hi - w.lo);
        w.lo -= half;
        w.hi += half;
    }
    fail(ErrorCategory::NonFiniteDensity, "density does not decay inside any tried window");
}

/// alpha-quantile of the density exp(log_density)/normalization by bisection
/// on the cumulative integral, to 1e-8 in probability.
inline double model_quantile(const LogDensity& log_density, double normalization, double alpha, Window w) {
    if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCategory::InvalidArgument, "quantile level must be in (0, 1)");
    if (!(normalization > 0.0)) fail(ErrorCategory::InvalidArgument, "normalization must be > 0");
    const std::function<double(double)> f = [&](double x) { return std::exp(log_density(x)) / normalization; };
    // Tabulate the CDF on a grid, then bisect inside the bracketing cell.
    const int cells = 256;
    const double h = (w.hi - w.lo) / cells;
    std::vector<double> cdf(cells + 1, 0.0);
    for (int i = 0; i < cells; ++i) cdf[i + 1] = cdf[i] + adaptive_simpson(f, w.lo + h * i, w.lo + h * (i + 1), 1e-11, 4);
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), alpha);
    if (it == cdf.end()) return w.hi;
    const int cell = std::max(0, static_cast<int>(it - cdf.begin()) - 1);
    double lo = w.lo + h * cell;
    double hi = lo + h;
    const double base = cdf[cell];
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double F = base + adaptive_simpson(f, w.lo + h * cell, mid, 1e-11, 4);
        if (std::abs(F - alpha) <= 1e-10 || hi - lo <= 1e-12 * std::max(1.0, std::abs(mid))) return mid;
        (F < alpha ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct Moments2 {
    double mean = 0.0;
    double variance = 0.0;
};

/// Best-fit Gaussian: mean of Z and variance z r2 + 2 mu = z1 s1^2 + z2 s2^2 + 1/(2 beta) (t = 1).
inline Moments2 gaussian_baseline(const JumpDiffusionModel& m) {
    m.validate();
    return {m.mean(), m.variance()};
}

/// log of the second-order Pade density (unnormalized) at sample value x,
/// evaluated at phi = x - E[Z] with t = 1.
inline LogDensity pade_log_density(const JumpDiffusionModel& m) {
    m.validate();
    const LevyJumpSpec spec = m.levy_spec(4);
    const double center = m.mean();
    const double beta = m.beta;
    return [spec, center, beta](double x) { return pade_log_density_2nd(spec, 1.0, x - center, beta); };
}

struct QuantileRow {
    double alpha = 0.0;
    double empirical = 0.0;
    double pade = 0.0;
    double gaussian = 0.0;
    double pade_error() const { return std::abs(pade - empirical); }
    double gaussian_error() const { return std::abs(gaussian - empirical); }
};

struct Comparison {
    JumpDiffusionModel model;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    Window window;
    double normalization = 0.0;
    Moments2 baseline;
    std::vector<QuantileRow> rows;
};

/// Sample, Pade-predicted and Gaussian-predicted quantiles side by side.
inline Comparison compare_quantiles(const JumpDiffusionModel& model, std::size_t n, std::uint64_t seed, const std::vector<double>& alphas,
                                    unsigned threads = 0) {
    if (n < 1000) fail(ErrorCategory::InvalidArgument, "comparison needs at least 1000 samples");
    Comparison c;
    c.model = model;
    c.n = n;
    c.seed = seed;
    c.baseline = gaussian_baseline(model);
    Sample s = simulate(model, n, seed, threads);
    std::sort(s.values.begin(), s.values.end());
    const LogDensity ld = pade_log_density(model);
    c.window = choose_window(ld, c.baseline.mean, std::sqrt(c.baseline.variance));
    c.normalization = normalize_density(ld, c.window);
    const double sd = std::sqrt(c.baseline.variance);
    for (double a : alphas) {
        QuantileRow r;
        r.alpha = a;
        r.empirical = quantile_sorted(s.values, a);
        r.pade = model_quantile(ld, c.normalization, a, c.window);
        r.gaussian = c.baseline.mean + sd * inverse_normal_cdf(a);
        c.rows.push_back(r);
    }
    return c;
}

} // namespace levygraph
