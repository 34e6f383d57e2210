#pragma once

// Model inputs: symmetric tensors, operator symbols, potentials and Levy data.
//
// Coefficient convention. A symbol is stored through its derivatives at the
// origin, C^(n)_{X1..Xn} = d^n Psi / d xi_X1 ... d xi_Xn (0), so that t*C^(n)
// is directly the n-th truncated moment (cumulant) of nu_t and
//     Psi(xi) = sum_n 1/n! sum_{X1..Xn} C^(n)_{X1..Xn} xi_X1 ... xi_Xn .
// A potential is stored in the unrestricted-sum form
//     V(phi) = sum_p sum_{X1..Xp} lambda^(p)_{X1..Xp} phi_X1 ... phi_Xp .

#include "levygraph/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace levygraph {

using MultiIndex = std::vector<int>;

namespace detail {

inline std::uint64_t binomial(int n, int k) {
    if (k < 0 || n < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    return r;
}

inline double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

} // namespace detail

/// Symmetric tensor of degree p over R^d. One value per sorted multi-index;
/// lookups with an unsorted index are routed to the sorted representative.
class SymTensor {
public:
    SymTensor() : SymTensor(0, 1) {}

    SymTensor(int degree, int dim) : degree_(degree), dim_(dim) {
        if (degree < 0 || dim < 1) fail(ErrorCategory::InvalidArgument, "SymTensor needs degree >= 0 and dim >= 1");
        values_.assign(detail::binomial(dim + degree - 1, degree), 0.0);
    }

    static SymTensor scalar(double v, int dim = 1) {
        SymTensor s(0, dim);
        s.values_[0] = v;
        return s;
    }

    /// Degree-2 tensor from a (symmetric) matrix; the upper triangle is read.
    static SymTensor from_matrix(const std::vector<std::vector<double>>& m) {
        const int d = static_cast<int>(m.size());
        SymTensor s(2, d);
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) s.set({i, j}, m[i][j]);
        return s;
    }

    static SymTensor from_vector(std::span<const double> v) {
        SymTensor s(1, static_cast<int>(v.size()));
        for (int i = 0; i < static_cast<int>(v.size()); ++i) s.set({i}, v[i]);
        return s;
    }

    int degree() const noexcept { return degree_; }
    int dim() const noexcept { return dim_; }
    std::size_t num_entries() const noexcept { return values_.size(); }

    double operator()(std::span<const int> index) const { return values_[rank_of(index)]; }
    double operator()(std::initializer_list<int> index) const {
        return (*this)(std::span<const int>(index.begin(), index.size()));
    }

    void set(std::span<const int> index, double v) { values_[rank_of(index)] = v; }
    void set(std::initializer_list<int> index, double v) {
        set(std::span<const int>(index.begin(), index.size()), v);
    }

    bool is_zero() const noexcept {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
    }

    /// Visit (sorted multi-index, value) for every stored entry in rank order.
    template <typename F>
    void for_each_entry(F&& f) const {
        MultiIndex idx(static_cast<std::size_t>(degree_), 0);
        for (std::size_t r = 0; r < values_.size(); ++r) {
            f(std::as_const(idx), values_[r]);
            advance(idx);
        }
    }

    /// Number of distinct orderings of a sorted multi-index, p! / prod(alpha_x!).
    static double permutation_count(std::span<const int> sorted) {
        double c = detail::factorial(static_cast<int>(sorted.size()));
        std::size_t i = 0;
        while (i < sorted.size()) {
            std::size_t j = i;
            while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
            c /= detail::factorial(static_cast<int>(j - i));
            i = j;
        }
        return c;
    }

    /// Unrestricted contraction sum_{X} T_X x_X1 ... x_Xp.
    double contract(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != dim_) fail(ErrorCategory::DimensionMismatch, "contract: vector size differs from tensor dim");
        double acc = 0.0;
        for_each_entry([&](const MultiIndex& idx, double v) {
            if (v == 0.0) return;
            double term = v * permutation_count(idx);
            for (int k : idx) term *= x[k];
            acc += term;
        });
        return acc;
    }

    /// Full row-major table of size d^p (index X1*d^(p-1) + ... + Xp).
    std::vector<double> dense() const {
        std::size_t total = 1;
        for (int i = 0; i < degree_; ++i) total *= static_cast<std::size_t>(dim_);
        std::vector<double> out(total);
        MultiIndex idx(static_cast<std::size_t>(degree_), 0);
        for (std::size_t flat = 0; flat < total; ++flat) {
            std::size_t rem = flat;
            for (int k = degree_ - 1; k >= 0; --k) {
                idx[k] = static_cast<int>(rem % static_cast<std::size_t>(dim_));
                rem /= static_cast<std::size_t>(dim_);
            }
            out[flat] = (*this)(idx);
        }
        return out;
    }

    friend bool operator==(const SymTensor&, const SymTensor&) = default;

private:
    std::size_t rank_of(std::span<const int> index) const {
        if (static_cast<int>(index.size()) != degree_)
            fail(ErrorCategory::DimensionMismatch, "index length differs from tensor degree");
        int buf[32];
        MultiIndex heap;
        int* s = buf;
        if (index.size() > 32) {
            heap.assign(index.begin(), index.end());
            s = heap.data();
        } else {
            std::copy(index.begin(), index.end(), buf);
        }
        std::sort(s, s + index.size());
        // Colex rank of the strictly increasing sequence X_i + i.
        std::uint64_t r = 0;
        for (std::size_t i = 0; i < index.size(); ++i) {
            if (s[i] < 0 || s[i] >= dim_) fail(ErrorCategory::DimensionMismatch, "index component out of range");
            r += detail::binomial(s[i] + static_cast<int>(i), static_cast<int>(i) + 1);
        }
        return static_cast<std::size_t>(r);
    }

    // Next sorted multi-index in colex order of the shifted sequence.
    void advance(MultiIndex& idx) const {
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const int cap = (i + 1 < idx.size()) ? idx[i + 1] : dim_ - 1;
            if (idx[i] < cap) {
                ++idx[i];
                for (std::size_t j = 0; j < i; ++j) idx[j] = 0;
                return;
            }
        }
    }

    int degree_;
    int dim_;
    std::vector<double> values_;
};

enum class SymbolOrigin { explicit_coeffs, levy };

/// Truncated coefficient family C^(0..max_order) of a symbol Psi with Psi(0) = 0.
class OperatorSymbol {
public:
    OperatorSymbol(int dim, std::vector<SymTensor> coeffs, SymbolOrigin origin = SymbolOrigin::explicit_coeffs)
        : dim_(dim), coeffs_(std::move(coeffs)), origin_(origin) {
        if (dim < 1) fail(ErrorCategory::InvalidModel, "symbol dimension must be positive");
        if (coeffs_.empty()) coeffs_.push_back(SymTensor::scalar(0.0, dim));
        for (std::size_t n = 0; n < coeffs_.size(); ++n) {
            if (coeffs_[n].degree() != static_cast<int>(n) || coeffs_[n].dim() != dim)
                fail(ErrorCategory::InvalidModel, "coefficient " + std::to_string(n) + " has wrong degree or dimension");
        }
        if (coeffs_[0]({}) != 0.0)
            fail(ErrorCategory::InvalidModel, "Psi(0) must vanish; factor a killing rate out as exp(t*Psi(0))");
    }

    int dim() const noexcept { return dim_; }
    int max_order() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
    SymbolOrigin origin() const noexcept { return origin_; }

    const SymTensor& coeff(int n) const {
        if (n < 0 || n > max_order())
            fail(ErrorCategory::SymbolOrderMissing, "symbol order " + std::to_string(n) + " beyond truncation " + std::to_string(max_order()));
        return coeffs_[static_cast<std::size_t>(n)];
    }

    /// True when C^(n) is identically zero (or n is beyond a stored family that
    /// is explicitly zero-padded; orders beyond truncation are *not* vanishing).
    bool vanishes(int n) const { return coeff(n).is_zero(); }

    /// Psi(xi) summed through the stored orders.
    double evaluate(std::span<const double> xi) const {
        double acc = 0.0;
        for (int n = 1; n <= max_order(); ++n) acc += coeffs_[n].contract(xi) / detail::factorial(n);
        return acc;
    }

    const std::vector<SymTensor>& coeffs() const noexcept { return coeffs_; }

private:
    int dim_;
    std::vector<SymTensor> coeffs_;
    SymbolOrigin origin_;
};

/// Jump-diffusion data: drift a, diffusion matrix D, activity z and the
/// moment tensors r_n = int phi^{X1} ... phi^{Xn} dr(phi) of the jump law.
struct LevyJumpSpec {
    int dim = 1;
    std::vector<double> drift;
    std::vector<std::vector<double>> diffusion;
    double activity = 0.0;
    std::map<int, SymTensor> jump_moments;

    /// Largest n such that moments of orders 1..n are all present.
    int available_moment_order() const {
        int n = 0;
        while (jump_moments.count(n + 1)) ++n;
        return n;
    }

    void validate() const;
};

namespace detail {

inline double determinant(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    double det = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        if (a[piv][c] == 0.0) return 0.0;
        if (piv != c) {
            std::swap(a[piv], a[c]);
            det = -det;
        }
        det *= a[c][c];
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
        }
    }
    return det;
}

/// PSD test by the sign of every principal minor (exact criterion; 2^d minors).
inline bool is_positive_semidefinite(const std::vector<std::vector<double>>& m, double tol = 1e-12) {
    const std::size_t d = m.size();
    double scale = 1.0;
    for (const auto& row : m)
        for (double v : row) scale = std::max(scale, std::abs(v));
    for (std::uint32_t mask = 1; mask < (1u << d); ++mask) {
        std::vector<std::size_t> sel;
        for (std::size_t i = 0; i < d; ++i)
            if (mask & (1u << i)) sel.push_back(i);
        std::vector<std::vector<double>> sub(sel.size(), std::vector<double>(sel.size()));
        for (std::size_t i = 0; i < sel.size(); ++i)
            for (std::size_t j = 0; j < sel.size(); ++j) sub[i][j] = m[sel[i]][sel[j]];
        if (determinant(sub) < -tol * std::pow(scale, static_cast<double>(sel.size()))) return false;
    }
    return true;
}

} // namespace detail

inline void LevyJumpSpec::validate() const {
    if (dim < 1) fail(ErrorCategory::InvalidModel, "dim must be positive");
    if (static_cast<int>(drift.size()) != dim) fail(ErrorCategory::DimensionMismatch, "drift must have dim entries");
    if (static_cast<int>(diffusion.size()) != dim) fail(ErrorCategory::DimensionMismatch, "diffusion must be dim x dim");
    for (int i = 0; i < dim; ++i) {
        if (static_cast<int>(diffusion[i].size()) != dim) fail(ErrorCategory::DimensionMismatch, "diffusion must be dim x dim");
        for (int j = 0; j < dim; ++j)
            if (std::abs(diffusion[i][j] - diffusion[j][i]) > 1e-12 * (1.0 + std::abs(diffusion[i][j])))
                fail(ErrorCategory::InvalidModel, "diffusion matrix is not symmetric");
    }
    if (!(activity >= 0.0)) fail(ErrorCategory::NegativeActivity, "activity z must be >= 0");
    if (!detail::is_positive_semidefinite(diffusion)) fail(ErrorCategory::InvalidModel, "diffusion matrix is not positive semidefinite");
    for (const auto& [n, t] : jump_moments) {
        if (n < 1 || t.degree() != n || t.dim() != dim)
            fail(ErrorCategory::InvalidModel, "jump moment of order " + std::to_string(n) + " has wrong shape");
    }
}

/// Derivative coefficients of the Levy symbol, obtained by evaluating the
/// characteristic exponent i<a,xi> - <xi,D xi> + z int (e^{i<phi,xi>} - 1) dr
/// at imaginary argument, Psi(eta) = -<a,eta> + <eta,D eta> + z int (e^{-<phi,eta>} - 1) dr:
///   C^(1) = -(a + z r_1),  C^(2) = 2D + z r_2,  C^(n) = (-1)^n z r_n  (n >= 3).
inline OperatorSymbol levy_to_symbol(const LevyJumpSpec& spec, int max_order) {
    spec.validate();
    if (max_order < 0) fail(ErrorCategory::InvalidArgument, "max_order must be >= 0");
    const int d = spec.dim;
    if (spec.activity > 0.0 && spec.available_moment_order() < max_order)
        fail(ErrorCategory::MissingJumpMoments, "jump moments supplied only up to order " +
                                                    std::to_string(spec.available_moment_order()) + ", need " +
                                                    std::to_string(max_order));
    std::vector<SymTensor> c;
    c.push_back(SymTensor::scalar(0.0, d));
    for (int n = 1; n <= max_order; ++n) {
        SymTensor cn(n, d);
        const double sign = (n % 2 == 0) ? 1.0 : -1.0;
        if (spec.activity > 0.0) {
            const SymTensor& r = spec.jump_moments.at(n);
            r.for_each_entry([&](const MultiIndex& idx, double v) { cn.set(idx, sign * spec.activity * v); });
        }
        if (n == 1)
            for (int x = 0; x < d; ++x) cn.set({x}, cn({x}) - spec.drift[x]);
        if (n == 2)
            for (int x = 0; x < d; ++x)
                for (int y = x; y < d; ++y) cn.set({x, y}, cn({x, y}) + 2.0 * spec.diffusion[x][y]);
        c.push_back(std::move(cn));
    }
    return OperatorSymbol(d, std::move(c), SymbolOrigin::levy);
}

/// Adds the deterministic term that moves the evaluation point: the shifted
/// problem evaluated at phi = 0 equals the original problem at phi = shift
/// (at time t0). Only C^(1) changes, C^(1) -> C^(1) - shift / t0.
inline OperatorSymbol shift_symbol(const OperatorSymbol& sym, std::span<const double> shift, double t0) {
    if (!(t0 > 0.0)) fail(ErrorCategory::InvalidArgument, "shift_symbol needs t0 > 0");
    if (static_cast<int>(shift.size()) != sym.dim()) fail(ErrorCategory::DimensionMismatch, "shift vector size");
    std::vector<SymTensor> c = sym.coeffs();
    if (c.size() < 2) c.push_back(SymTensor(1, sym.dim()));
    for (int x = 0; x < sym.dim(); ++x) c[1].set({x}, c[1]({x}) - shift[x] / t0);
    return OperatorSymbol(sym.dim(), std::move(c), sym.origin());
}

/// Polynomial V of even top degree; f = exp(-V) is the initial condition.
class Potential {
public:
    Potential(int dim, std::vector<SymTensor> coeffs) : dim_(dim), coeffs_(std::move(coeffs)) {
        if (dim < 1) fail(ErrorCategory::InvalidModel, "potential dimension must be positive");
        if (coeffs_.empty()) coeffs_.push_back(SymTensor::scalar(0.0, dim));
        for (std::size_t p = 0; p < coeffs_.size(); ++p)
            if (coeffs_[p].degree() != static_cast<int>(p) || coeffs_[p].dim() != dim)
                fail(ErrorCategory::InvalidModel, "potential coefficient " + std::to_string(p) + " has wrong shape");
    }

    /// lambda * ||phi||^2.
    static Potential isotropic_quadratic(int dim, double lambda = 1.0) {
        std::vector<SymTensor> c{SymTensor::scalar(0.0, dim), SymTensor(1, dim), SymTensor(2, dim)};
        for (int x = 0; x < dim; ++x) c[2].set({x, x}, lambda);
        return Potential(dim, std::move(c));
    }

    int dim() const noexcept { return dim_; }
    int max_degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
    const SymTensor& coeff(int p) const { return coeffs_.at(static_cast<std::size_t>(p)); }
    const std::vector<SymTensor>& coeffs() const noexcept { return coeffs_; }

    /// Degrees p with lambda^(p) != 0, ascending.
    std::vector<int> active_degrees() const {
        std::vector<int> out;
        for (int p = 0; p <= max_degree(); ++p)
            if (!coeffs_[p].is_zero()) out.push_back(p);
        return out;
    }

    /// True when only lambda^(2) is non-zero.
    bool is_quadratic() const {
        const auto a = active_degrees();
        return a.size() == 1 && a[0] == 2;
    }

    double evaluate(std::span<const double> phi) const {
        double acc = 0.0;
        for (const auto& c : coeffs_) acc += c.contract(phi);
        return acc;
    }

private:
    int dim_;
    std::vector<SymTensor> coeffs_;
};

struct PotentialReport {
    bool accepted = true;
    std::optional<ErrorCategory> error;
    std::string message;
};

/// Accepts iff the top degree is even and the top form is positive: exact for
/// d = 1, otherwise checked on `samples` random unit vectors from a fixed seed.
inline PotentialReport validate_potential(const Potential& pot, int samples = 1000, std::uint64_t seed = 0x5eed0001ULL) {
    int top = pot.max_degree();
    while (top > 0 && pot.coeff(top).is_zero()) --top;
    if (top % 2 != 0)
        return {false, ErrorCategory::OddTopDegree, "top degree " + std::to_string(top) + " is odd"};
    const SymTensor& lead = pot.coeff(top);
    if (pot.dim() == 1) {
        MultiIndex ones(static_cast<std::size_t>(top), 0);
        if (!(lead(ones) > 0.0))
            return {false, ErrorCategory::NonPositiveTopTensor, "top coefficient must be positive"};
        return {};
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> u(static_cast<std::size_t>(pot.dim()));
    // Axis directions first: they catch the common diagonal failures exactly.
    for (int axis = 0; axis < pot.dim(); ++axis) {
        std::fill(u.begin(), u.end(), 0.0);
        u[axis] = 1.0;
        if (!(lead.contract(u) > 0.0))
            return {false, ErrorCategory::NonPositiveTopTensor, "top form non-positive along axis " + std::to_string(axis)};
    }
    for (int s = 0; s < samples; ++s) {
        double norm = 0.0;
        for (auto& x : u) {
            x = g(rng);
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (auto& x : u) x /= norm;
        if (!(lead.contract(u) > 0.0))
            return {false, ErrorCategory::NonPositiveTopTensor, "top form non-positive at a sampled unit vector"};
    }
    return {};
}

struct EvalPoint {
    double t = 1.0;
    std::vector<double> phi;

    void validate(int dim) const {
        if (!(t > 0.0)) fail(ErrorCategory::InvalidArgument, "evaluation time must be > 0");
        if (static_cast<int>(phi.size()) != dim) fail(ErrorCategory::DimensionMismatch, "phi has wrong dimension");
    }
};

} // namespace levygraph
