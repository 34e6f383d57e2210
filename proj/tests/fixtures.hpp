#pragma once

// Random model builders shared by the unit tests and the acceptance runner.

#include "levygraph/levygraph.hpp"
#include "oracles.hpp"

namespace fixtures {

using namespace levygraph;

/// Symbol with all entries of C^(1..max_order) drawn from [-scale, scale];
/// orders listed in `zero_orders` are left at zero.
inline OperatorSymbol random_symbol(int dim, int max_order, oracle::Draws& rng, double scale = 1.0,
                                    const std::vector<int>& zero_orders = {}) {
    std::vector<SymTensor> c{SymTensor::scalar(0.0, dim)};
    for (int n = 1; n <= max_order; ++n) {
        SymTensor t(n, dim);
        const bool zero = std::find(zero_orders.begin(), zero_orders.end(), n) != zero_orders.end();
        if (!zero) {
            std::vector<MultiIndex> idx;
            t.for_each_entry([&](const MultiIndex& i, double) { idx.push_back(i); });
            for (const auto& i : idx) t.set(i, rng.uniform(-scale, scale));
        }
        c.push_back(std::move(t));
    }
    return OperatorSymbol(dim, std::move(c));
}

/// Positive quadratic part plus, when `quartic`, a diagonal-dominant quartic.
inline Potential random_potential(int dim, bool quartic, oracle::Draws& rng) {
    std::vector<SymTensor> c{SymTensor::scalar(0.0, dim), SymTensor(1, dim), SymTensor(2, dim)};
    for (int x = 0; x < dim; ++x) c[2].set({x, x}, rng.uniform(0.3, 1.5));
    if (dim == 2) c[2].set({0, 1}, rng.uniform(-0.2, 0.2));
    if (quartic) {
        c.emplace_back(3, dim);
        c.emplace_back(4, dim);
        for (int x = 0; x < dim; ++x) c[4].set({x, x, x, x}, rng.uniform(0.2, 1.0));
        if (dim == 2) c[4].set({0, 0, 1, 1}, rng.uniform(0.0, 0.1));
    }
    return Potential(dim, std::move(c));
}

inline LevyJumpSpec scalar_levy(double a, double D, double z, const std::vector<double>& r) {
    LevyJumpSpec s;
    s.dim = 1;
    s.drift = {a};
    s.diffusion = {{D}};
    s.activity = z;
    for (std::size_t n = 1; n <= r.size(); ++n) {
        SymTensor t(static_cast<int>(n), 1);
        t.set(std::vector<int>(n, 0), r[n - 1]);
        s.jump_moments.emplace(static_cast<int>(n), t);
    }
    return s;
}

/// max(1, |x|): scale for the relative tolerances used throughout.
inline double scale(double x) { return std::max(1.0, std::abs(x)); }

} // namespace fixtures
