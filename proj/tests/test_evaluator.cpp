#include "fixtures.hpp"

#include <catch_amalgamated.hpp>

using namespace levygraph;
using fixtures::scale;
using Catch::Approx;

namespace {

OperatorSymbol scalar_symbol(const std::vector<double>& C) {
    std::vector<SymTensor> c{SymTensor::scalar(0.0)};
    for (std::size_t n = 1; n < C.size(); ++n) {
        SymTensor t(static_cast<int>(n), 1);
        t.set(std::vector<int>(n, 0), C[n]);
        c.push_back(t);
    }
    return OperatorSymbol(1, c);
}

FeynmanGraph single(const std::vector<int>& block_of, int blocks) { return FeynmanGraph({2}, block_of, blocks); }

void check_series(const std::vector<double>& got, const std::vector<double>& want, double tol) {
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= tol * scale(want[i]));
}

} // namespace

TEST_CASE("truncated moments", "[evaluator]") {
    const OperatorSymbol s = scalar_symbol({0, 0.3, 1.2, -0.4});
    const std::vector<int> two{0, 0};
    CHECK(truncated_moment(s, 2.0, two) == Approx(2.4));
    CHECK(truncated_moment(s, 0.0, two) == 0.0);
    const std::vector<int> five(5, 0);
    CHECK_THROWS_AS(truncated_moment(s, 1.0, five), Error);

    const double z = 1.3, sj = 0.7, t = 0.9;
    std::vector<double> r;
    for (int n = 1; n <= 4; ++n) r.push_back(std::pow(sj, n));
    const OperatorSymbol cp = levy_to_symbol(fixtures::scalar_levy(0, 0, z, r), 4);
    const std::vector<int> four(4, 0);
    CHECK(truncated_moment(cp, t, four) == Approx(t * z * std::pow(sj, 4)));
}

TEST_CASE("moments from truncated moments", "[evaluator]") {
    const OperatorSymbol s = scalar_symbol({0, 0.0, 1.5, 0.0, 0.8});
    const std::vector<int> one{0}, four(4, 0);
    CHECK(moment(s, 2.0, one) == 0.0);
    CHECK(moment(s, 2.0, four) == Approx(2.0 * 0.8 + 3.0 * std::pow(2.0 * 1.5, 2)));

    const double z = 1.1, sj = 0.6, t = 1.7;
    std::vector<double> r{sj, sj * sj};
    const OperatorSymbol cp = levy_to_symbol(fixtures::scalar_levy(0, 0, z, r), 2);
    const std::vector<int> two{0, 0};
    CHECK(moment(cp, t, two) == Approx(t * z * sj * sj + std::pow(t * z * sj, 2)));
}

TEST_CASE("moments match power-series exponentiation", "[evaluator][property]") {
    oracle::Draws rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> C{0.0};
        for (int n = 1; n <= 6; ++n) C.push_back(rng.uniform(-1, 1));
        const double t = rng.uniform(0.1, 2.0);
        const auto want = oracle::scalar_moments(C, t, 6);
        const OperatorSymbol s = scalar_symbol(C);
        for (int n = 1; n <= 6; ++n) {
            const std::vector<int> idx(static_cast<std::size_t>(n), 0);
            CHECK(std::abs(moment(s, t, idx) - want[n]) <= 1e-10 * scale(want[n]));
        }
    }
}

TEST_CASE("Feynman rules on first-order graphs", "[evaluator]") {
    const double lambda = 0.8, t = 1.4, phi = -0.6, C2 = 0.9;
    const OperatorSymbol s = scalar_symbol({0, 0.0, C2});
    const Potential pot = Potential::isotropic_quadratic(1, lambda);
    const EvalPoint pt{t, {phi}};
    CHECK(eval_graph(single({-1, -1}, 0), s, pot, pt) == Approx(lambda * phi * phi));
    CHECK(eval_graph(single({0, 0}, 1), s, pot, pt) == Approx(lambda * t * C2));
    CHECK(eval_graph(FeynmanGraph(), s, pot, pt) == 1.0);

    const BetaSeries first = phi_series(s, pot, pt, 1);
    CHECK(first.coeffs[0] == 1.0);
    CHECK(first.coeffs[1] == Approx(-lambda * (t * C2 + phi * phi)));
    CHECK(phi_series(s, pot, pt, 0).coeffs == std::vector<double>{1.0});
}

TEST_CASE("quadratic rules agree with the general rules", "[evaluator][property]") {
    oracle::Draws rng(5);
    for (int dim = 1; dim <= 2; ++dim) {
        const OperatorSymbol s = fixtures::random_symbol(dim, 4, rng);
        const double lambda = rng.uniform(0.2, 2.0);
        const Potential pot = Potential::isotropic_quadratic(dim, lambda);
        EvalPoint pt{rng.uniform(0.2, 2), {}};
        for (int x = 0; x < dim; ++x) pt.phi.push_back(rng.uniform(-1.5, 1.5));
        for (int m = 0; m <= 2; ++m)
            for (const QuadGraph& q : collect_quad_graphs(m)) {
                const double a = eval_quad_graph(q, s, lambda, pt);
                const double b = eval_graph(from_quad_graph(q), s, pot, pt);
                CHECK(std::abs(a - b) <= 1e-12 * scale(b));
            }
        // One edge with both ends outer: lambda ||phi||^2.
        const QuadGraph line{0, 2, {{0, 1}}};
        double norm2 = 0.0;
        for (double v : pt.phi) norm2 += v * v;
        CHECK(eval_quad_graph(line, s, lambda, pt) == Approx(lambda * norm2));
        CHECK(eval_quad_graph(QuadGraph{}, s, lambda, pt) == 1.0);
    }
    std::vector<SymTensor> off{SymTensor::scalar(0.0, 2), SymTensor(1, 2), SymTensor(2, 2)};
    off[2].set({0, 0}, 1.0);
    off[2].set({1, 1}, 1.0);
    off[2].set({0, 1}, 0.3);
    CHECK_THROWS_AS(isotropic_lambda(Potential(2, off)), Error);
}

TEST_CASE("Gaussian closed form through order five", "[evaluator]") {
    oracle::Draws rng(3);
    const Potential pot = Potential::isotropic_quadratic(1);
    for (int trial = 0; trial < 10; ++trial) {
        const double mu = rng.uniform(0.1, 3), t = rng.uniform(0.1, 3), phi = rng.uniform(0.1, 3);
        // Order 5 reaches C^(10); the higher coefficients are explicitly zero.
        std::vector<double> C(11, 0.0);
        C[2] = 2.0 * mu;
        const OperatorSymbol s = scalar_symbol(C);
        const auto want = oracle::gaussian_series(mu, t, phi, 5);
        check_series(phi_series(s, pot, EvalPoint{t, {phi}}, 5).coeffs, want, 1e-10);
        check_series(phi_series_1d(s, pot, EvalPoint{t, {phi}}, 5).coeffs, want, 1e-10);
    }
}

TEST_CASE("raw and topological paths agree", "[evaluator][property]") {
    oracle::Draws rng(17);
    struct Case {
        int dim;
        bool quartic;
        int N;
    };
    // d = 2 quartic stops at order 2: raw order 3 means ~3e7 graphs times 2^12 index sums.
    for (const Case& c : {Case{1, false, 3}, Case{2, false, 3}, Case{1, true, 3}, Case{2, true, 2}}) {
        const Potential pot = fixtures::random_potential(c.dim, c.quartic, rng);
        const int pbar = c.quartic ? 4 : 2;
        // C^(1) = 0 keeps the quartic raw enumeration small.
        const OperatorSymbol s = fixtures::random_symbol(c.dim, c.N * pbar, rng, 0.8, c.quartic ? std::vector<int>{1} : std::vector<int>{});
        EvalPoint pt{rng.uniform(0.2, 1.5), {}};
        for (int x = 0; x < c.dim; ++x) pt.phi.push_back(rng.uniform(-1, 1));
        const auto raw = phi_series(s, pot, pt, c.N, SeriesMethod::raw).coeffs;
        const auto topo = phi_series(s, pot, pt, c.N, SeriesMethod::topological).coeffs;
        // Same terms, different summation order: only rounding separates them.
        check_series(topo, raw, 1e-10);
        const auto lraw = log_phi_series(s, pot, pt, c.N, SeriesMethod::raw).coeffs;
        const auto ltopo = log_phi_series(s, pot, pt, c.N, SeriesMethod::topological).coeffs;
        check_series(ltopo, lraw, 1e-10);
    }
}

TEST_CASE("exponential of the connected series is the full series", "[evaluator][property]") {
    oracle::Draws rng(23);
    for (int trial = 0; trial < 6; ++trial) {
        const int dim = 1 + trial % 2;
        const Potential pot = fixtures::random_potential(dim, trial >= 4, rng);
        const int N = 3;
        const OperatorSymbol s = fixtures::random_symbol(dim, N * pot.max_degree(), rng, 0.7);
        EvalPoint pt{rng.uniform(0.2, 1.5), {}};
        for (int x = 0; x < dim; ++x) pt.phi.push_back(rng.uniform(-1, 1));
        const BetaSeries full = phi_series(s, pot, pt, N);
        const BetaSeries conn = log_phi_series(s, pot, pt, N);
        CHECK(conn.coeffs[0] == 0.0);
        CHECK(conn.kind == SeriesKind::log_phi);
        CHECK(full.coeffs[0] == 1.0);
        check_series(series_exp(conn.coeffs), full.coeffs, 1e-10);
        check_series(series_log(full.coeffs), conn.coeffs, 1e-10);
    }
}

TEST_CASE("second-order connected coefficient for quadratic potentials", "[evaluator]") {
    // Explicit C^(n) = z r_n: h_2 = (t z r4 + 2 t^2 z^2 r2^2 + 4 t z r2 phi^2 - 4 t z r3 phi) / 2;
    // the phi-odd term flips with the sign convention of C^(3).
    const double z = 0.9, t = 1.2, phi = 0.7, r2 = 1.1, r3 = 0.6, r4 = 2.3;
    const OperatorSymbol s = scalar_symbol({0, 0, z * r2, z * r3, z * r4});
    const BetaSeries l = log_phi_series(s, Potential::isotropic_quadratic(1), EvalPoint{t, {phi}}, 2);
    CHECK(l.coeffs[1] == Approx(-(t * z * r2 + phi * phi)));
    const double X = t * z * r4 + 2 * t * t * z * z * r2 * r2 + 4 * t * z * r2 * phi * phi - 4 * t * z * r3 * phi;
    CHECK(l.coeffs[2] == Approx(0.5 * X));
}

TEST_CASE("connected classes at second order", "[evaluator]") {
    GraphFilter f;
    f.vanishing_block_order = {false, true};
    f.connected_only = true;
    const auto classes = topo_classes(2, Potential::isotropic_quadratic(1), f);
    CHECK(classes.size() == 4);
}

TEST_CASE("scalar fast path equals graph enumeration", "[evaluator][property]") {
    oracle::Draws rng(29);
    for (int trial = 0; trial < 8; ++trial) {
        const Potential pot = fixtures::random_potential(1, trial % 2 == 1, rng);
        const int N = 3;
        const OperatorSymbol s = fixtures::random_symbol(1, N * pot.max_degree(), rng, 0.8);
        const EvalPoint pt{rng.uniform(0.2, 2), {rng.uniform(-1.5, 1.5)}};
        check_series(phi_series_1d(s, pot, pt, N).coeffs, phi_series(s, pot, pt, N).coeffs, 1e-12);
    }
    const Potential zero(1, {SymTensor::scalar(0.0)});
    const OperatorSymbol s = scalar_symbol({0, 0.2, 1.0});
    CHECK(phi_series_1d(s, zero, EvalPoint{1.0, {0.3}}, 3).coeffs == std::vector<double>{1.0, 0.0, 0.0, 0.0});
    CHECK_THROWS_AS(phi_series_1d(fixtures::random_symbol(2, 2, rng), Potential::isotropic_quadratic(2), EvalPoint{1.0, {0, 0}}, 1),
                    Error);
}

TEST_CASE("odd-order pruning is sound for symmetric jumps", "[evaluator][property]") {
    oracle::Draws rng(31);
    const Potential pot = Potential::isotropic_quadratic(1, 0.7);
    const OperatorSymbol s = fixtures::random_symbol(1, 6, rng, 1.0, {1, 3, 5});
    const EvalPoint pt{0.8, {0.4}};
    // The assembler prunes vanishing orders; without pruning the raw sum must match.
    const BetaSeries pruned = phi_series(s, pot, pt, 3, SeriesMethod::raw);
    const detail::EvalContext ctx(s, pot, pt);
    std::vector<double> unpruned{1.0};
    for (int m = 1; m <= 3; ++m) {
        double sum = 0.0;
        enumerate_graphs(m, pot, {}, [&](const FeynmanGraph& g) { sum += detail::eval_graph(g, ctx); });
        unpruned.push_back(detail::signed_weight(m) * sum);
    }
    check_series(pruned.coeffs, unpruned, 1e-14);
}

TEST_CASE("distribution-function series", "[evaluator]") {
    const double lambda = 0.6, t = 0.8, C2 = 1.3, a = -0.7, b = 1.1;
    const OperatorSymbol s = scalar_symbol({0, 0, C2, 0.4, 0.5, -0.2, 0.3});
    const Potential pot = Potential::isotropic_quadratic(1, lambda);
    const auto cdf = cdf_series(s, pot, a, b, t, 3);
    CHECK(cdf[0] == Approx(b - a));
    CHECK(cdf[1] == Approx(-lambda * (t * C2 * (b - a) + (b * b * b - a * a * a) / 3.0)));
    for (int m = 0; m <= 3; ++m) {
        const double q = oracle::simpson(
            [&](double x) { return phi_series_1d(s, pot, EvalPoint{t, {x}}, 3).coeffs[m]; }, a, b, 200);
        CHECK(std::abs(cdf[m] - q) <= 1e-9 * scale(q));
    }
    // The printed transcription is the mirrored, negated integral.
    const auto literal = cdf_series_literal(s, pot, a, b, t, 3);
    const auto mirrored = cdf_series(s, pot, -b, -a, t, 3);
    for (int m = 0; m <= 3; ++m) CHECK(literal[m] == Approx(-mirrored[m]));
    CHECK_THROWS_AS(cdf_series(s, pot, 1.0, 1.0, t, 2), Error);
}

TEST_CASE("large-diffusion series", "[evaluator]") {
    oracle::Draws rng(37);
    for (int trial = 0; trial < 5; ++trial) {
        const double mu = rng.uniform(0.1, 3), t = rng.uniform(0.1, 3), phi = rng.uniform(-2, 2);
        const BetaSeries s = large_diffusion_series(fixtures::scalar_levy(0, mu, 0, {}), EvalPoint{t, {phi}}, 4, false);
        // Without jumps the normalized density is exp(-beta phi^2) exactly.
        std::vector<double> want(5, 0.0);
        double f = 1.0;
        for (int m = 0; m <= 4; ++m) {
            if (m > 0) f *= m;
            want[m] = std::pow(-phi * phi, m) / f;
        }
        check_series(s.coeffs, want, 1e-12);
        CHECK(s.kind == SeriesKind::large_diffusion);
    }

    // Second-order log coefficients behind the closed-form Pade density.
    const double z = 1.4, t = 0.9, phi = 0.8;
    const std::vector<double> r{0.5, 1.2, 0.7, 2.1};
    const BetaSeries l = large_diffusion_series(fixtures::scalar_levy(-z * r[0], 0.3, z, r), EvalPoint{t, {phi}}, 2, true);
    const double r2 = r[1], r3 = r[2], r4 = r[3];
    CHECK(l.coeffs[0] == 0.0);
    CHECK(l.coeffs[1] == Approx(-(t * z * r2 + phi * phi)));
    CHECK(l.coeffs[2] == Approx(0.5 * (t * z * r4 + 2 * t * t * z * z * r2 * r2 + 4 * t * z * r2 * phi * phi + 4 * t * z * r3 * phi)));

    // Coefficients do not depend on mu; the 1/mu form rescales by (4t)^-m.
    const BetaSeries other = large_diffusion_series(fixtures::scalar_levy(-z * r[0], 5.0, z, r), EvalPoint{t, {phi}}, 2, true);
    check_series(other.coeffs, l.coeffs, 1e-15);
    const auto inv = inverse_mu_coefficients(l);
    for (int m = 0; m <= 2; ++m) CHECK(inv[m] == Approx(l.coeffs[m] / std::pow(4 * t, m)));

    LevyJumpSpec aniso;
    aniso.dim = 2;
    aniso.drift = {0, 0};
    aniso.diffusion = {{1.0, 0.0}, {0.0, 2.0}};
    CHECK_THROWS_AS(large_diffusion_series(aniso, EvalPoint{1.0, {0, 0}}, 1, false), Error);
}

TEST_CASE("large-diffusion drift is a shift of phi", "[evaluator][property]") {
    oracle::Draws rng(41);
    for (int trial = 0; trial < 5; ++trial) {
        const double a = rng.uniform(-1, 1), z = rng.uniform(0.1, 1.5), t = rng.uniform(0.3, 2), phi = rng.uniform(-1, 1);
        std::vector<double> r;
        for (int n = 1; n <= 6; ++n) r.push_back(rng.uniform(-1, 1));
        const auto with = large_diffusion_series(fixtures::scalar_levy(a, 0.5, z, r), EvalPoint{t, {phi}}, 3, false).coeffs;
        const auto without = large_diffusion_series(fixtures::scalar_levy(0, 0.5, z, r), EvalPoint{t, {phi + a * t}}, 3, false).coeffs;
        check_series(with, without, 1e-12);
    }
}

TEST_CASE("formal exp and log are inverse", "[evaluator]") {
    const std::vector<double> f{0.0, 0.3, -1.2, 0.7, 2.0};
    check_series(series_log(series_exp(f)), f, 1e-14);
    CHECK_THROWS_AS(series_log({0.0, 1.0}), Error);
}
