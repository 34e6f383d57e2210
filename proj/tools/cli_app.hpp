#pragma once

// Command-line front end. Kept in a header so the test suite can drive it
// in-process; tools/levygraph.cpp only forwards main().

#include "levygraph/levygraph.hpp"
#include "levygraph/io.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace levygraph::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kOrderCap = 6;

struct RunConfig {
    std::string command;
    std::string model_path;
    int order = 2;
    std::string resum;
    std::string grid;
    std::string phi;
    std::string alpha = "0.01,0.05,0.5,0.95,0.99";
    std::string sweep_z1;
    std::size_t n = 100000;
    std::uint64_t seed = 20080301;
    bool seed_from_env = false;
    std::string out;
    std::string format = "csv";
    std::string method = "topological";
    bool log = false;
    bool large_diffusion = false;
    bool d1_fast = false;
    bool experimental_log_borel = false;
    double beta = 1.0;
    unsigned threads = 0;

    json to_json() const {
        return json{{"command", command}, {"model", model_path},   {"order", order},     {"resum", resum},
                    {"grid", grid},       {"phi", phi},            {"alpha", alpha},     {"sweep_z1", sweep_z1},
                    {"n", n},             {"seed", seed},          {"seed_from_env", seed_from_env},
                    {"format", format},   {"method", method},      {"log", log},         {"large_diffusion", large_diffusion},
                    {"d1_fast", d1_fast}, {"beta", beta}};
    }
};

/// Raised for malformed arguments that CLI11 cannot detect (exit code 2).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError(std::string("malformed ") + what + " entry '" + item + "'");
        }
    }
    return out;
}

/// lo:hi:step, inclusive of hi up to rounding.
inline std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) {
        try {
            parts.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw UsageError("malformed grid '" + text + "' (expected lo:hi:step)");
        }
    }
    if (parts.size() != 3) throw UsageError("malformed grid '" + text + "' (expected lo:hi:step)");
    const double lo = parts[0], hi = parts[1], step = parts[2];
    if (!(step > 0.0) || !(hi >= lo)) throw UsageError("grid '" + text + "' is empty");
    std::vector<double> g;
    const auto count = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
    for (long long i = 0; i <= count; ++i) g.push_back(lo + step * static_cast<double>(i));
    if (g.empty()) throw UsageError("grid '" + text + "' is empty");
    return g;
}

class Output {
public:
    Output(const std::string& path, std::ostream& fallback) : fallback_(fallback) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) fail(ErrorCategory::Io, "cannot open output file '" + path + "'");
        }
    }
    std::ostream& os() { return file_.is_open() ? static_cast<std::ostream&>(file_) : fallback_; }

private:
    std::ofstream file_;
    std::ostream& fallback_;
};

inline void check_format(const RunConfig& c) {
    if (c.format != "csv" && c.format != "json") throw UsageError("format must be csv or json");
}

inline std::vector<std::vector<double>> evaluation_points(const RunConfig& c, int dim) {
    std::vector<std::vector<double>> pts;
    if (!c.grid.empty()) {
        if (dim != 1) throw UsageError("--grid needs a one-dimensional model; use --phi for d > 1");
        for (double x : parse_grid(c.grid)) pts.push_back({x});
        return pts;
    }
    if (!c.phi.empty()) {
        auto p = parse_list(c.phi, "phi");
        if (static_cast<int>(p.size()) != dim) throw UsageError("--phi needs " + std::to_string(dim) + " components");
        pts.push_back(p);
        return pts;
    }
    pts.emplace_back(static_cast<std::size_t>(dim), 0.0);
    return pts;
}

/// Series at one point for the expand command.
inline BetaSeries compute_series(const Model& model, const RunConfig& c, const std::vector<double>& phi, double center_shift = 0.0) {
    const int N = c.order;
    EvalPoint pt{model.t, phi};
    const SeriesMethod method = c.method == "raw" ? SeriesMethod::raw : SeriesMethod::topological;
    const bool ld = c.large_diffusion || !model.potential;
    if (ld) {
        pt.phi[0] -= center_shift;
        return large_diffusion_series(model.levy_spec(std::max(2 * N, 1)), pt, N, c.log, method);
    }
    const int pbar = model.potential->max_degree();
    const OperatorSymbol sym = model.symbol(std::max(1, N * pbar));
    if (c.d1_fast) {
        BetaSeries s = phi_series_1d(sym, *model.potential, pt, N);
        if (c.log) {
            s.coeffs = series_log(s.coeffs);
            s.kind = SeriesKind::log_phi;
        }
        return s;
    }
    return c.log ? log_phi_series(sym, *model.potential, pt, N, method) : phi_series(sym, *model.potential, pt, N, method);
}

inline int cmd_expand(const RunConfig& c, std::ostream& out) {
    check_format(c);
    const Model model = load_model(c.model_path);
    const auto pts = evaluation_points(c, model.dim);
    std::vector<BetaSeries> rows;
    for (const auto& p : pts) rows.push_back(compute_series(model, c, p));
    Output o(c.out, out);
    if (c.format == "json") {
        json j{{"config", c.to_json()}, {"model", model.source}, {"records", json::array()}};
        for (const auto& s : rows) j["records"].push_back(series_record(s));
        o.os() << j.dump(2) << "\n";
    } else {
        o.os() << "# config: " << c.to_json().dump() << "\n# model: " << model.source.dump() << "\n";
        o.os() << series_csv_header(c.order) << "\n";
        for (const auto& s : rows) o.os() << series_csv_row(s) << "\n";
    }
    return kExitOk;
}

/// Log-density in the coordinate of the grid, with the window used for
/// normalization and a Gaussian reference (mean, variance).
struct DensitySetup {
    LogDensity log_density;
    Window window;
    double mean = 0.0;
    double variance = 0.0;
    std::string mode;
};

inline DensitySetup density_setup(const Model& model, const RunConfig& c, const std::vector<double>& grid) {
    if (model.dim != 1) throw UsageError("density and quantiles need a one-dimensional model");
    const ResumMethod rm = ResumMethod::parse(c.resum.empty() ? "pade:1/1" : c.resum);
    const int N = c.order;
    const bool exp_log = c.experimental_log_borel;
    DensitySetup ds;
    if (model.jump_diffusion && !model.potential) {
        // Sample coordinate x; the series live at phi = x - E[Z].
        const JumpDiffusionModel jd = *model.jump_diffusion;
        const LevyJumpSpec spec = jd.levy_spec(std::max(2 * N, 1));
        const double center = jd.mean();
        const double beta = jd.beta;
        ds.mode = "jump_diffusion";
        ds.log_density = [spec, center, beta, N, rm, exp_log](double x) {
            const BetaSeries s = large_diffusion_series(spec, EvalPoint{1.0, {x - center}}, N, true);
            return resum(s, beta, rm, exp_log) + 0.5 * std::log(beta / std::numbers::pi);
        };
        ds.mean = center;
        ds.variance = jd.variance();
        ds.window = choose_window(ds.log_density, ds.mean, std::sqrt(ds.variance));
        return ds;
    }
    if (!model.potential) {
        const LevyJumpSpec spec = model.levy_spec(std::max(2 * N, 1));
        const double mu = isotropic_mu(spec);
        const double t = model.t;
        const double beta = 1.0 / (4.0 * mu * t);
        LevyJumpSpec jump = spec;
        jump.diffusion = {{0.0}};
        const OperatorSymbol js = levy_to_symbol(jump, std::max(2, 2 * N));
        ds.mode = "large_diffusion";
        ds.log_density = [spec, t, beta, N, rm, exp_log](double phi) {
            const BetaSeries s = large_diffusion_series(spec, EvalPoint{t, {phi}}, N, true);
            return resum(s, beta, rm, exp_log) + 0.5 * std::log(beta / std::numbers::pi);
        };
        ds.mean = t * js.coeff(1)({0});
        ds.variance = t * js.coeff(2)({0, 0}) + 2.0 * mu * t;
        ds.window = choose_window(ds.log_density, ds.mean, std::sqrt(ds.variance));
        return ds;
    }
    const OperatorSymbol sym = model.symbol(std::max(1, N * model.potential->max_degree()));
    const Potential pot = *model.potential;
    const double t = model.t;
    const double beta = c.beta;
    ds.mode = "potential";
    ds.log_density = [sym, pot, t, beta, N, rm, exp_log](double phi) {
        const BetaSeries s = log_phi_series(sym, pot, EvalPoint{t, {phi}}, N);
        return resum(s, beta, rm, exp_log);
    };
    ds.window = Window{grid.front(), grid.back()};
    ds.mean = 0.5 * (grid.front() + grid.back());
    ds.variance = 0.0;
    return ds;
}

inline int cmd_density(const RunConfig& c, std::ostream& out) {
    check_format(c);
    if (c.grid.empty()) throw UsageError("density needs --grid lo:hi:step");
    const auto grid = parse_grid(c.grid);
    const Model model = load_model(c.model_path);
    const DensitySetup ds = density_setup(model, c, grid);
    const double norm = normalize_density(ds.log_density, ds.window);
    Output o(c.out, out);
    json cfg = c.to_json();
    cfg["mode"] = ds.mode;
    cfg["window"] = {ds.window.lo, ds.window.hi};
    cfg["normalization"] = norm;
    if (c.format == "json") {
        json j{{"config", cfg}, {"model", model.source}, {"rows", json::array()}};
        for (double x : grid) {
            const double l = ds.log_density(x);
            j["rows"].push_back({{"phi", x}, {"log_density", l}, {"density", std::exp(l) / norm}});
        }
        o.os() << j.dump(2) << "\n";
    } else {
        o.os() << "# config: " << cfg.dump() << "\n# model: " << model.source.dump() << "\n";
        o.os() << "phi,log_density,density\n";
        for (double x : grid) {
            const double l = ds.log_density(x);
            o.os() << format_double(x) << "," << format_double(l) << "," << format_double(std::exp(l) / norm) << "\n";
        }
    }
    return kExitOk;
}

inline int cmd_quantiles(const RunConfig& c, std::ostream& out) {
    check_format(c);
    const Model model = load_model(c.model_path);
    const auto alphas = parse_list(c.alpha, "alpha");
    if (alphas.empty()) throw UsageError("quantiles needs at least one --alpha level");
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0)) throw UsageError("alpha levels must lie in (0, 1)");
    std::vector<double> grid;
    if (!c.grid.empty()) grid = parse_grid(c.grid);
    if (model.potential && grid.empty()) throw UsageError("quantiles for a potential model need --grid as the integration window");
    const DensitySetup ds = density_setup(model, c, grid.empty() ? std::vector<double>{0.0} : grid);
    const double norm = normalize_density(ds.log_density, ds.window);
    json cfg = c.to_json();
    cfg["mode"] = ds.mode;
    cfg["window"] = {ds.window.lo, ds.window.hi};
    cfg["normalization"] = norm;
    const bool with_gauss = ds.variance > 0.0;
    Output o(c.out, out);
    json rows = json::array();
    for (double a : alphas) {
        json r{{"alpha", a}, {"model", model_quantile(ds.log_density, norm, a, ds.window)}};
        if (with_gauss) r["gaussian"] = ds.mean + std::sqrt(ds.variance) * inverse_normal_cdf(a);
        rows.push_back(r);
    }
    if (c.format == "json") {
        o.os() << json{{"config", cfg}, {"model", model.source}, {"rows", rows}}.dump(2) << "\n";
    } else {
        o.os() << "# config: " << cfg.dump() << "\n# model: " << model.source.dump() << "\n";
        o.os() << (with_gauss ? "alpha,model,gaussian\n" : "alpha,model\n");
        for (const auto& r : rows) {
            o.os() << format_double(r["alpha"]) << "," << format_double(r["model"]);
            if (with_gauss) o.os() << "," << format_double(r["gaussian"]);
            o.os() << "\n";
        }
    }
    return kExitOk;
}

inline JumpDiffusionModel require_jump_diffusion(const Model& model) {
    if (!model.jump_diffusion) fail(ErrorCategory::InvalidModel, "this command needs a jump_diffusion block in the model");
    return *model.jump_diffusion;
}

inline int cmd_simulate(const RunConfig& c, std::ostream& out) {
    check_format(c);
    const Model model = load_model(c.model_path);
    const JumpDiffusionModel jd = require_jump_diffusion(model);
    if (c.n < 1) throw UsageError("--n must be >= 1");
    const Sample s = simulate(jd, c.n, c.seed, c.threads);
    Output o(c.out, out);
    if (c.format == "json") {
        o.os() << json{{"config", c.to_json()}, {"model", model.source}, {"seed", s.seed}, {"chunk_size", s.chunk_size}, {"values", s.values}}.dump()
               << "\n";
    } else {
        o.os() << "# config: " << c.to_json().dump() << "\n";
        write_sample_csv(o.os(), s);
    }
    return kExitOk;
}

inline int cmd_compare(const RunConfig& c, std::ostream& out) {
    check_format(c);
    const Model model = load_model(c.model_path);
    const JumpDiffusionModel base = require_jump_diffusion(model);
    if (c.n < 1000) throw UsageError("compare needs --n >= 1000");
    const auto alphas = parse_list(c.alpha, "alpha");
    if (alphas.empty()) throw UsageError("compare needs at least one --alpha level");
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0)) throw UsageError("alpha levels must lie in (0, 1)");
    std::vector<double> z1s = c.sweep_z1.empty() ? std::vector<double>{base.z1} : parse_list(c.sweep_z1, "sweep-z1");
    const bool default_shift = !model.source.at("jump_diffusion").contains("a");
    json rows = json::array();
    for (double z1 : z1s) {
        JumpDiffusionModel m = base;
        m.z1 = z1;
        if (default_shift) m.a = m.z1 * m.s1 - m.z2 * m.s2;
        const Comparison cmp = compare_quantiles(m, c.n, c.seed, alphas, c.threads);
        for (const auto& r : cmp.rows)
            rows.push_back({{"z1", z1},
                            {"alpha", r.alpha},
                            {"empirical", r.empirical},
                            {"pade", r.pade},
                            {"gaussian", r.gaussian},
                            {"abs_err_pade", r.pade_error()},
                            {"abs_err_gaussian", r.gaussian_error()},
                            {"normalization", cmp.normalization}});
    }
    Output o(c.out, out);
    if (c.format == "json") {
        o.os() << json{{"config", c.to_json()}, {"model", model.source}, {"rows", rows}}.dump(2) << "\n";
    } else {
        o.os() << "# config: " << c.to_json().dump() << "\n# model: " << model.source.dump() << "\n";
        o.os() << "z1,alpha,empirical,pade,gaussian,abs_err_pade,abs_err_gaussian\n";
        for (const auto& r : rows)
            o.os() << format_double(r["z1"]) << "," << format_double(r["alpha"]) << "," << format_double(r["empirical"]) << ","
                   << format_double(r["pade"]) << "," << format_double(r["gaussian"]) << "," << format_double(r["abs_err_pade"]) << ","
                   << format_double(r["abs_err_gaussian"]) << "\n";
    }
    return kExitOk;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Feynman-graph expansions, resummation and Monte Carlo checks for Levy densities"};
    app.require_subcommand(1);
    RunConfig cfg;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--model", cfg.model_path, "model JSON file")->required();
        sub->add_option("--order", cfg.order, "expansion order N")->check(CLI::Range(0, kOrderCap));
        sub->add_option("--resum", cfg.resum, "partial | pade:M/N | borel:K");
        sub->add_option("--grid", cfg.grid, "evaluation grid lo:hi:step");
        sub->add_option("--out", cfg.out, "output file (default stdout)");
        sub->add_option("--format", cfg.format, "csv | json");
    };
    auto* expand = app.add_subcommand("expand", "write beta-series coefficients");
    add_common(expand);
    expand->add_option("--phi", cfg.phi, "single evaluation point, comma separated");
    expand->add_flag("--log", cfg.log, "connected (log) expansion");
    expand->add_flag("--large-diffusion", cfg.large_diffusion, "expansion in beta = 1/(4 mu t) of the jump-diffusion density");
    expand->add_flag("--d1-fast", cfg.d1_fast, "scalar path without graph enumeration");
    expand->add_option("--method", cfg.method, "raw | topological")->check(CLI::IsMember({"raw", "topological"}));

    auto* density = app.add_subcommand("density", "resummed log-density and normalized density on a grid");
    add_common(density);
    density->add_option("--beta", cfg.beta, "series variable for potential models");
    density->add_flag("--experimental-log-borel", cfg.experimental_log_borel, "allow Borel resummation of log series");

    auto* quant = app.add_subcommand("quantiles", "quantiles of the normalized resummed density");
    add_common(quant);
    quant->add_option("--alpha", cfg.alpha, "quantile levels a1,a2,...");
    quant->add_option("--beta", cfg.beta, "series variable for potential models");
    quant->add_flag("--experimental-log-borel", cfg.experimental_log_borel, "allow Borel resummation of log series");

    auto* sim = app.add_subcommand("simulate", "draw a seeded jump-diffusion sample");
    add_common(sim);
    sim->add_option("--n", cfg.n, "sample size");
    sim->add_option("--seed", cfg.seed, "64-bit seed (LEVYGRAPH_SEED overrides)");
    sim->add_option("--threads", cfg.threads, "worker threads (0 = all cores)");

    auto* cmp = app.add_subcommand("compare", "empirical vs Pade vs Gaussian quantiles");
    add_common(cmp);
    cmp->add_option("--alpha", cfg.alpha, "quantile levels a1,a2,...");
    cmp->add_option("--n", cfg.n, "sample size");
    cmp->add_option("--seed", cfg.seed, "64-bit seed (LEVYGRAPH_SEED overrides)");
    cmp->add_option("--sweep-z1", cfg.sweep_z1, "comma-separated z1 values");
    cmp->add_option("--threads", cfg.threads, "worker threads (0 = all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }
    if (const char* env = std::getenv("LEVYGRAPH_SEED")) {
        try {
            cfg.seed = std::stoull(env);
            cfg.seed_from_env = true;
        } catch (const std::exception&) {
            err << "usage error: LEVYGRAPH_SEED is not an unsigned integer\n";
            return kExitUsage;
        }
    }
    try {
        if (expand->parsed()) {
            cfg.command = "expand";
            return cmd_expand(cfg, out);
        }
        if (density->parsed()) {
            cfg.command = "density";
            return cmd_density(cfg, out);
        }
        if (quant->parsed()) {
            cfg.command = "quantiles";
            return cmd_quantiles(cfg, out);
        }
        if (sim->parsed()) {
            cfg.command = "simulate";
            return cmd_simulate(cfg, out);
        }
        cfg.command = "compare";
        return cmd_compare(cfg, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "error[" << category_name(e.category()) << "]: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error[Internal]: " << e.what() << "\n";
        return kExitRuntime;
    }
}

} // namespace levygraph::cli
