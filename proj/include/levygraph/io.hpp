#pragma once

// JSON model files and series / sample records. Requires nlohmann/json.

#include "levygraph/core_model.hpp"
#include "levygraph/evaluator.hpp"
#include "levygraph/montecarlo.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>

namespace levygraph {

using json = nlohmann::json;

/// Parsed model file. Either `levy` or `coeffs` (or a `jump_diffusion`
/// block, from which Levy data is derived) determines the symbol.
struct Model {
    int dim = 1;
    double t = 1.0;
    std::optional<LevyJumpSpec> levy;
    std::optional<std::vector<SymTensor>> coeffs;
    std::optional<Potential> potential;
    std::optional<JumpDiffusionModel> jump_diffusion;
    json source;

    /// Symbol truncated at `max_order`. Explicit coefficient families are
    /// finite: unlisted orders are zero.
    OperatorSymbol symbol(int max_order) const {
        if (levy) return levy_to_symbol(*levy, max_order);
        if (coeffs) {
            std::vector<SymTensor> c;
            for (int n = 0; n <= max_order; ++n)
                c.push_back(n < static_cast<int>(coeffs->size()) ? (*coeffs)[n] : SymTensor(n, dim));
            return OperatorSymbol(dim, std::move(c));
        }
        if (jump_diffusion) return levy_to_symbol(jump_diffusion->levy_spec(std::max(max_order, 1)), max_order);
        fail(ErrorCategory::InvalidModel, "model defines no symbol (need levy, coeffs or jump_diffusion)");
    }

    /// Levy data, derived from the jump-diffusion block when needed.
    LevyJumpSpec levy_spec(int max_moment) const {
        if (levy) return *levy;
        if (jump_diffusion) return jump_diffusion->levy_spec(max_moment);
        fail(ErrorCategory::InvalidModel, "model has no Levy data");
    }
};

namespace detail {

inline double number(const json& j, const std::string& what) {
    if (!j.is_number()) fail(ErrorCategory::InvalidModel, what + " must be a number");
    return j.get<double>();
}

inline void collect_dense(const json& j, int depth, std::vector<int>& idx, std::vector<std::pair<std::vector<int>, double>>& out,
                          int dim, const std::string& what) {
    if (depth == 0) {
        out.emplace_back(idx, number(j, what));
        return;
    }
    if (!j.is_array() || static_cast<int>(j.size()) != dim)
        fail(ErrorCategory::InvalidModel, what + " must be a nested array of extent dim");
    for (int x = 0; x < dim; ++x) {
        idx.push_back(x);
        collect_dense(j[x], depth - 1, idx, out, dim, what);
        idx.pop_back();
    }
}

} // namespace detail

/// Tensor of degree n from either a dense nested array (extent dim per level;
/// must be symmetric) or a sparse list of {"index": [sorted ints], "value": v}.
/// For dim = 1 a bare number is accepted at any order.
inline SymTensor parse_tensor(const json& j, int n, int dim, const std::string& what) {
    SymTensor t(n, dim);
    if (dim == 1 && j.is_number()) {
        t.set(std::vector<int>(static_cast<std::size_t>(n), 0), j.get<double>());
        return t;
    }
    if (n == 0) {
        if (j.is_array() && j.size() == 1) return SymTensor::scalar(detail::number(j[0], what), dim);
        return SymTensor::scalar(detail::number(j, what), dim);
    }
    if (j.is_array() && !j.empty() && j[0].is_object()) {
        for (const auto& e : j) {
            if (!e.contains("index") || !e.contains("value")) fail(ErrorCategory::InvalidModel, what + ": sparse entries need index and value");
            std::vector<int> idx = e.at("index").get<std::vector<int>>();
            if (static_cast<int>(idx.size()) != n) fail(ErrorCategory::InvalidModel, what + ": index length must equal the order");
            if (!std::is_sorted(idx.begin(), idx.end())) fail(ErrorCategory::InvalidModel, what + ": multi-indices must be sorted");
            for (int x : idx)
                if (x < 0 || x >= dim) fail(ErrorCategory::InvalidModel, what + ": index out of range");
            t.set(idx, detail::number(e.at("value"), what));
        }
        return t;
    }
    std::vector<std::pair<std::vector<int>, double>> entries;
    std::vector<int> idx;
    detail::collect_dense(j, n, idx, entries, dim, what);
    for (const auto& [i, v] : entries) {
        if (std::is_sorted(i.begin(), i.end())) t.set(i, v);
    }
    for (const auto& [i, v] : entries)
        if (std::abs(t(i) - v) > 1e-12 * std::max(1.0, std::abs(v)))
            fail(ErrorCategory::InvalidModel, what + " is not symmetric");
    return t;
}

inline JumpDiffusionModel parse_jump_diffusion(const json& j) {
    JumpDiffusionModel m;
    m.beta = detail::number(j.at("beta"), "jump_diffusion.beta");
    m.z1 = j.value("z1", 0.0);
    m.z2 = j.value("z2", 0.0);
    m.s1 = j.value("s1", 1.0);
    m.s2 = j.value("s2", 1.0);
    if (j.contains("a"))
        m.a = detail::number(j.at("a"), "jump_diffusion.a");
    else
        m.a = m.z1 * m.s1 - m.z2 * m.s2;
    m.validate();
    return m;
}

inline Model parse_model(const json& j) {
    Model m;
    m.source = j;
    try {
        m.dim = j.value("dim", 1);
        if (m.dim < 1) fail(ErrorCategory::InvalidModel, "dim must be >= 1");
        m.t = j.value("t", 1.0);
        if (!(m.t > 0.0)) fail(ErrorCategory::InvalidModel, "t must be > 0");
        if (j.contains("levy")) {
            const json& l = j.at("levy");
            LevyJumpSpec s;
            s.dim = m.dim;
            s.drift = l.contains("drift") ? l.at("drift").get<std::vector<double>>() : std::vector<double>(m.dim, 0.0);
            if (l.contains("diffusion")) {
                s.diffusion = l.at("diffusion").get<std::vector<std::vector<double>>>();
            } else {
                s.diffusion.assign(m.dim, std::vector<double>(m.dim, 0.0));
            }
            s.activity = l.value("activity", 0.0);
            if (l.contains("jump_moments"))
                for (const auto& [key, val] : l.at("jump_moments").items()) {
                    const int n = std::stoi(key);
                    if (n < 1) fail(ErrorCategory::InvalidModel, "jump moment orders start at 1");
                    s.jump_moments.emplace(n, parse_tensor(val, n, m.dim, "jump_moments." + key));
                }
            s.validate();
            m.levy = std::move(s);
        }
        if (j.contains("coeffs")) {
            std::vector<SymTensor> c{SymTensor::scalar(0.0, m.dim)};
            int top = 0;
            for (const auto& [key, val] : j.at("coeffs").items()) top = std::max(top, std::stoi(key));
            for (int n = 1; n <= top; ++n) c.emplace_back(n, m.dim);
            for (const auto& [key, val] : j.at("coeffs").items()) {
                const int n = std::stoi(key);
                if (n < 0) fail(ErrorCategory::InvalidModel, "coefficient orders must be >= 0");
                c[n] = parse_tensor(val, n, m.dim, "coeffs." + key);
            }
            OperatorSymbol check(m.dim, c); // enforces Psi(0) = 0
            m.coeffs = std::move(c);
        }
        if (j.contains("potential")) {
            std::vector<SymTensor> c{SymTensor::scalar(0.0, m.dim)};
            int top = 0;
            for (const auto& [key, val] : j.at("potential").items()) top = std::max(top, std::stoi(key));
            for (int p = 1; p <= top; ++p) c.emplace_back(p, m.dim);
            for (const auto& [key, val] : j.at("potential").items()) {
                const int p = std::stoi(key);
                if (p < 0) fail(ErrorCategory::InvalidModel, "potential degrees must be >= 0");
                c[p] = parse_tensor(val, p, m.dim, "potential." + key);
            }
            Potential pot(m.dim, std::move(c));
            const PotentialReport rep = validate_potential(pot);
            if (!rep.accepted) fail(*rep.error, rep.message);
            m.potential = std::move(pot);
        }
        if (j.contains("jump_diffusion")) {
            if (m.dim != 1) fail(ErrorCategory::DimensionMismatch, "jump_diffusion models are one-dimensional");
            m.jump_diffusion = parse_jump_diffusion(j.at("jump_diffusion"));
        }
    } catch (const json::exception& e) {
        fail(ErrorCategory::InvalidModel, std::string("malformed model: ") + e.what());
    } catch (const std::invalid_argument&) {
        fail(ErrorCategory::InvalidModel, "malformed order key in model");
    }
    return m;
}

inline Model load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCategory::Io, "cannot open model file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(ErrorCategory::InvalidModel, std::string("model file is not valid JSON: ") + e.what());
    }
    return parse_model(j);
}

inline constexpr const char* kBetaDefinition = "1/(4*mu*t)";

inline json series_record(const BetaSeries& s) {
    return json{{"kind", std::string(kind_name(s.kind))},
                {"t", s.t},
                {"phi", s.phi},
                {"N", s.order()},
                {"coeffs", s.coeffs},
                {"beta_definition", kBetaDefinition}};
}

inline std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

/// CSV header for series rows with coefficients h_0..h_N.
inline std::string series_csv_header(int N) {
    std::string h = "kind,t,phi,N,beta_definition";
    for (int m = 0; m <= N; ++m) h += ",h" + std::to_string(m);
    return h;
}

/// phi components are joined with ';' inside one CSV field.
inline std::string series_csv_row(const BetaSeries& s) {
    std::string phi;
    for (std::size_t i = 0; i < s.phi.size(); ++i) phi += (i ? ";" : "") + format_double(s.phi[i]);
    std::string row = std::string(kind_name(s.kind)) + "," + format_double(s.t) + "," + phi + "," + std::to_string(s.order()) + "," +
                      kBetaDefinition;
    for (double c : s.coeffs) row += "," + format_double(c);
    return row;
}

inline json model_record(const JumpDiffusionModel& m) {
    return json{{"a", m.a}, {"beta", m.beta}, {"z1", m.z1}, {"z2", m.z2}, {"s1", m.s1}, {"s2", m.s2}};
}

/// One value per line after a comment header naming model and seed.
inline void write_sample_csv(std::ostream& os, const Sample& s) {
    os << "# model " << model_record(s.model).dump() << " seed=" << s.seed << " chunk_size=" << s.chunk_size << " n=" << s.values.size()
       << "\n";
    os << "value\n";
    for (double v : s.values) os << format_double(v) << "\n";
}

} // namespace levygraph
