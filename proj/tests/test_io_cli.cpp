#include "cli_app.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <sstream>

using namespace levygraph;
using Catch::Approx;

namespace {

std::string model_path(const std::string& name) { return std::string(LEVYGRAPH_SOURCE_DIR) + "/models/" + name; }

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "levygraph");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Result r;
    r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

json run_json(std::vector<std::string> args) {
    args.push_back("--format");
    args.push_back("json");
    const Result r = run_cli(args);
    INFO(r.err);
    REQUIRE(r.code == cli::kExitOk);
    return json::parse(r.out);
}

ErrorCategory parse_category(const json& j) {
    try {
        parse_model(j);
    } catch (const Error& e) {
        return e.category();
    }
    FAIL("model accepted");
    return ErrorCategory::InvalidArgument;
}

} // namespace

TEST_CASE("model parsing", "[io]") {
    const Model g = load_model(model_path("gaussian_potential.json"));
    CHECK(g.dim == 1);
    CHECK(g.t == Approx(0.7));
    REQUIRE(g.potential);
    CHECK(g.potential->is_quadratic());
    CHECK(g.symbol(2).coeff(2)({0, 0}) == Approx(1.0));

    const Model q = load_model(model_path("quartic_2d.json"));
    CHECK(q.dim == 2);
    CHECK(q.potential->max_degree() == 4);
    CHECK(q.symbol(3).coeff(3)({1, 1, 0}) == Approx(-0.1));

    const Model f = load_model(model_path("skewed_jump.json"));
    REQUIRE(f.jump_diffusion);
    CHECK(f.jump_diffusion->a == Approx(12.0));

    CHECK(parse_category(json::parse(R"({"dim": 0})")) == ErrorCategory::InvalidModel);
    CHECK(parse_category(json::parse(R"({"dim": 1, "t": -1})")) == ErrorCategory::InvalidModel);
    CHECK(parse_category(json::parse(R"({"dim": 2, "coeffs": {"2": [[1, 0.5], [0.4, 1]]}})")) == ErrorCategory::InvalidModel);
    CHECK(parse_category(json::parse(R"({"dim": 1, "coeffs": {"x": [[1]]}})")) == ErrorCategory::InvalidModel);
    CHECK(parse_category(json::parse(R"({"dim": 1, "levy": {"activity": -1}})")) == ErrorCategory::NegativeActivity);
    CHECK(parse_category(json::parse(R"({"dim": 2, "jump_diffusion": {"beta": 1}})")) == ErrorCategory::DimensionMismatch);
    CHECK(parse_category(json::parse(R"({"dim": 1, "jump_diffusion": {"z1": 1}})")) == ErrorCategory::InvalidModel);
    CHECK_THROWS_AS(load_model(model_path("missing.json")), Error);
}

TEST_CASE("grid and list parsing", "[cli]") {
    CHECK(cli::parse_grid("0:1:0.25").size() == 5);
    CHECK(cli::parse_grid("-1:-1:1").size() == 1);
    CHECK_THROWS_AS(cli::parse_grid("1:0:0.1"), cli::UsageError);
    CHECK_THROWS_AS(cli::parse_grid("0:1:0"), cli::UsageError);
    CHECK_THROWS_AS(cli::parse_grid("0:1"), cli::UsageError);
    CHECK_THROWS_AS(cli::parse_list("0.1,x", "alpha"), cli::UsageError);
    CHECK(cli::parse_list("0.1,,0.5", "alpha") == std::vector<double>{0.1, 0.5});
}

TEST_CASE("expand reproduces the Gaussian closed form", "[cli]") {
    const json j = run_json({"expand", "--model", model_path("gaussian_potential.json"), "--order", "5", "--phi", "0.9"});
    const auto got = j["records"][0]["coeffs"].get<std::vector<double>>();
    const auto want = oracle::gaussian_series(0.5, 0.7, 0.9, 5);
    REQUIRE(got.size() == want.size());
    for (std::size_t m = 0; m < got.size(); ++m) CHECK(std::abs(got[m] - want[m]) <= 1e-10 * std::max(1.0, std::abs(want[m])));
    CHECK(j["records"][0]["beta_definition"] == "1/(4*mu*t)");
    CHECK(j["config"]["order"] == 5);
    CHECK(j["model"]["t"] == 0.7);

    const json zero = run_json({"expand", "--model", model_path("gaussian_potential.json"), "--order", "0"});
    CHECK(zero["records"][0]["coeffs"] == json::array({1.0}));

    const json fast = run_json({"expand", "--model", model_path("gaussian_potential.json"), "--order", "5", "--phi", "0.9", "--d1-fast"});
    for (std::size_t m = 0; m < want.size(); ++m)
        CHECK(std::abs(fast["records"][0]["coeffs"][m].get<double>() - want[m]) <= 1e-10 * std::max(1.0, std::abs(want[m])));
}

TEST_CASE("expand writes one csv row per grid point", "[cli]") {
    const Result r = run_cli({"expand", "--model", model_path("levy_1d.json"), "--order", "3", "--grid", "-1:1:0.5", "--log"});
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 2 + 1 + 5);
    CHECK(lines[0].rfind("# config: ", 0) == 0);
    CHECK(lines[1].rfind("# model: ", 0) == 0);
    CHECK(lines[2] == series_csv_header(3));
    CHECK(lines[3].rfind("large_diffusion_log,", 0) == 0);
}

TEST_CASE("second-order log coefficients of the skewed jump model", "[cli]") {
    // h1 = -(t z r2 + phi^2) and h2 = X / 2 at t = 1.
    const json j = run_json({"expand", "--model", model_path("skewed_jump.json"), "--order", "2", "--log", "--phi", "3"});
    const JumpDiffusionModel m = JumpDiffusionModel::skewed(2.0);
    const auto h = j["records"][0]["coeffs"].get<std::vector<double>>();
    REQUIRE(h.size() == 3);
    const double z = m.z(), r2 = m.jump_moment(2), r3 = m.jump_moment(3), r4 = m.jump_moment(4), phi = 3.0;
    // The derived Levy data is centred, so phi is already x - E[Z].
    const double c = phi;
    CHECK(h[1] == Approx(-(z * r2 + c * c)).epsilon(1e-10));
    CHECK(h[2] == Approx(0.5 * (z * r4 + 2 * z * z * r2 * r2 + 4 * z * r2 * c * c + 4 * z * r3 * c)).epsilon(1e-10));
}

TEST_CASE("exit codes", "[cli]") {
    CHECK(run_cli({"density", "--model", model_path("gaussian.json"), "--grid", "1:0:1"}).code == cli::kExitUsage);
    const Result missing = run_cli({"expand", "--model", model_path("missing.json")});
    CHECK(missing.code == cli::kExitRuntime);
    CHECK(missing.err.find("error[Io]") != std::string::npos);
    CHECK(run_cli({"expand", "--model", model_path("gaussian.json"), "--order", "7"}).code == cli::kExitUsage);
    CHECK(run_cli({"bogus"}).code == cli::kExitUsage);
    CHECK(run_cli({"expand", "--model", model_path("gaussian.json"), "--format", "xml"}).code == cli::kExitUsage);
    CHECK(run_cli({"simulate", "--model", model_path("gaussian.json"), "--n", "10"}).code == cli::kExitRuntime);
    CHECK(run_cli({"compare", "--model", model_path("skewed_jump.json"), "--n", "10"}).code == cli::kExitUsage);
    CHECK(run_cli({"quantiles", "--model", model_path("gaussian_potential.json")}).code == cli::kExitUsage);
}

TEST_CASE("density of pure diffusion is the exact normal", "[cli]") {
    // diffusion 0.5 at t = 1: variance 2 mu t = 1.
    const json j = run_json({"density", "--model", model_path("gaussian.json"), "--grid", "-3:3:0.5", "--order", "2"});
    for (const auto& row : j["rows"]) {
        const double x = row["phi"];
        const double want = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
        CHECK(std::abs(row["density"].get<double>() - want) <= 1e-6);
    }
    const json q = run_json({"quantiles", "--model", model_path("gaussian.json"), "--alpha", "0.05,0.99"});
    CHECK(q["rows"][1]["model"].get<double>() == Approx(oracle::normal_quantile(0.99)).margin(1e-6));
    CHECK(q["rows"][1]["gaussian"].get<double>() == Approx(oracle::normal_quantile(0.99)).margin(1e-9));
}

TEST_CASE("density of the skewed model integrates to one", "[cli]") {
    const json j = run_json({"density", "--model", model_path("skewed_jump.json"), "--grid", "-60:120:0.25"});
    double acc = 0.0;
    const auto& rows = j["rows"];
    for (std::size_t i = 1; i < rows.size(); ++i)
        acc += 0.125 * (rows[i]["density"].get<double>() + rows[i - 1]["density"].get<double>());
    CHECK(acc == Approx(1.0).margin(1e-4));
    CHECK(j["config"]["mode"] == "jump_diffusion");
}

TEST_CASE("simulate and compare are reproducible", "[cli]") {
    const std::vector<std::string> args{"compare", "--model", model_path("skewed_jump.json"), "--n", "5000", "--seed", "11", "--alpha", "0.05,0.95"};
    const Result a = run_cli(args);
    const Result b = run_cli(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    const json cfg = json::parse(a.out.substr(10, a.out.find('\n') - 10));
    CHECK(cfg["seed"] == 11);
    CHECK(cfg["seed_from_env"] == false);

    const Result s1 = run_cli({"simulate", "--model", model_path("skewed_jump.json"), "--n", "100", "--seed", "5", "--threads", "1"});
    const Result s2 = run_cli({"simulate", "--model", model_path("skewed_jump.json"), "--n", "100", "--seed", "5", "--threads", "3"});
    CHECK(s1.out == s2.out);

    ::setenv("LEVYGRAPH_SEED", "5", 1);
    const Result env = run_cli({"simulate", "--model", model_path("skewed_jump.json"), "--n", "100", "--seed", "999", "--threads", "1"});
    ::unsetenv("LEVYGRAPH_SEED");
    const auto body = [](const std::string& s) { return s.substr(s.find("# model")); };
    CHECK(body(env.out) == body(s1.out));
    CHECK(env.out.find("\"seed_from_env\":true") != std::string::npos);

    const json sweep = run_json({"compare", "--model", model_path("skewed_jump.json"), "--n", "2000", "--sweep-z1", "0.5,1", "--alpha", "0.5"});
    REQUIRE(sweep["rows"].size() == 2);
    CHECK(sweep["rows"][0]["z1"] == 0.5);
}
