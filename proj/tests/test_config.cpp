#include "axieuler/config.hpp"

#include <gtest/gtest.h>

using namespace axieuler;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_config(ConfigSource(text, "run.json"));
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST(JsonLines, PointerToLine) {
    const std::string text = "{\n  \"a\": 1,\n  \"b\": {\n    \"c\": [1,\n      2],\n    \"d/e\": \"x,y}\"\n  }\n}\n";
    const auto l = json_value_lines(text);
    EXPECT_EQ(l.at(""), 1);
    EXPECT_EQ(l.at("/a"), 2);
    EXPECT_EQ(l.at("/b"), 3);
    EXPECT_EQ(l.at("/b/c"), 4);
    EXPECT_EQ(l.at("/b/c/0"), 4);
    EXPECT_EQ(l.at("/b/c/1"), 5);
    EXPECT_EQ(l.at("/b/d~1e"), 6);
    EXPECT_EQ(l.size(), 7u);
}

TEST(Config, DefaultsFromEmptyObject) {
    const RunConfig c = parse_config(ConfigSource("{}", "run.json"));
    EXPECT_EQ(c.grid.nr, 64);
    EXPECT_EQ(c.flow_name, "gaussian_swirl_ring");
    EXPECT_EQ(c.monitor.params.q_bound(), Rational(6, 5));
    EXPECT_EQ(c.flow_id(), "gaussian_swirl_ring@64x64");
    EXPECT_FALSE(c.scaling.present);
}

TEST(Config, ReadsEverySection) {
    const std::string text = R"({
  "grid": {"nr": 32, "nz": 48, "r_max": 2, "z_min": -1, "z_max": 1},
  "flow": {"name": "rigid_rotation", "omega": 2.5, "r0": 1.0},
  "solver": {"t_end": 0.5, "dt_max": 0.01, "cfl": 0.3, "advection": "centered2"},
  "output": {"dir": "out", "snapshot_stride": 5},
  "ensemble": {"positions": 16, "angles": 4, "r_min_seed": 0.1, "dt": 0.002},
  "trace": {"T": 0.4, "sigma": 0.5},
  "monitor": {"a": "1/3", "b": 1, "s": 4, "q": 1.0},
  "lambda": {"p": "inf", "sigma": -0.5, "T": 0.2, "eps": [0.1, 0.05], "base": "snapshots"},
  "scaling": {"alpha": 1, "beta": 0.5, "T_star": 1.2, "center": {"t": [0], "r": [0.5], "z": [0]},
              "window": {"nr": 8, "nz": 8}}
})";
    const RunConfig c = parse_config(ConfigSource(text, "run.json"));
    EXPECT_EQ(c.grid.nz, 48);
    EXPECT_EQ(c.grid.r_max, 2.0);
    EXPECT_EQ(c.flow.omega, 2.5);
    EXPECT_EQ(c.solver.advection, AdvectionScheme::centered2);
    EXPECT_EQ(c.output.snapshot_stride, 5);
    EXPECT_EQ(c.ensemble.angles, 4);
    EXPECT_EQ(c.trace.sigma, 0.5);
    EXPECT_EQ(c.monitor.params.a, Rational(1, 3));
    EXPECT_EQ(c.monitor.params.b, Rational(1));
    EXPECT_EQ(c.lambda.p, infinity);
    EXPECT_EQ(c.lambda.eps.size(), 2u);
    EXPECT_TRUE(c.scaling.present);
    EXPECT_EQ(c.scaling.params.T_star, 1.2);
    EXPECT_EQ(c.scaling.window.nr, 8);
    EXPECT_EQ(c.echo["grid"]["nz"], 48);
}

TEST(Config, ErrorsCarryFileAndLine) {
    EXPECT_EQ(error_of("{\n  \"grid\": {\n    \"nr\": 2\n  }\n}").rfind("run.json:3: /grid/nr: must be >= 8", 0), 0u);
    EXPECT_EQ(error_of("{\n\n  \"gird\": {}\n}").rfind("run.json:3: /gird: unknown key", 0), 0u);
    EXPECT_EQ(error_of("{\n  \"flow\": {\"name\": \"vortex\"}\n}").rfind("run.json:2: /flow/name: unknown flow", 0), 0u);
    EXPECT_EQ(error_of("{\n  \"lambda\": {\n    \"eps\": [0.1,\n      -1]\n  }\n}").rfind("run.json:4: /lambda/eps/1:", 0), 0u);
    EXPECT_EQ(error_of("{\n  \"lambda\": {\"p\": 2,\n \"sigma\": 1.5}\n}").rfind("run.json:3: /lambda/sigma:", 0), 0u);
    EXPECT_EQ(error_of("{\n  \"solver\": {\"cfl\": \"fast\"}}").rfind("run.json:2: /solver/cfl: must be a number", 0), 0u);
    EXPECT_EQ(error_of("{\n  \"scaling\": {\"alpha\": 1}\n}").rfind("run.json:2: /scaling: missing required key 'beta'", 0),
              0u);
}

TEST(Config, JsonSyntaxErrorsHaveLineAndColumn) {
    const std::string e = error_of("{\n  \"grid\": {\n    \"nr\": 32,\n  }\n}");
    EXPECT_EQ(e.rfind("run.json:4:", 0), 0u) << e;
    EXPECT_NE(e.find("invalid JSON"), std::string::npos);
    EXPECT_EQ(error_of("[1, 2]").rfind("run.json:1: config must be a JSON object", 0), 0u);
}

TEST(Config, CriterionViolationsAreAllListed) {
    const std::string e = error_of("{\n  \"monitor\": {\"a\": \"1/4\", \"b\": \"1/4\"}\n}");
    EXPECT_EQ(e.rfind("run.json:2: /monitor: criterion parameters violate:", 0), 0u) << e;
    EXPECT_NE(e.find("a + b >= 1"), std::string::npos);
    EXPECT_NE(e.find("theta"), std::string::npos);
    EXPECT_NE(error_of("{\"monitor\": {\"a\": \"x/y\"}}").find("/monitor/a"), std::string::npos);
}
