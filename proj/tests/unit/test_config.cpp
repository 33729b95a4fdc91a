#include <doctest.h>

#include "fixtures.hpp"

using namespace ofmpc;

namespace {

std::string error_of(const std::string& text) {
    try {
        (void)parse_config(text);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigParse);
        return e.what();
    }
    FAIL("expected ConfigParse");
    return {};
}

const char* kMinimal = R"({
  "model": {"A": [[0.5]], "B": [[1]], "C": [[1]], "H": [[1]]},
  "disturbance": {"Bd": [[1]], "Cd": [[0]]},
  "gains": {"Lx": [[-0.5]], "Ld": [[-0.5]]},
  "operating_point": {"x": [0], "u": [0]},
  "ocp": {"N": 5, "Qx": [1], "Qu": [0.1]},
  "plant": {"type": "linear", "disturbance": [0.2]}
})";

} // namespace

TEST_CASE("reference config passes all four conditions") {
    const ConditionReport report = check_conditions(testing::reference_config());
    REQUIRE(report.results.size() == 4);
    CHECK(report.all_pass());
    CHECK(report.results[0].value == 5.0);
    CHECK(report.results[1].value < 1.0);
    CHECK(report.results[3].value < 1e-8);
}

TEST_CASE("tabulated gains fail only the offset-free condition") {
    const ConditionReport report =
        check_conditions(load_config(testing::config_dir() / "cstr_tabulated_gains.json"));
    CHECK(report.results[0].pass);
    CHECK(report.results[1].pass);
    CHECK(report.results[2].pass);
    CHECK_FALSE(report.results[3].pass);
}

TEST_CASE("innovation convention negates the gains") {
    const RunConfig ref = testing::reference_config();
    CHECK(ref.gains.Lx(0, 0) == doctest::Approx(-0.6141));
    CHECK(ref.gains.Ld(1, 1) == doctest::Approx(-0.4026));
}

TEST_CASE("bounds are converted to deviation coordinates") {
    const RunConfig ref = testing::reference_config();
    CHECK(ref.ocp.x_bounds.lo(0) == doctest::Approx(0.83 - 0.878));
    CHECK(ref.ocp.u_bounds.hi(1) == doctest::Approx(0.13 - 0.1));
    const Vector r_abs(Eigen::Vector2d(0.86, 324.5));
    const Vector r = to_deviation_setpoint(ref, r_abs);
    CHECK(r(1) == doctest::Approx(0.0));
    CHECK((to_absolute_setpoint(ref, r) - r_abs).norm() < 1e-12);
}

TEST_CASE("minimal linear config parses and runs offset free") {
    RunConfig cfg = parse_config(kMinimal);
    cfg.scenario.fixed_schedule = {{0, Vector::Constant(1, 1.0)}};
    cfg.scenario.duration = 60;
    CHECK(check_conditions(cfg).all_pass());
    const ControllerSetup setup = make_setup(cfg);
    auto plant = make_plant(cfg);
    const ClosedLoopLog log = run_scenario(setup, *plant, resolve_scenario(cfg));
    CHECK(metrics(log).max_terminal_offset < 1e-8);
}

TEST_CASE("zero gains fail the stability check") {
    std::string text = kMinimal;
    text.replace(text.find(R"("Lx": [[-0.5]], "Ld": [[-0.5]])"), 30, R"("Lx": [[0]],    "Ld": [[0]]   )");
    const ConditionReport report = check_conditions(parse_config(text));
    CHECK_FALSE(report.results[1].pass);
    CHECK(report.results[1].value >= 1.0);
    CHECK_FALSE(report.all_pass());
}

TEST_CASE("zero disturbance model fails the observability check") {
    std::string text = kMinimal;
    text.replace(text.find(R"("Bd": [[1]])"), 11, R"("Bd": [[0]])");
    const ConditionReport report = check_conditions(parse_config(text));
    CHECK_FALSE(report.results[0].pass);
}

TEST_CASE("parse errors name the line or the field") {
    CHECK(error_of("{\n  \"model\": {\n    \"A\": [[1,]]\n}").find("line 3") != std::string::npos);
    std::string missing = kMinimal;
    missing.replace(missing.find(R"("Qu": [0.1])"), 11, R"("Qq": [0.1])");
    CHECK(error_of(missing).find("ocp.Qu") != std::string::npos);
    std::string ragged = kMinimal;
    ragged.replace(ragged.find(R"("A": [[0.5]])"), 12, R"("A": "none" )");
    CHECK(error_of(ragged).find("model.A") != std::string::npos);
    std::string mode = kMinimal;
    mode.insert(mode.rfind('}'), R"(, "gains_extra": 1, "scenario": {"mode": "adaptive"})");
    CHECK_THROWS_AS((void)parse_config(mode), Error);
}

TEST_CASE("setpoint sources expand with filtering and repetition") {
    const RunConfig ref = testing::reference_config();
    SetpointSource src;
    src.kind = SetpointSource::Kind::Linspace;
    src.count = 8;
    src.ranges = {{0.84, 0.91}, {324.5, 324.5}};
    src.reachable_only = false;
    CHECK(resolve_setpoints(ref, src).size() == 8);
    src.repeat = 3;
    CHECK(resolve_setpoints(ref, src).size() == 24);
    src.repeat = 1;
    src.reachable_only = true;
    const auto kept = resolve_setpoints(ref, src);
    CHECK(kept.size() <= 8);
    for (const Vector& sp : kept) {
        CHECK(setpoint_admissible(ref, make_setup(ref), sp));
    }
}

TEST_CASE("output directory honours the environment override") {
    const RunConfig ref = testing::reference_config();
    ::setenv("OFMPC_OUT_DIR", "/tmp/ofmpc-override", 1);
    CHECK(output_directory(ref) == std::filesystem::path("/tmp/ofmpc-override"));
    ::unsetenv("OFMPC_OUT_DIR");
    CHECK(output_directory(ref) == std::filesystem::path("out"));
}
