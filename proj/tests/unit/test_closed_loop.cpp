#include <doctest.h>

#include <sstream>

#include "fixtures.hpp"
#include "ofmpc/log_io.hpp"

using namespace ofmpc;

namespace {

const Vector kTrueDisturbance = Eigen::Vector2d(0.002, 0.6);

ScenarioConfig two_segments(ControllerMode mode, std::size_t segment) {
    ScenarioConfig cfg;
    cfg.mode = mode;
    cfg.schedule = {{0, Vector(Eigen::Vector2d(0.01, 0.5))},
                    {segment, Vector(Eigen::Vector2d(-0.015, -0.8))}};
    cfg.duration = 2 * segment;
    return cfg;
}

GrnnModel constant_map(const Vector& d) {
    GrnnModel m(2, 2, 1, 0.5);
    m.add_sample(Vector::Zero(2), d);
    return m;
}

StepRecord synthetic(std::size_t t, double r, double z) {
    StepRecord rec;
    rec.time = t;
    rec.r = Vector::Constant(1, r);
    rec.z_p = Vector::Constant(1, z);
    rec.y_p = rec.z_p;
    rec.u = Vector::Zero(1);
    return rec;
}

} // namespace

TEST_CASE("nominal mode removes the offset on a linear plant with a constant disturbance") {
    const RunConfig rc = testing::reference_config();
    const ControllerSetup setup = make_setup(rc);
    LinearPlant plant(rc.model, rc.dist, kTrueDisturbance, Vector::Zero(3));
    const ClosedLoopLog log = run_scenario(setup, plant, two_segments(ControllerMode::Nominal, 80));
    REQUIRE_FALSE(log.abort_reason);
    const MetricsSummary m = metrics(log);
    REQUIRE(m.segments.size() == 2);
    CHECK(m.max_terminal_offset < 1e-8);
    CHECK(log.records.back().steady);
}

TEST_CASE("learned mode with the exact map removes the offset and keeps the bookkeeping exact") {
    const RunConfig rc = testing::reference_config();
    const ControllerSetup setup = make_setup(rc);
    LinearPlant plant(rc.model, rc.dist, kTrueDisturbance, Vector::Zero(3));
    const GrnnModel map = constant_map(kTrueDisturbance);
    const ClosedLoopLog log =
        run_scenario(setup, plant, two_segments(ControllerMode::Learned, 60), &map);
    REQUIRE_FALSE(log.abort_reason);
    CHECK(metrics(log).max_terminal_offset < 1e-8);
    for (const StepRecord& rec : log.records) {
        CHECK(rec.d_total == Vector(rec.d_learned + rec.d_supp));
        CHECK((rec.d_learned - kTrueDisturbance).norm() == 0.0);
    }
}

TEST_CASE("runs are deterministic") {
    const RunConfig rc = testing::reference_config();
    const ControllerSetup setup = make_setup(rc);
    auto run = [&] {
        auto plant = make_plant(rc);
        return run_scenario(setup, *plant, two_segments(ControllerMode::Nominal, 20));
    };
    const ClosedLoopLog a = run();
    const ClosedLoopLog b = run();
    std::ostringstream sa, sb;
    write_log_csv(sa, a.records);
    write_log_csv(sb, b.records);
    CHECK(sa.str() == sb.str());
}

TEST_CASE("CSV log round-trips field for field") {
    const RunConfig rc = testing::reference_config();
    const ControllerSetup setup = make_setup(rc);
    auto plant = make_plant(rc);
    const ClosedLoopLog log = run_scenario(setup, *plant, two_segments(ControllerMode::Nominal, 10));
    std::stringstream buf;
    const AbsoluteOffsets offsets{rc.op.x_ss, rc.op.u_ss, rc.model.H() * rc.op.x_ss};
    write_log_csv(buf, log.records, &offsets);
    const std::vector<StepRecord> back = read_log_csv(buf);
    REQUIRE(back.size() == log.records.size());
    for (std::size_t k = 0; k < back.size(); ++k) {
        const StepRecord& a = log.records[k];
        const StepRecord& b = back[k];
        CHECK(a.time == b.time);
        CHECK(a.r == b.r);
        CHECK(a.z_p == b.z_p);
        CHECK(a.y_p == b.y_p);
        CHECK(a.u == b.u);
        CHECK(a.x_hat == b.x_hat);
        CHECK(a.d_learned == b.d_learned);
        CHECK(a.d_supp == b.d_supp);
        CHECK(a.d_total == b.d_total);
        CHECK(a.x_bar == b.x_bar);
        CHECK(a.u_bar == b.u_bar);
        CHECK(a.objective == b.objective);
        CHECK(a.active_count == b.active_count);
        CHECK(a.steady == b.steady);
        CHECK(a.harvested == b.harvested);
    }
}

TEST_CASE("zero-duration scenario writes a header-only log") {
    const RunConfig rc = testing::reference_config();
    const ControllerSetup setup = make_setup(rc);
    auto plant = make_plant(rc);
    ScenarioConfig cfg;
    const ClosedLoopLog log = run_scenario(setup, *plant, cfg);
    CHECK(log.records.empty());
    std::stringstream buf;
    write_log_csv(buf, log.records);
    std::string line;
    int lines = 0;
    while (std::getline(buf, line)) {
        ++lines;
    }
    CHECK(lines == 1);
}

TEST_CASE("steady detection needs a full quiet window at one setpoint") {
    std::vector<StepRecord> recs;
    for (std::size_t t = 0; t < 5; ++t) {
        recs.push_back(synthetic(t, 1.0, 1.0));
    }
    SteadyDetection cfg;
    CHECK(detect_steady(recs, cfg));
    recs[2].y_p(0) += 1e-3;
    CHECK_FALSE(detect_steady(recs, cfg));
    recs[2].y_p(0) -= 1e-3;
    recs[0].r(0) = 2.0;
    CHECK_FALSE(detect_steady(recs, cfg));
    recs.pop_back();
    recs.erase(recs.begin());
    CHECK_FALSE(detect_steady(recs, cfg));
    cfg.window = 1;
    CHECK_THROWS_AS((void)detect_steady(recs, cfg), Error);
}

TEST_CASE("metrics on synthetic logs") {
    ClosedLoopLog perfect;
    ClosedLoopLog offset;
    for (std::size_t t = 0; t < 10; ++t) {
        perfect.records.push_back(synthetic(t, 1.0, 1.0));
        offset.records.push_back(synthetic(t, 1.0, 1.2));
    }
    perfect.segment_starts = offset.segment_starts = {0};
    const MetricsSummary p = metrics(perfect);
    CHECK(p.total_ise == 0.0);
    CHECK(p.max_terminal_offset == 0.0);
    REQUIRE(p.segments.front().settling_time);
    CHECK(*p.segments.front().settling_time == 0);
    const MetricsSummary o = metrics(offset, 2.0);
    CHECK(o.total_ise == doctest::Approx(0.04 * 10 * 2.0));
    CHECK(o.max_terminal_offset == doctest::Approx(0.2));
    CHECK_FALSE(o.segments.front().settling_time);
}

TEST_CASE("sweep harvests one cross-checked sample per setpoint") {
    const RunConfig rc = testing::reference_config();
    const ControllerSetup setup = make_setup(rc);
    LinearPlant plant(rc.model, rc.dist, kTrueDisturbance, Vector::Zero(3));
    SweepConfig cfg;
    for (int i = 0; i < 10; ++i) {
        cfg.setpoints.push_back(Vector(Eigen::Vector2d(-0.02 + 0.004 * i, 0.1 * i)));
    }
    const SweepResult result = sweep(setup, plant, cfg);
    REQUIRE(result.samples.size() == 10);
    for (const HarvestedSample& s : result.samples) {
        CHECK(s.cross_check <= kCrossCheckTolerance);
        CHECK((s.d_ss - kTrueDisturbance).lpNorm<Eigen::Infinity>() < 1e-6);
    }
}

TEST_CASE("sweep reports a setpoint that never settles") {
    const RunConfig rc = testing::reference_config();
    const ControllerSetup setup = make_setup(rc);
    LinearPlant plant(rc.model, rc.dist, kTrueDisturbance, Vector::Zero(3));
    SweepConfig cfg;
    // Far outside the concentration bounds, so the offset never closes.
    cfg.setpoints = {Vector(Eigen::Vector2d(0.5, 0.0))};
    cfg.cap = 40;
    try {
        (void)sweep(setup, plant, cfg);
        FAIL("expected SteadyNotReached");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SteadyNotReached);
        CHECK(std::string(e.what()).find("setpoint 0") != std::string::npos);
    }
}

TEST_CASE("value function trace is zero at equilibrium") {
    const RunConfig rc = testing::reference_config();
    const ControllerSetup setup = make_setup(rc);
    const TargetPair tgt = setup.target.solve(kTrueDisturbance, Vector::Zero(2));
    LinearPlant plant(rc.model, rc.dist, kTrueDisturbance, tgt.x_bar);
    const GrnnModel map = constant_map(kTrueDisturbance);
    ScenarioConfig cfg;
    cfg.mode = ControllerMode::Learned;
    cfg.schedule = {{0, Vector::Zero(2)}};
    cfg.duration = 20;
    // Start the estimator at the true state so nothing moves.
    ControllerState state = ControllerState::initial(setup);
    state.estimate.x_hat = tgt.x_bar;
    ClosedLoopLog log;
    log.mode = ControllerMode::Learned;
    for (std::size_t t = 0; t < cfg.duration; ++t) {
        log.records.push_back(
            control_step(setup, state, plant, Vector::Zero(2), ControllerMode::Learned, &map));
    }
    const LyapunovTrace trace = lyapunov_trace(setup, log);
    REQUIRE(trace.values.size() == 20);
    for (double v : trace.values) {
        CHECK(std::abs(v) < 1e-10);
    }
}

TEST_CASE("random setpoints are reproducible and respect the filter") {
    const std::vector<std::pair<double, double>> ranges = {{0.0, 1.0}, {5.0, 5.0}};
    const auto a = random_setpoints(ranges, 20, 42);
    const auto b = random_setpoints(ranges, 20, 42);
    REQUIRE(a.size() == 20);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] == b[i]);
        CHECK(a[i](1) == 5.0);
    }
    const auto low = random_setpoints(ranges, 10, 1, [](const Vector& v) { return v(0) < 0.5; });
    for (const Vector& v : low) {
        CHECK(v(0) < 0.5);
    }
    CHECK_THROWS_AS((void)random_setpoints(ranges, 1, 1, [](const Vector&) { return false; }), Error);
}

TEST_CASE("parallel_for visits every index and propagates failures") {
    std::vector<int> seen(100, 0);
    parallel_for(seen.size(), 4, [&](std::size_t i) { seen[i] += 1; });
    for (int s : seen) {
        CHECK(s == 1);
    }
    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](std::size_t i) {
                                     if (i == 7) {
                                         throw Error(ErrorCode::Io, "boom");
                                     }
                                 }),
                    Error);
}

TEST_CASE("mode names parse and print") {
    CHECK(parse_mode("nominal") == ControllerMode::Nominal);
    CHECK(to_string(ControllerMode::Learned) == "learned");
    CHECK_THROWS_AS((void)parse_mode("adaptive"), Error);
}
