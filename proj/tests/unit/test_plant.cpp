#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "ofmpc/plant.hpp"

using namespace ofmpc;

namespace {

CstrParams nominal_params() {
    CstrParams p;
    p.outlet_factor = 1.0;
    return p;
}

double state_distance(const PlantState& a, const PlantState& b) {
    return (a.to_vector() - b.to_vector()).lpNorm<Eigen::Infinity>();
}

} // namespace

TEST_CASE("RK4 error shrinks with fourth order") {
    CstrParams p = nominal_params();
    const PlantState s0{0.9, 330.0, 0.7};
    const Vector u(Eigen::Vector2d(302.0, 0.11));
    const double dt = 1.0;
    auto solve = [&](int substeps) {
        CstrParams q = p;
        q.substeps = substeps;
        return rk4_step(s0, u, q, dt);
    };
    const PlantState reference = solve(2048);
    const double e1 = state_distance(solve(4), reference);
    const double e2 = state_distance(solve(8), reference);
    const double ratio = e1 / e2;
    CHECK(ratio >= 12.0);
    CHECK(ratio <= 20.0);
}

TEST_CASE("reference operating point is nearly an equilibrium of the nominal reactor") {
    const CstrParams p = nominal_params();
    const OperatingPoint op = OperatingPoint::cstr_reference();
    const Vector f = derivatives(PlantState::from_vector(op.x_ss), op.u_ss, p);
    CHECK(std::abs(f(0)) < 1e-3);
    CHECK(std::abs(f(1)) < 0.5);
    CHECK(std::abs(f(2)) < 1e-12);
}

TEST_CASE("steady input solves the balance equations") {
    for (MismatchKind kind : {MismatchKind::OutletFlow, MismatchKind::OutletConcentration}) {
        CstrParams p = nominal_params();
        p.outlet_factor = 1.03;
        p.mismatch = kind;
        const SteadyInput s = steady_input_for(p, 0.87, 325.0);
        const Vector f =
            derivatives(PlantState{0.87, 325.0, s.h}, Vector(Eigen::Vector2d(s.Tc, s.F)), p);
        CHECK(f.lpNorm<Eigen::Infinity>() < 1e-10);
    }
}

TEST_CASE("outlet flow mismatch drains the tank at the nominal inputs") {
    CstrParams p = nominal_params();
    const OperatingPoint op = OperatingPoint::cstr_reference();
    const double nominal = derivatives(PlantState::from_vector(op.x_ss), op.u_ss, p)(2);
    p.outlet_factor = 1.03;
    const double mismatched = derivatives(PlantState::from_vector(op.x_ss), op.u_ss, p)(2);
    CHECK(mismatched < nominal);
}

TEST_CASE("events change parameters and unknown names are rejected") {
    const CstrParams p = nominal_params();
    const CstrParams q = apply_event(p, {"k0", 6.2e10});
    CHECK(q.k0 == 6.2e10);
    CHECK(apply_event(p, {"identity", 0.0}).k0 == p.k0);
    try {
        (void)apply_event(p, {"viscosity", 1.0});
        FAIL("expected UnknownEvent");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownEvent);
    }
    CHECK_THROWS_AS((void)apply_event(p, {"k0", -1.0}), Error);
}

TEST_CASE("non-physical states are rejected") {
    const CstrParams p = nominal_params();
    try {
        (void)derivatives(PlantState{0.9, 330.0, -0.1}, Vector(Eigen::Vector2d(300.0, 0.1)), p);
        FAIL("expected NonPhysicalState");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonPhysicalState);
    }
}

TEST_CASE("plant measurement is the deviation from the operating point") {
    const OperatingPoint op = OperatingPoint::cstr_reference();
    CstrPlant plant(nominal_params(), op, PlantState::from_vector(op.x_ss));
    CHECK(plant.measure().norm() == 0.0);
    plant.step(Vector::Zero(2), 1.0);
    CHECK(plant.measure().norm() > 0.0);
    auto copy = plant.clone();
    plant.step(Vector::Zero(2), 1.0);
    copy->step(Vector::Zero(2), 1.0);
    CHECK((plant.measure() - copy->measure()).norm() == 0.0);
}

TEST_CASE("linear plant follows its difference equation") {
    const RunConfig cfg = testing::reference_config();
    const Vector d(Eigen::Vector2d(0.001, 0.5));
    LinearPlant plant(cfg.model, cfg.dist, d, Vector::Zero(3));
    const Vector u(Eigen::Vector2d(1.0, 0.01));
    plant.step(u, 1.0);
    CHECK((plant.measure() - (cfg.model.B() * u + cfg.dist.Bd() * d)).norm() < 1e-14);
    plant.apply_event({"disturbance_1", 2.0});
    CHECK_THROWS_AS(plant.apply_event({"disturbance_7", 2.0}), Error);
}
