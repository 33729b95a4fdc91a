#include <doctest.h>

#include "fixtures.hpp"
#include "ofmpc/estimator.hpp"

using namespace ofmpc;
using ofmpc::testing::random_vector;

TEST_CASE("nominal estimator update is affine in (estimate, u, y)") {
    const RunConfig cfg = testing::reference_config();
    const Estimator est(cfg.model, cfg.dist, cfg.gains);
    std::mt19937_64 gen(7);
    const AugmentedEstimate e1{random_vector(gen, 3), random_vector(gen, 2)};
    const AugmentedEstimate e2{random_vector(gen, 3), random_vector(gen, 2)};
    const Vector u1 = random_vector(gen, 2), u2 = random_vector(gen, 2);
    const Vector y1 = random_vector(gen, 3), y2 = random_vector(gen, 3);
    const double a = 0.7, b = -1.3;
    const AugmentedEstimate mix{a * e1.x_hat + b * e2.x_hat, a * e1.d_hat + b * e2.d_hat};
    const Vector lhs = est.nominal_step(mix, a * u1 + b * u2, a * y1 + b * y2).stacked();
    const Vector rhs =
        a * est.nominal_step(e1, u1, y1).stacked() + b * est.nominal_step(e2, u2, y2).stacked();
    CHECK((lhs - rhs).norm() < 1e-10);
}

TEST_CASE("zero estimate with zero input and output stays at zero") {
    const RunConfig cfg = testing::reference_config();
    const Estimator est(cfg.model, cfg.dist, cfg.gains);
    const AugmentedEstimate next =
        est.nominal_step(AugmentedEstimate::zero(3, 2), Vector::Zero(2), Vector::Zero(3));
    CHECK(next.stacked().norm() == 0.0);
}

TEST_CASE("steady state from input/output data is a fixed point of the update") {
    const RunConfig cfg = testing::reference_config();
    const Estimator est(cfg.model, cfg.dist, cfg.gains);
    const Vector y(Eigen::Vector3d(0.01, -0.4, 0.05));
    const Vector u(Eigen::Vector2d(1.5, -0.003));
    const AugmentedEstimate ss = est.steady_state_from_io(y, u);
    const AugmentedEstimate next = est.nominal_step(ss, u, y);
    CHECK((next.stacked() - ss.stacked()).norm() < 1e-10);
    // At the fixed point the output error lies in the null space of Ld.
    const Vector e = cfg.model.C() * ss.x_hat + cfg.dist.Cd() * ss.d_hat - y;
    CHECK((cfg.gains.Ld * e).norm() < 1e-10);
}

TEST_CASE("learned update with zero learned disturbance equals the nominal update") {
    const RunConfig cfg = testing::reference_config();
    const Estimator est(cfg.model, cfg.dist, cfg.gains);
    std::mt19937_64 gen(9);
    const AugmentedEstimate e{random_vector(gen, 3), random_vector(gen, 2)};
    const Vector u = random_vector(gen, 2);
    const Vector y = random_vector(gen, 3);
    CHECK((est.learned_step(e, u, y, Vector::Zero(2)).stacked() -
           est.nominal_step(e, u, y).stacked())
              .norm() == 0.0);
    const Vector dl = random_vector(gen, 2);
    const Vector shift = est.learned_step(e, u, y, dl).stacked() - est.nominal_step(e, u, y).stacked();
    CHECK((shift - est.learned_forcing() * dl).norm() < 1e-12);
}

TEST_CASE("combined disturbance bookkeeping is exact") {
    const Vector learned(Eigen::Vector2d(0.1, 3.7));
    const Vector supp(Eigen::Vector2d(-0.01, 0.02));
    const CombinedDisturbance c = CombinedDisturbance::combine(learned, supp);
    CHECK(c.d_total == Vector(c.d_learned + c.d_supp));
}

TEST_CASE("estimator rejects mismatched vectors") {
    const RunConfig cfg = testing::reference_config();
    const Estimator est(cfg.model, cfg.dist, cfg.gains);
    try {
        (void)est.nominal_step(AugmentedEstimate::zero(3, 2), Vector::Zero(3), Vector::Zero(3));
        FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
}
