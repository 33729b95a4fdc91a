#include <doctest.h>

#include "fixtures.hpp"
#include "ofmpc/model.hpp"
#include "ofmpc/ocp.hpp"

using namespace ofmpc;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::Io;
}

} // namespace

TEST_CASE("reference augmented system is observable with rank five") {
    const RunConfig cfg = testing::reference_config();
    const ObservabilityReport obs = check_augmented_observability(cfg.model, cfg.dist);
    CHECK(obs.holds);
    CHECK(obs.rank == 5);
    CHECK(obs.required == 5);
}

TEST_CASE("zero disturbance model loses observability of the augmented system") {
    const RunConfig cfg = testing::reference_config();
    const DisturbanceModel none(Matrix::Zero(3, 2), Matrix::Zero(3, 2));
    const ObservabilityReport obs = check_augmented_observability(cfg.model, none);
    CHECK_FALSE(obs.holds);
    CHECK(obs.rank < 5);
}

TEST_CASE("zero gains leave the integrating modes on the unit circle") {
    const RunConfig cfg = testing::reference_config();
    const EstimatorGains zero{Matrix::Zero(3, 3), Matrix::Zero(2, 3)};
    const double rho = numerics::spectral_radius(estimator_error_matrix(cfg.model, cfg.dist, zero));
    CHECK(rho >= 1.0);
    CHECK(code_of([&] { validate_gains(cfg.model, cfg.dist, zero); }) ==
          ErrorCode::PreconditionViolated);
}

TEST_CASE("estimator error matrix has the block structure of the augmented observer") {
    const RunConfig cfg = testing::reference_config();
    const Matrix m = estimator_error_matrix(cfg.model, cfg.dist, cfg.gains);
    const Matrix& lx = cfg.gains.Lx;
    const Matrix& ld = cfg.gains.Ld;
    CHECK((m.topLeftCorner(3, 3) - (cfg.model.A() + lx * cfg.model.C())).norm() < 1e-14);
    CHECK((m.topRightCorner(3, 2) - (cfg.dist.Bd() + lx * cfg.dist.Cd())).norm() < 1e-14);
    CHECK((m.bottomLeftCorner(2, 3) - ld * cfg.model.C()).norm() < 1e-14);
    CHECK((m.bottomRightCorner(2, 2) - (Matrix::Identity(2, 2) + ld * cfg.dist.Cd())).norm() < 1e-14);
    CHECK(numerics::spectral_radius(m) < 1.0);
    CHECK(check_lemma1_nonsingularity(cfg.model, cfg.dist, cfg.gains));
}

TEST_CASE("offset-free condition holds for the reference gains and fails for the tabulated ones") {
    const RunConfig ref = testing::reference_config();
    const Matrix k_un =
        unconstrained_gain(build_prediction(ref.model, ref.dist, ref.ocp), ref.ocp);
    const OffsetFreeReport ok = check_offset_free_condition(ref.model, ref.gains, k_un);
    CHECK(ok.holds);
    CHECK(ok.residual < kOffsetFreeTolerance);
    CHECK(ok.null_dim == 1);

    const RunConfig tab = load_config(testing::config_dir() / "cstr_tabulated_gains.json");
    const OffsetFreeReport bad = check_offset_free_condition(tab.model, tab.gains, k_un);
    CHECK_FALSE(bad.holds);
    CHECK(bad.residual > 1.0);
}

TEST_CASE("linear model construction validates its inputs") {
    const Matrix a = Matrix::Identity(2, 2);
    const Matrix b = Matrix::Identity(2, 1);
    const Matrix c = Matrix::Identity(2, 2);
    const Matrix h = Matrix::Identity(1, 2);
    CHECK(code_of([&] { LinearModel(a, Matrix::Identity(3, 1), c, h); }) ==
          ErrorCode::DimensionMismatch);
    CHECK(code_of([&] { LinearModel(a, b, c, h, 0.0); }) == ErrorCode::PreconditionViolated);
    // Two decoupled integrators driven by one input are not controllable.
    CHECK(code_of([&] { LinearModel(a, b, c, h); }) == ErrorCode::PreconditionViolated);
    CHECK(code_of([&] { DisturbanceModel(Matrix::Zero(2, 3), Matrix::Zero(2, 3)); }) ==
          ErrorCode::DimensionMismatch);
}

TEST_CASE("augment stacks the disturbance as an integrator") {
    const RunConfig cfg = testing::reference_config();
    const AugmentedModel aug = augment(cfg.model, cfg.dist);
    CHECK(aug.A.rows() == 5);
    CHECK((aug.A.bottomRightCorner(2, 2) - Matrix::Identity(2, 2)).norm() == 0.0);
    CHECK(aug.B.bottomRows(2).norm() == 0.0);
    CHECK((aug.Sx() * Vector::LinSpaced(5, 1, 5) - Vector::LinSpaced(3, 1, 3)).norm() == 0.0);
}
