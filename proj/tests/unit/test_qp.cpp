#include <doctest.h>

#include "qp_oracle.hpp"

using namespace ofmpc;
using namespace ofmpc::testing;

TEST_CASE("unconstrained QP returns the stationary point") {
    std::mt19937_64 gen(1);
    CondensedQp qp = random_qp(gen, 4, 0);
    const QpSolution sol = solve_qp(qp);
    const Vector expected = -numerics::solve_linear(qp.H, qp.f);
    CHECK((sol.u_seq - expected).norm() < 1e-10);
    CHECK(sol.active_set.empty());
    CHECK(sol.kkt_residual < 1e-8);
}

TEST_CASE("solver matches the exhaustive oracle on random problems") {
    std::mt19937_64 gen(2024);
    for (int trial = 0; trial < 60; ++trial) {
        const Eigen::Index n = 1 + trial % 6;
        const Eigen::Index m = trial % 9;
        const CondensedQp qp = random_qp(gen, n, m);
        const auto oracle = qp_oracle(qp);
        REQUIRE(oracle);
        const QpSolution sol = solve_qp(qp);
        CHECK((sol.u_seq - oracle->u).lpNorm<Eigen::Infinity>() < 1e-6);
        CHECK(sol.objective == doctest::Approx(oracle->objective).epsilon(1e-8));
        CHECK(sol.kkt_residual <= 1e-8);
    }
}

TEST_CASE("warm start reproduces the cold solution") {
    std::mt19937_64 gen(77);
    for (int trial = 0; trial < 30; ++trial) {
        const CondensedQp qp = random_qp(gen, 5, 8);
        const QpSolution cold = solve_qp(qp);
        const QpSolution warm = solve_qp(qp, cold.active_set);
        CHECK((warm.u_seq - cold.u_seq).lpNorm<Eigen::Infinity>() < 1e-8);
        // A stale active set containing every row is pruned back to the optimum.
        std::vector<std::size_t> all(8);
        for (std::size_t i = 0; i < all.size(); ++i) {
            all[i] = i;
        }
        const QpSolution stale = solve_qp(qp, all);
        CHECK((stale.u_seq - cold.u_seq).lpNorm<Eigen::Infinity>() < 1e-8);
    }
}

TEST_CASE("contradictory bounds are reported as infeasible") {
    CondensedQp qp;
    qp.H = Matrix::Identity(1, 1);
    qp.f = Vector::Zero(1);
    qp.A_in = Matrix(2, 1);
    qp.A_in << 1.0, -1.0;
    qp.b_in = Vector(Eigen::Vector2d(-1.0, -1.0)); // u <= -1 and u >= 1
    try {
        (void)solve_qp(qp);
        FAIL("expected Infeasible");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Infeasible);
    }
}

TEST_CASE("indefinite Hessian is rejected") {
    CondensedQp qp;
    qp.H = Matrix(2, 2);
    qp.H << 1.0, 0.0, 0.0, -1.0;
    qp.f = Vector::Zero(2);
    qp.A_in = Matrix(0, 2);
    qp.b_in = Vector(0);
    try {
        (void)solve_qp(qp);
        FAIL("expected PreconditionViolated");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::PreconditionViolated);
    }
}

TEST_CASE("single active bound gives the projected solution and its multiplier") {
    // min (u - 2)^2 subject to u <= 1
    CondensedQp qp;
    qp.H = Matrix::Identity(1, 1);
    qp.f = Vector::Constant(1, -2.0);
    qp.c = 4.0;
    qp.A_in = Matrix::Ones(1, 1);
    qp.b_in = Vector::Ones(1);
    const QpSolution sol = solve_qp(qp);
    CHECK(sol.u_seq(0) == doctest::Approx(1.0));
    REQUIRE(sol.active_set.size() == 1);
    CHECK(sol.multipliers(0) == doctest::Approx(2.0));
    CHECK(sol.objective == doctest::Approx(1.0));
}
