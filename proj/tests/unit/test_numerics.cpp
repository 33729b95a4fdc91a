#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "ofmpc/numerics.hpp"

using namespace ofmpc;
using ofmpc::testing::random_matrix;

TEST_CASE("pseudoinverse satisfies the Penrose identities") {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index rows = 2 + trial % 4;
        const Eigen::Index cols = 2 + (trial / 4) % 4;
        const Eigen::Index rank = 1 + trial % std::min(rows, cols);
        const Matrix m = random_matrix(gen, rows, rank) * random_matrix(gen, rank, cols);
        const Matrix p = numerics::pseudoinverse(m);
        CHECK((m * p * m - m).norm() < 1e-9 * (1 + m.norm()));
        CHECK((p * m * p - p).norm() < 1e-9 * (1 + p.norm()));
        CHECK(((m * p).transpose() - m * p).norm() < 1e-9);
        CHECK(((p * m).transpose() - p * m).norm() < 1e-9);
        CHECK(numerics::matrix_rank(m) == static_cast<std::size_t>(rank));
    }
}

TEST_CASE("pseudoinverse of the zero matrix is zero") {
    const Matrix p = numerics::pseudoinverse(Matrix::Zero(2, 3));
    CHECK(p.rows() == 3);
    CHECK(p.cols() == 2);
    CHECK(p.norm() == 0.0);
}

TEST_CASE("null space spans the kernel") {
    Matrix m(2, 3);
    m << 1, 2, 3, 2, 4, 6;
    const Matrix n = numerics::null_space(m);
    CHECK(n.cols() == 2);
    CHECK((m * n).norm() < 1e-12);
    CHECK((n.transpose() * n - Matrix::Identity(2, 2)).norm() < 1e-12);
    CHECK(numerics::null_space(Matrix::Identity(3, 3)).cols() == 0);
}

TEST_CASE("spectral radius is similarity invariant") {
    Matrix rot(2, 2);
    const double a = 0.3;
    rot << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    CHECK(numerics::spectral_radius(0.9 * rot) == doctest::Approx(0.9).epsilon(1e-12));

    std::mt19937_64 gen(5);
    const Matrix m = random_matrix(gen, 4, 4);
    const Matrix t = random_matrix(gen, 4, 4) + 4 * Matrix::Identity(4, 4);
    const Matrix similar = t * m * numerics::solve_linear(t, Matrix(Matrix::Identity(4, 4)));
    CHECK(numerics::spectral_radius(similar) ==
          doctest::Approx(numerics::spectral_radius(m)).epsilon(1e-9));
}

TEST_CASE("solve_linear rejects singular and mismatched systems") {
    Matrix singular(2, 2);
    singular << 1, 2, 2, 4;
    CHECK_THROWS_AS((void)numerics::solve_linear(singular, Vector(Vector::Ones(2))), Error);
    try {
        (void)numerics::solve_linear(singular, Vector(Vector::Ones(2)));
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SingularMatrix);
    }
    try {
        (void)numerics::solve_linear(Matrix(Matrix::Identity(2, 2)), Vector(Vector::Ones(3)));
        FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
    Matrix a(2, 2);
    a << 4, 1, 2, 3;
    const Vector x = numerics::solve_linear(a, Vector(Eigen::Vector2d(1, 2)));
    CHECK((a * x - Eigen::Vector2d(1, 2)).norm() < 1e-14);
}

TEST_CASE("block helpers assemble the expected layout") {
    const Matrix a = Matrix::Constant(1, 2, 1.0);
    const Matrix b = Matrix::Constant(1, 1, 2.0);
    const Matrix c = Matrix::Constant(2, 2, 3.0);
    const Matrix d = Matrix::Constant(2, 1, 4.0);
    const Matrix m = numerics::block2x2(a, b, c, d);
    CHECK(m.rows() == 3);
    CHECK(m.cols() == 3);
    CHECK(m(0, 2) == 2.0);
    CHECK(m(2, 0) == 3.0);
    CHECK(m(2, 2) == 4.0);
    CHECK_THROWS_AS((void)numerics::hcat(a, c), Error);
    CHECK(numerics::repeat(Vector(Eigen::Vector2d(1, 2)), 3).size() == 6);
    CHECK_FALSE(numerics::all_finite(Matrix::Constant(1, 1, std::nan(""))));
}
