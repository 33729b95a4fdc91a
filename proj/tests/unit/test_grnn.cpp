#include <doctest.h>

#include <sstream>

#include "fixtures.hpp"
#include "ofmpc/grnn.hpp"

using namespace ofmpc;

namespace {

Vector v1(double a) { return Vector::Constant(1, a); }

GrnnModel quadratic_model(std::size_t count, double sigma) {
    GrnnModel m(1, 1, count, sigma);
    for (std::size_t i = 0; i < count; ++i) {
        const double x = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(count - 1);
        m.add_sample(v1(x), v1(x * x));
    }
    return m;
}

} // namespace

TEST_CASE("predictions stay inside the convex hull of the stored outputs") {
    std::mt19937_64 gen(12);
    GrnnModel m(2, 2, 20, 0.7);
    for (int i = 0; i < 20; ++i) {
        m.add_sample(testing::random_vector(gen, 2), testing::random_vector(gen, 2));
    }
    Vector lo = m.samples().front().output, hi = lo;
    for (const auto& s : m.samples()) {
        lo = lo.cwiseMin(s.output);
        hi = hi.cwiseMax(s.output);
    }
    for (int q = 0; q < 50; ++q) {
        const Vector p = m.predict(3.0 * testing::random_vector(gen, 2));
        CHECK((p.array() >= lo.array() - 1e-12).all());
        CHECK((p.array() <= hi.array() + 1e-12).all());
    }
}

TEST_CASE("small sigma recovers the nearest sample and large sigma the mean") {
    GrnnModel m = quadratic_model(11, 1e-3);
    for (const auto& s : m.samples()) {
        CHECK(m.predict(s.input)(0) == doctest::Approx(s.output(0)).epsilon(1e-9));
    }
    m.set_sigma(1e4);
    double mean = 0.0;
    for (const auto& s : m.samples()) {
        mean += s.output(0) / static_cast<double>(m.size());
    }
    CHECK(m.predict(v1(0.3))(0) == doctest::Approx(mean).epsilon(1e-6));
}

TEST_CASE("far-away queries do not underflow") {
    GrnnModel m = quadratic_model(5, 0.01);
    const Vector p = m.predict(v1(1e3));
    CHECK(std::isfinite(p(0)));
    CHECK(p(0) == doctest::Approx(1.0));
}

TEST_CASE("single sample gives a constant prediction") {
    GrnnModel m(1, 2, 10, 0.3);
    m.add_sample(v1(0.5), Vector(Eigen::Vector2d(1.0, -2.0)));
    for (double q : {-10.0, 0.0, 0.5, 7.0}) {
        CHECK((m.predict(v1(q)) - Eigen::Vector2d(1.0, -2.0)).norm() == 0.0);
    }
}

TEST_CASE("window keeps the most recent samples") {
    GrnnModel m(1, 1, 3);
    for (int i = 0; i < 5; ++i) {
        m.add_sample(v1(i), v1(10.0 * i));
    }
    REQUIRE(m.size() == 3);
    CHECK(m.samples().front().input(0) == 2.0);
    CHECK(m.samples().back().output(0) == 40.0);
    const GrnnModel grown = add_sample(m, v1(9.0), v1(1.0));
    CHECK(grown.samples().back().input(0) == 9.0);
    CHECK(m.samples().back().input(0) == 4.0);
}

TEST_CASE("empty model predicts zero and invalid inputs are rejected") {
    GrnnModel m(1, 1, 3);
    CHECK(m.predict(v1(0.0))(0) == 0.0);
    CHECK_THROWS_AS(m.set_sigma(0.0), Error);
    CHECK_THROWS_AS(m.add_sample(Vector::Zero(2), v1(1.0)), Error);
}

TEST_CASE("leave-one-out selection smooths noisy data") {
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> x_dist(-1.0, 1.0);
    std::normal_distribution<double> noise(0.0, 0.05);
    GrnnModel m(1, 1, 60);
    for (int i = 0; i < 60; ++i) {
        const double x = x_dist(gen);
        m.add_sample(v1(x), v1(x * x + noise(gen)));
    }
    const SigmaSelection sel = select_sigma(m);
    CHECK(sel.grid.size() == 61);
    CHECK(sel.grid.front() == doctest::Approx(1e-3));
    CHECK(sel.grid.back() == doctest::Approx(1e3));
    CHECK(sel.error == doctest::Approx(loo_error(m, sel.sigma)));
    for (double e : sel.errors) {
        CHECK(sel.error <= e);
    }
    CHECK(sel.sigma > 1e-3);
    CHECK(sel.sigma < 1.0);

    GrnnModel one(1, 1, 5);
    one.add_sample(v1(0.0), v1(1.0));
    try {
        (void)select_sigma(one);
        FAIL("expected InsufficientData");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InsufficientData);
    }
}

TEST_CASE("sample files round-trip") {
    GrnnModel m = quadratic_model(7, 0.123);
    std::stringstream buf;
    write_samples(buf, m, true);
    const SampleFile file = read_samples(buf);
    CHECK(file.nz == 1);
    CHECK(file.nd == 1);
    REQUIRE(file.sigma);
    CHECK(*file.sigma == 0.123);
    const GrnnModel back = model_from_file(file);
    REQUIRE(back.size() == m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        CHECK(back.samples()[i].input(0) == m.samples()[i].input(0));
        CHECK(back.samples()[i].output(0) == m.samples()[i].output(0));
    }
    CHECK(back.predict(v1(0.37))(0) == m.predict(v1(0.37))(0));
}

TEST_CASE("malformed sample lines are reported with their line number") {
    std::istringstream in("# nz=1 nd=1\n0.1 0.2\n0.3 abc\n");
    try {
        (void)read_samples(in);
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ParseError);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    std::istringstream ragged("# nz=1 nd=1\n0.1 0.2\n0.3\n");
    CHECK_THROWS_AS((void)read_samples(ragged), Error);
}
