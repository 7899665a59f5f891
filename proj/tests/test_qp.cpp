#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dccert/qp.hpp"

using namespace dccert;

TEST_CASE("unconstrained strictly convex") {
    QpProblem qp(2);
    qp.set_quadratic(Mat{{2, 0}, {0, 2}});
    qp.set_linear({-2, -4});  // min (x-1)^2 + (y-2)^2 - const
    QpResult r = qp.minimize();
    REQUIRE(r.status == QpStatus::Optimal);
    CHECK(r.x[0] == doctest::Approx(1.0));
    CHECK(r.x[1] == doctest::Approx(2.0));
}

TEST_CASE("projection onto a box") {
    QpProblem qp(2);
    qp.set_quadratic(Mat{{2, 0}, {0, 2}});
    qp.set_linear({-6, -1});  // projects (3, 0.5)
    qp.add_le({1, 0}, 1);
    qp.add_le({-1, 0}, 1);
    qp.add_le({0, 1}, 1);
    qp.add_le({0, -1}, 1);
    QpResult r = qp.minimize();
    REQUIRE(r.status == QpStatus::Optimal);
    CHECK(r.x[0] == doctest::Approx(1.0));
    CHECK(r.x[1] == doctest::Approx(0.5));
}

TEST_CASE("equality constrained") {
    QpProblem qp(2);
    qp.set_quadratic(Mat{{2, 0}, {0, 2}});
    qp.set_linear({0, 0});
    qp.add_eq({1, 1}, 2);  // min |x|^2 on x+y=2
    QpResult r = qp.minimize();
    REQUIRE(r.status == QpStatus::Optimal);
    CHECK(r.x[0] == doctest::Approx(1.0));
    CHECK(r.x[1] == doctest::Approx(1.0));
}

TEST_CASE("semidefinite Hessian with linear part on a polytope") {
    // min x^2 + y over the unit square; flat in y except the linear term.
    QpProblem qp(2);
    qp.set_quadratic(Mat{{2, 0}, {0, 0}});
    qp.set_linear({0, 1});
    qp.add_le({1, 0}, 1);
    qp.add_le({-1, 0}, 1);
    qp.add_le({0, 1}, 1);
    qp.add_le({0, -1}, 1);
    QpResult r = qp.minimize();
    REQUIRE(r.status == QpStatus::Optimal);
    CHECK(r.value == doctest::Approx(-1.0));
    CHECK(r.x[1] == doctest::Approx(-1.0));
}

TEST_CASE("zero Hessian delegates to LP") {
    QpProblem qp(1);
    qp.set_linear({1});
    qp.add_le({-1}, 1);
    qp.add_le({1}, 3);
    QpResult r = qp.minimize();
    REQUIRE(r.status == QpStatus::Optimal);
    CHECK(r.value == doctest::Approx(-1.0));
}

TEST_CASE("infeasible QP") {
    QpProblem qp(1);
    qp.set_quadratic(Mat{{2}});
    qp.add_le({1}, 0);
    qp.add_le({-1}, -1);
    CHECK(qp.minimize().status == QpStatus::Infeasible);
}

TEST_CASE("random projections agree with grid search") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    for (int trial = 0; trial < 30; ++trial) {
        Vec target{U(rng), U(rng)};
        QpProblem qp(2);
        qp.set_quadratic(Mat{{2, 0}, {0, 2}});
        qp.set_linear({-2 * target[0], -2 * target[1]});
        // Triangle x >= 0, y >= 0, x + y <= 1.
        qp.add_le({-1, 0}, 0);
        qp.add_le({0, -1}, 0);
        qp.add_le({1, 1}, 1);
        QpResult r = qp.minimize();
        REQUIRE(r.status == QpStatus::Optimal);
        double best = 1e100;
        const int N = 400;
        for (int i = 0; i <= N; ++i)
            for (int j = 0; j <= N - i; ++j) {
                double x = double(i) / N, y = double(j) / N;
                double v = (x - target[0]) * (x - target[0]) + (y - target[1]) * (y - target[1]);
                best = std::min(best, v);
            }
        double got = (r.x[0] - target[0]) * (r.x[0] - target[0]) +
                     (r.x[1] - target[1]) * (r.x[1] - target[1]);
        CHECK(got <= best + 1e-4);
        CHECK(r.x[0] >= -1e-9);
        CHECK(r.x[1] >= -1e-9);
        CHECK(r.x[0] + r.x[1] <= 1 + 1e-9);
    }
}

TEST_CASE("minimax of two quadratics") {
    // q1 = (x-1)^2, q2 = (x+1)^2 on [-3, 3]: minimax at x = 0, value 1.
    Mat H{{2}};
    MinMax2Result r = minimize_max_of_two_quadratics(1, H, {-2}, 1.0, H, {2}, 1.0, {{1.0}, {-1.0}},
                                                     {3.0, 3.0}, {}, {});
    REQUIRE(r.status == QpStatus::Optimal);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.lower_bound == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.x[0] == doctest::Approx(0.0).epsilon(1e-4));
}
