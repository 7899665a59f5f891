#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dccert/simplex.hpp"

using namespace dccert;

TEST_CASE("1-D interval max") {
    LpProblem lp(1);
    lp.add_le({1}, 1);
    lp.add_le({-1}, 1);
    LpResult r = lp.maximize({1});
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.value == doctest::Approx(1.0));
}

TEST_CASE("2-D square with free variables") {
    LpProblem lp(2);
    lp.add_le({1, 0}, 1);
    lp.add_le({-1, 0}, 1);
    lp.add_le({0, 1}, 1);
    lp.add_le({0, -1}, 1);
    LpResult r = lp.maximize({1, 1});
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.value == doctest::Approx(2.0));
    CHECK(r.x[0] == doctest::Approx(1.0));
    CHECK(r.x[1] == doctest::Approx(1.0));
}

TEST_CASE("equality constraint simplex face") {
    // max 3a + 5b over the standard simplex in R^2.
    LpProblem lp(2);
    lp.add_eq({1, 1}, 1);
    lp.add_le({-1, 0}, 0);
    lp.add_le({0, -1}, 0);
    LpResult r = lp.maximize({3, 5});
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.value == doctest::Approx(5.0));
    CHECK(r.x[1] == doctest::Approx(1.0));
}

TEST_CASE("infeasible detection") {
    LpProblem lp(1);
    lp.add_le({1}, 0);
    lp.add_le({-1}, -1);  // x >= 1 and x <= 0
    CHECK(lp.feasible_point().status == LpStatus::Infeasible);
}

TEST_CASE("unbounded detection") {
    LpProblem lp(1);
    lp.add_le({-1}, 0);  // x >= 0
    CHECK(lp.maximize({1}).status == LpStatus::Unbounded);
}

TEST_CASE("degenerate constraints do not cycle") {
    LpProblem lp(2);
    lp.add_le({1, 0}, 1);
    lp.add_le({1, 0}, 1);
    lp.add_le({1, 1}, 1);
    lp.add_le({1, -1}, 1);
    lp.add_le({-1, 0}, 0);
    lp.add_le({0, -1}, 0);
    lp.add_le({0, 1}, 1);
    LpResult r = lp.maximize({1, 0});
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.value == doctest::Approx(1.0));
}

TEST_CASE("random LPs agree with vertex enumeration oracle") {
    // Boxes with random cut constraints in 2-D; compare against brute force
    // over a fine grid of the feasible region.
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        LpProblem lp(2);
        lp.add_le({1, 0}, 1);
        lp.add_le({-1, 0}, 1);
        lp.add_le({0, 1}, 1);
        lp.add_le({0, -1}, 1);
        std::vector<Vec> rows;
        Vec rhs;
        for (int k = 0; k < 3; ++k) {
            Vec a{U(rng), U(rng)};
            double b = U(rng) + 1.2;  // keeps the origin feasible
            lp.add_le(a, b);
            rows.push_back(a);
            rhs.push_back(b);
        }
        Vec c{U(rng), U(rng)};
        LpResult r = lp.maximize(c);
        REQUIRE(r.status == LpStatus::Optimal);

        double best = -1e100;
        const int N = 200;
        for (int i = 0; i <= N; ++i)
            for (int j = 0; j <= N; ++j) {
                Vec x{-1.0 + 2.0 * i / N, -1.0 + 2.0 * j / N};
                bool ok = true;
                for (std::size_t q = 0; q < rows.size() && ok; ++q)
                    if (dot(rows[q], x) > rhs[q]) ok = false;
                if (ok) best = std::max(best, dot(c, x));
            }
        CHECK(r.value >= best - 1e-9);
        CHECK(r.value <= best + 0.1);  // grid resolution slack
        for (std::size_t q = 0; q < rows.size(); ++q)
            CHECK(dot(rows[q], r.x) <= rhs[q] + 1e-8);
    }
}
