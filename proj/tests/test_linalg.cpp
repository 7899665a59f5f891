#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dccert/linalg.hpp"

using namespace dccert;

TEST_CASE("solve_linear basic") {
    Mat A{{2, 1}, {1, 3}};
    Vec x;
    REQUIRE(solve_linear(A, {5, 10}, x));
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(3.0));
}

TEST_CASE("solve_linear singular") {
    Mat A{{1, 2}, {2, 4}};
    Vec x;
    CHECK_FALSE(solve_linear(A, {1, 2}, x));
}

TEST_CASE("null space of a rank-1 matrix in R^3") {
    Mat A(1, 3);
    A(0, 0) = 1;
    A(0, 1) = 1;
    A(0, 2) = 1;
    auto ns = null_space_basis(A);
    REQUIRE(ns.size() == 2);
    for (const auto& v : ns) {
        CHECK(std::abs(v[0] + v[1] + v[2]) < 1e-10);
        CHECK(norm2(v) == doctest::Approx(1.0));
    }
    CHECK(std::abs(dot(ns[0], ns[1])) < 1e-10);
}

TEST_CASE("lstsq consistent system") {
    Mat A{{1, 0}, {0, 1}, {1, 1}};
    Vec x = lstsq(A, {1, 2, 3});
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(x[1] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("eig_sym known 2x2") {
    Mat A{{0, 1}, {1, 0}};
    EigSym e = eig_sym(A);
    CHECK(e.values[0] == doctest::Approx(1.0));
    CHECK(e.values[1] == doctest::Approx(-1.0));
}

TEST_CASE("eig_sym reconstruction on random matrices") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t p = 2 + trial % 7;
        Mat A(p, p);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = i; j < p; ++j) A(i, j) = A(j, i) = gauss(rng);
        EigSym e = eig_sym(A);
        double fro = 0, err = 0;
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j) {
                double rec = 0;
                for (std::size_t k = 0; k < p; ++k)
                    rec += e.vectors(i, k) * e.values[k] * e.vectors(j, k);
                err += (rec - A(i, j)) * (rec - A(i, j));
                fro += A(i, j) * A(i, j);
            }
        CHECK(std::sqrt(err) <= 1e-8 * (1 + std::sqrt(fro)));
        // Orthonormality.
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b) {
                double s = 0;
                for (std::size_t i = 0; i < p; ++i) s += e.vectors(i, a) * e.vectors(i, b);
                CHECK(std::abs(s - (a == b ? 1.0 : 0.0)) <= 1e-10);
            }
        for (std::size_t k = 0; k + 1 < p; ++k) CHECK(e.values[k] >= e.values[k + 1] - 1e-12);
    }
}
