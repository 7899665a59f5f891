#pragma once

#include "dccert/linalg.hpp"
#include "dccert/simplex.hpp"

namespace dccert {

enum class QpStatus { Optimal, Infeasible, Unbounded, MaxIter };

struct QpResult {
    QpStatus status = QpStatus::Infeasible;
    Vec x;
    double value = 0;
};

/// Convex quadratic program  min 1/2 z'Hz + g.z  s.t.  A z <= b, E z = d.
/// H must be positive semidefinite; the feasible set need not be bounded
/// but the objective must be bounded below on it for Optimal.
class QpProblem {
public:
    explicit QpProblem(std::size_t nvars)
        : n_(nvars), H_(nvars, nvars), g_(nvars, 0.0) {}

    void set_quadratic(const Mat& H) { H_ = H; }
    void set_linear(const Vec& g) { g_ = g; }
    void add_le(const Vec& a, double b) { A_.push_back(a); b_.push_back(b); }
    void add_ge(const Vec& a, double b) { A_.push_back(scale(a, -1.0)); b_.push_back(-b); }
    void add_eq(const Vec& a, double b) { E_.push_back(a); d_.push_back(b); }

    std::size_t nvars() const { return n_; }

    QpResult minimize() const;

private:
    std::size_t n_;
    Mat H_;
    Vec g_;
    std::vector<Vec> A_, E_;
    Vec b_, d_;
};

/// min over the common feasible set of max(q1(z), q2(z)) for two convex
/// quadratics q_i(z) = 1/2 z'H_i z + g_i.z + c_i, computed through the dual
/// 1-D concave problem  max_{beta in [0,1]} min_z [beta q1 + (1-beta) q2].
/// Requires the feasible set bounded (minimax equality needs compactness).
struct MinMax2Result {
    QpStatus status;
    Vec x;
    double value;        // max(q1, q2) at x — an upper bound on the minimax
    double lower_bound;  // certified dual lower bound
};
MinMax2Result minimize_max_of_two_quadratics(std::size_t nvars, const Mat& H1, const Vec& g1,
                                             double c1, const Mat& H2, const Vec& g2, double c2,
                                             const std::vector<Vec>& A_le, const Vec& b_le,
                                             const std::vector<Vec>& A_eq, const Vec& b_eq);

/// max of 1/2 w'Aw + b.w over the Euclidean ball |w| <= r, for A PSD.
/// Exact through the eigendecomposition (trust-region style, maximization).
double max_quad_over_ball(const Mat& A, const Vec& b, double r);

}  // namespace dccert
