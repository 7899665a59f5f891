#pragma once

#include "dccert/linalg.hpp"

namespace dccert {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    Vec x;             // primal solution (free variables)
    double value = 0;  // objective at x
};

/// Dense two-phase primal simplex on the tableau, Bland's rule.
///
/// Solves  max c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x free.
/// Free variables are split internally; problems stay desk-scale so the
/// doubling is harmless.
class LpProblem {
public:
    explicit LpProblem(std::size_t nvars) : n_(nvars) {}

    void add_le(const Vec& a, double b) { A_ub_.push_back(a); b_ub_.push_back(b); }
    void add_ge(const Vec& a, double b) { A_ub_.push_back(scale(a, -1.0)); b_ub_.push_back(-b); }
    void add_eq(const Vec& a, double b) { A_eq_.push_back(a); b_eq_.push_back(b); }

    std::size_t nvars() const { return n_; }

    LpResult maximize(const Vec& c) const;
    LpResult minimize(const Vec& c) const {
        LpResult r = maximize(scale(c, -1.0));
        r.value = -r.value;
        return r;
    }
    /// Feasibility check (zero objective).
    LpResult feasible_point() const { return maximize(Vec(n_, 0.0)); }

private:
    std::size_t n_;
    std::vector<Vec> A_ub_, A_eq_;
    Vec b_ub_, b_eq_;
};

}  // namespace dccert
