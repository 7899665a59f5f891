#pragma once

#include "dccert/certificates.hpp"
#include "dccert/conic.hpp"

namespace dccert {

enum class SolveStatus { Converged, MaxIter, Stalled };

struct SolveTrace {
    std::vector<std::pair<Vec, double>> iterates;  // (x, merit)
    SolveStatus status = SolveStatus::MaxIter;
    Vec final;
    double alpha = 0;  // best feasible objective value reached
};

/// DCA-style descent on the improvement-function reformulation: linearize
/// the subtracted control at the current iterate and minimize the convex
/// majorant over the box (one LP or QP per step). Polyhedral constraint
/// data required.
SolveTrace solve_dca(const Problem& P, const Vec& x0, const Polytope& box,
                     std::size_t max_iter = 200, double tol = 1e-9);

SolveTrace solve_dca_cone(const ConeProblem& P, const Vec& x0, const Polytope& box,
                          std::size_t max_iter = 200, double tol = 1e-9);

}  // namespace dccert
