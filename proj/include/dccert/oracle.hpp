#pragma once

#include <functional>

#include "dccert/geometry.hpp"

namespace dccert {

/// Axis-aligned evaluation grid; total point count guarded at 1e7.
struct GridSpec {
    Vec lo, hi;
    std::size_t points_per_dim = 101;

    std::size_t dim() const { return lo.size(); }
};

struct BruteResult {
    bool found = false;  // false: NoFeasiblePoint
    Vec x_min;
    double value = 0;
    std::size_t feasible_count = 0;
};

/// Exhaustive grid minimization of a black-box objective under a black-box
/// feasibility test. Never shares code with the analytic checkers.
BruteResult brute_min(const std::function<bool(const Vec&)>& feasible,
                      const std::function<double(const Vec&)>& objective, const GridSpec& G);

/// Direct eps-subgradient inequality check on the given sample points:
/// false iff some sample refutes <xstar, y-x> <= f(y) - f(x) + eps.
bool subdiff_definition_check(const std::function<double(const Vec&)>& f, const Vec& x,
                              const Vec& xstar, double eps, const std::vector<Vec>& samples,
                              double tol = 1e-7);

/// Central finite differences per coordinate; throws DomainBoundary-style
/// InfiniteValueError when x +- step exits the domain.
Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double step = 1e-5);

/// Local grid search: best feasible improvement over a box around x.
double local_improvement(const std::function<bool(const Vec&)>& feasible,
                         const std::function<double(const Vec&)>& objective, const Vec& x,
                         double radius, std::size_t points_per_dim);

}  // namespace dccert
