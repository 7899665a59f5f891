#include "dccert/oracle.hpp"

#include <cmath>
#include <limits>

#include "dccert/errors.hpp"

namespace dccert {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

BruteResult brute_min(const std::function<bool(const Vec&)>& feasible,
                      const std::function<double(const Vec&)>& objective, const GridSpec& G) {
    const std::size_t n = G.dim();
    if (G.points_per_dim < 2) throw InputError("brute_min: points_per_dim < 2");
    double total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= double(G.points_per_dim);
    if (total > 1e7) throw InputError("brute_min: grid exceeds the 1e7 point guard");

    BruteResult out;
    out.value = kInf;
    std::vector<std::size_t> idx(n, 0);
    Vec x(n);
    while (true) {
        for (std::size_t i = 0; i < n; ++i)
            x[i] = G.lo[i] + (G.hi[i] - G.lo[i]) * double(idx[i]) / double(G.points_per_dim - 1);
        if (feasible(x)) {
            ++out.feasible_count;
            double v = objective(x);
            if (v < out.value) {
                out.value = v;
                out.x_min = x;
                out.found = true;
            }
        }
        std::size_t k = 0;
        while (k < n && ++idx[k] == G.points_per_dim) idx[k++] = 0;
        if (k == n) break;
    }
    return out;
}

bool subdiff_definition_check(const std::function<double(const Vec&)>& f, const Vec& x,
                              const Vec& xstar, double eps, const std::vector<Vec>& samples,
                              double tol) {
    double fx = f(x);
    if (!(fx < kInf)) throw InfiniteValueError("subdiff_definition_check: f(x) infinite");
    for (const Vec& y : samples) {
        double fy = f(y);
        if (!(fy < kInf)) continue;
        if (dot(xstar, sub(y, x)) > fy - fx + eps + tol) return false;
    }
    return true;
}

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double step) {
    Vec g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        Vec xp = x, xm = x;
        xp[i] += step;
        xm[i] -= step;
        double fp = f(xp), fm = f(xm);
        if (!(fp < kInf) || !(fm < kInf))
            throw InfiniteValueError("fd_gradient: step exits the domain");
        g[i] = (fp - fm) / (2 * step);
    }
    return g;
}

double local_improvement(const std::function<bool(const Vec&)>& feasible,
                         const std::function<double(const Vec&)>& objective, const Vec& x,
                         double radius, std::size_t points_per_dim) {
    GridSpec G;
    G.lo = x;
    G.hi = x;
    for (auto& v : G.lo) v -= radius;
    for (auto& v : G.hi) v += radius;
    G.points_per_dim = points_per_dim;
    BruteResult r = brute_min(feasible, objective, G);
    if (!r.found) return 0.0;
    double fx = objective(x);
    return std::max(fx - r.value, 0.0);
}

}  // namespace dccert
