#include "dccert/simplex.hpp"

#include <algorithm>
#include <limits>

namespace dccert {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kZeroTol = 1e-10;

// Tableau with rows 0..m-1 = constraints, row m = objective (reduced costs).
// Column layout: structural columns, then RHS as the last column.
struct Tableau {
    std::size_t m, n;  // constraints, structural columns
    Mat t;             // (m+1) x (n+1)
    std::vector<std::size_t> basis;  // basic column per row

    Tableau(std::size_t m_, std::size_t n_) : m(m_), n(n_), t(m_ + 1, n_ + 1), basis(m_, 0) {}

    double& rhs(std::size_t i) { return t(i, n); }
    double rhs(std::size_t i) const { return t(i, n); }

    void pivot(std::size_t pr, std::size_t pc) {
        double p = t(pr, pc);
        for (std::size_t j = 0; j <= n; ++j) t(pr, j) /= p;
        for (std::size_t i = 0; i <= m; ++i) {
            if (i == pr) continue;
            double f = t(i, pc);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= n; ++j) t(i, j) -= f * t(pr, j);
            t(i, pc) = 0.0;
        }
        if (pr < m) basis[pr] = pc;
    }

    // Bland's rule iteration; returns Optimal or Unbounded.
    LpStatus run(const std::vector<bool>& allowed) {
        const std::size_t max_iter = 2000 + 50 * (m + n) * (m + n);
        for (std::size_t iter = 0; iter < max_iter; ++iter) {
            std::size_t pc = n;
            for (std::size_t j = 0; j < n; ++j) {
                if (!allowed[j]) continue;
                if (t(m, j) < -kPivotTol) { pc = j; break; }
            }
            if (pc == n) return LpStatus::Optimal;

            std::size_t pr = m;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m; ++i) {
                if (t(i, pc) > kPivotTol) {
                    double ratio = rhs(i) / t(i, pc);
                    if (ratio < best_ratio - kZeroTol ||
                        (ratio < best_ratio + kZeroTol && (pr == m || basis[i] < basis[pr]))) {
                        best_ratio = ratio;
                        pr = i;
                    }
                }
            }
            if (pr == m) return LpStatus::Unbounded;
            pivot(pr, pc);
        }
        return LpStatus::Unbounded;  // cycling guard tripped
    }
};

}  // namespace

LpResult LpProblem::maximize(const Vec& c) const {
    const std::size_t n = n_;
    const std::size_t m_ub = A_ub_.size(), m_eq = A_eq_.size();
    const std::size_t m = m_ub + m_eq;
    // Columns: x+ (n), x- (n), slacks (m_ub), artificials (m).
    const std::size_t n_struct = 2 * n + m_ub;
    const std::size_t n_total = n_struct + m;

    Tableau tab(m, n_total);
    for (std::size_t i = 0; i < m; ++i) {
        const Vec& a = (i < m_ub) ? A_ub_[i] : A_eq_[i - m_ub];
        double b = (i < m_ub) ? b_ub_[i] : b_eq_[i - m_ub];
        double sgn = (b < 0.0) ? -1.0 : 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            tab.t(i, j) = sgn * a[j];
            tab.t(i, n + j) = -sgn * a[j];
        }
        if (i < m_ub) tab.t(i, 2 * n + i) = sgn;
        tab.t(i, n_struct + i) = 1.0;
        tab.rhs(i) = sgn * b;
        tab.basis[i] = n_struct + i;
    }

    // Phase I: minimize sum of artificials.
    for (std::size_t j = 0; j < n_total; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            if (tab.basis[i] >= n_struct) s += tab.t(i, j);
        tab.t(m, j) = (j >= n_struct ? 1.0 : 0.0) - s;
    }
    {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += tab.rhs(i);
        tab.rhs(m) = -s;
    }
    std::vector<bool> allowed(n_total, true);
    tab.run(allowed);
    if (tab.rhs(m) < -1e-7) return {LpStatus::Infeasible, {}, 0.0};

    // Drive remaining artificials out of the basis where possible.
    for (std::size_t i = 0; i < m; ++i) {
        if (tab.basis[i] < n_struct) continue;
        std::size_t pc = n_total;
        for (std::size_t j = 0; j < n_struct; ++j)
            if (std::abs(tab.t(i, j)) > kPivotTol) { pc = j; break; }
        if (pc < n_total) tab.pivot(i, pc);
        // Otherwise the row is redundant; leave the zero artificial basic.
    }
    for (std::size_t j = n_struct; j < n_total; ++j) allowed[j] = false;

    // Phase II objective: maximize c.(x+ - x-)  ==  minimize -c.(x+ - x-).
    for (std::size_t j = 0; j <= n_total; ++j) tab.t(m, j) = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        tab.t(m, j) = -c[j];
        tab.t(m, n + j) = c[j];
    }
    // Express in terms of the current basis.
    for (std::size_t i = 0; i < m; ++i) {
        double cb = 0.0;
        std::size_t bj = tab.basis[i];
        if (bj < n) cb = -c[bj];
        else if (bj < 2 * n) cb = c[bj - n];
        if (cb == 0.0) continue;
        for (std::size_t j = 0; j <= n_total; ++j) tab.t(m, j) -= cb * tab.t(i, j);
    }

    LpStatus st = tab.run(allowed);
    if (st == LpStatus::Unbounded) return {LpStatus::Unbounded, {}, 0.0};

    Vec x(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t bj = tab.basis[i];
        if (bj < n) x[bj] += tab.rhs(i);
        else if (bj < 2 * n) x[bj - n] -= tab.rhs(i);
    }
    LpResult res;
    res.status = LpStatus::Optimal;
    res.x = x;
    res.value = dot(c, x);
    return res;
}

}  // namespace dccert
