#include "dccert/qp.hpp"

#include <algorithm>
#include <limits>

namespace dccert {

namespace {

constexpr double kFeasTol = 1e-8;
constexpr double kStepTol = 1e-11;

double kInfty() { return std::numeric_limits<double>::infinity(); }

double quad_value(const Mat& H, const Vec& g, const Vec& z) {
    Vec Hz = matvec(H, z);
    return 0.5 * dot(z, Hz) + dot(g, z);
}

bool is_zero_matrix(const Mat& H, double tol) {
    for (std::size_t i = 0; i < H.rows(); ++i)
        for (std::size_t j = 0; j < H.cols(); ++j)
            if (std::abs(H(i, j)) > tol) return false;
    return true;
}

}  // namespace

QpResult QpProblem::minimize() const {
    const std::size_t n = n_;

    double hscale = 0.0;
    for (std::size_t i = 0; i < n; ++i) hscale = std::max(hscale, std::abs(H_(i, i)));
    if (is_zero_matrix(H_, 1e-14 * (1.0 + hscale))) {
        LpProblem lp(n);
        for (std::size_t i = 0; i < A_.size(); ++i) lp.add_le(A_[i], b_[i]);
        for (std::size_t i = 0; i < E_.size(); ++i) lp.add_eq(E_[i], d_[i]);
        LpResult lr = lp.minimize(g_);
        QpResult out;
        out.status = lr.status == LpStatus::Optimal    ? QpStatus::Optimal
                     : lr.status == LpStatus::Unbounded ? QpStatus::Unbounded
                                                         : QpStatus::Infeasible;
        out.x = lr.x;
        out.value = lr.value;
        return out;
    }

    // Phase 1: any feasible point.
    Vec z;
    {
        LpProblem lp(n);
        for (std::size_t i = 0; i < A_.size(); ++i) lp.add_le(A_[i], b_[i]);
        for (std::size_t i = 0; i < E_.size(); ++i) lp.add_eq(E_[i], d_[i]);
        LpResult lr = lp.feasible_point();
        if (lr.status != LpStatus::Optimal) return {QpStatus::Infeasible, {}, 0.0};
        z = lr.x;
    }

    const double curv_tol = 1e-11 * (1.0 + hscale);
    std::vector<bool> in_ws(A_.size(), false);
    for (std::size_t i = 0; i < A_.size(); ++i)
        if (dot(A_[i], z) >= b_[i] - kFeasTol) in_ws[i] = true;

    const std::size_t max_iter = 300 + 20 * (n + A_.size());
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        Mat W(0, n);
        std::vector<std::size_t> ws_rows;
        for (const Vec& e : E_) W.append_row(e);
        for (std::size_t i = 0; i < A_.size(); ++i)
            if (in_ws[i]) { W.append_row(A_[i]); ws_rows.push_back(i); }

        Vec grad = add(matvec(H_, z), g_);
        std::vector<Vec> Z = (W.rows() == 0)
                                 ? [&] {
                                       std::vector<Vec> id;
                                       for (std::size_t j = 0; j < n; ++j) {
                                           Vec e(n, 0.0);
                                           e[j] = 1.0;
                                           id.push_back(e);
                                       }
                                       return id;
                                   }()
                                 : null_space_basis(W);

        Vec p(n, 0.0);
        Vec ray;
        if (!Z.empty()) {
            const std::size_t k = Z.size();
            Mat R(k, k);
            Vec r(k, 0.0);
            for (std::size_t a = 0; a < k; ++a) {
                Vec HZa = matvec(H_, Z[a]);
                for (std::size_t bcol = 0; bcol < k; ++bcol) R(a, bcol) = dot(Z[bcol], HZa);
                r[a] = dot(Z[a], grad);
            }
            EigSym es = eig_sym(R);
            for (std::size_t idx = 0; idx < k; ++idx) {
                Vec v(k);
                for (std::size_t a = 0; a < k; ++a) v[a] = es.vectors(a, idx);
                double vr = dot(v, r);
                if (es.values[idx] > curv_tol) {
                    double step = -vr / es.values[idx];
                    Vec dir(n, 0.0);
                    for (std::size_t a = 0; a < k; ++a) axpy(dir, v[a], Z[a]);
                    axpy(p, step, dir);
                } else if (std::abs(vr) > 1e-10 * (1.0 + norm_inf(grad))) {
                    ray.assign(n, 0.0);
                    for (std::size_t a = 0; a < k; ++a) axpy(ray, (vr > 0 ? -v[a] : v[a]), Z[a]);
                }
            }
        }

        if (!ray.empty()) {
            double alpha = std::numeric_limits<double>::infinity();
            std::size_t blocker = A_.size();
            for (std::size_t i = 0; i < A_.size(); ++i) {
                if (in_ws[i]) continue;
                double ad = dot(A_[i], ray);
                if (ad > kStepTol) {
                    double a = (b_[i] - dot(A_[i], z)) / ad;
                    if (a < alpha) { alpha = a; blocker = i; }
                }
            }
            if (blocker == A_.size()) return {QpStatus::Unbounded, z, quad_value(H_, g_, z)};
            axpy(z, std::max(alpha, 0.0), ray);
            in_ws[blocker] = true;
            continue;
        }

        if (norm_inf(p) <= kStepTol * (1.0 + norm_inf(z))) {
            // KKT multipliers for the working set.
            if (ws_rows.empty()) return {QpStatus::Optimal, z, quad_value(H_, g_, z)};
            Mat Wt(n, W.rows());
            for (std::size_t i = 0; i < W.rows(); ++i)
                for (std::size_t j = 0; j < n; ++j) Wt(j, i) = W(i, j);
            Vec nu = lstsq(Wt, scale(grad, -1.0));
            double worst = -1e-9;
            std::size_t drop = A_.size();
            for (std::size_t q = 0; q < ws_rows.size(); ++q) {
                double v = nu[E_.size() + q];
                if (v < worst) { worst = v; drop = ws_rows[q]; }
            }
            if (drop == A_.size()) return {QpStatus::Optimal, z, quad_value(H_, g_, z)};
            in_ws[drop] = false;
            continue;
        }

        double alpha = 1.0;
        std::size_t blocker = A_.size();
        for (std::size_t i = 0; i < A_.size(); ++i) {
            if (in_ws[i]) continue;
            double ad = dot(A_[i], p);
            if (ad > kStepTol) {
                double a = (b_[i] - dot(A_[i], z)) / ad;
                if (a < alpha) { alpha = a; blocker = i; }
            }
        }
        axpy(z, std::max(alpha, 0.0), p);
        if (blocker != A_.size()) in_ws[blocker] = true;
    }
    return {QpStatus::MaxIter, z, quad_value(H_, g_, z)};
}

double max_quad_over_ball(const Mat& A, const Vec& b, double r) {
    const std::size_t n = b.size();
    if (r <= 0) return 0.0;
    EigSym es = eig_sym(A);
    Vec bt(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) bt[k] += es.vectors(i, k) * b[i];
    double lmax = es.values.empty() ? 0.0 : es.values[0];

    auto value_at = [&](const Vec& wt) {
        double v = 0;
        for (std::size_t k = 0; k < n; ++k) v += 0.5 * es.values[k] * wt[k] * wt[k] + bt[k] * wt[k];
        return v;
    };

    if (norm2(bt) <= 1e-14 * (1.0 + std::abs(lmax))) {
        // Pure quadratic: align with the top eigenvector.
        return 0.5 * std::max(lmax, 0.0) * r * r;
    }

    // Convex objective: the maximum sits on the boundary. Solve the secular
    // equation |(mu I - Lambda)^-1 bt| = r for mu > lmax; if the norm stays
    // short as mu -> lmax+ (hard case), pad with the top eigendirection.
    auto norm_at = [&](double mu) {
        double s = 0;
        for (std::size_t k = 0; k < n; ++k) {
            double d = mu - es.values[k];
            if (d <= 0) return kInfty();
            s += (bt[k] / d) * (bt[k] / d);
        }
        return std::sqrt(s);
    };
    double lo = lmax + 1e-14 * (1.0 + std::abs(lmax)), hi = lmax + 1.0;
    if (norm_at(lo) < r) {
        // Hard case: w = w(lmax) on the non-top components + top padding.
        Vec wt(n, 0.0);
        double used = 0;
        for (std::size_t k = 0; k < n; ++k) {
            double d = lmax - es.values[k];
            if (d > 1e-12 * (1.0 + std::abs(lmax))) {
                wt[k] = bt[k] / d;
                used += wt[k] * wt[k];
            }
        }
        double pad = std::sqrt(std::max(r * r - used, 0.0));
        // Choose the sign of the padding to not fight the linear term.
        double best = -1e300;
        for (double sgn : {1.0, -1.0}) {
            Vec w2 = wt;
            for (std::size_t k = 0; k < n; ++k)
                if (std::abs(lmax - es.values[k]) <= 1e-12 * (1.0 + std::abs(lmax)))
                    { w2[k] = sgn * pad; break; }
            best = std::max(best, value_at(w2));
        }
        return best;
    }
    while (norm_at(hi) > r) hi = lmax + (hi - lmax) * 2.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (norm_at(mid) > r) lo = mid;
        else hi = mid;
    }
    double mu = 0.5 * (lo + hi);
    Vec wt(n);
    for (std::size_t k = 0; k < n; ++k) wt[k] = bt[k] / (mu - es.values[k]);
    return value_at(wt);
}

MinMax2Result minimize_max_of_two_quadratics(std::size_t nvars, const Mat& H1, const Vec& g1,
                                             double c1, const Mat& H2, const Vec& g2, double c2,
                                             const std::vector<Vec>& A_le, const Vec& b_le,
                                             const std::vector<Vec>& A_eq, const Vec& b_eq) {
    auto q1 = [&](const Vec& z) { return quad_value(H1, g1, z) + c1; };
    auto q2 = [&](const Vec& z) { return quad_value(H2, g2, z) + c2; };

    struct Inner {
        double phi;
        Vec z;
        bool ok;
    };
    auto inner = [&](double beta) -> Inner {
        QpProblem qp(nvars);
        Mat H(nvars, nvars);
        Vec g(nvars, 0.0);
        for (std::size_t i = 0; i < nvars; ++i) {
            g[i] = beta * g1[i] + (1 - beta) * g2[i];
            for (std::size_t j = 0; j < nvars; ++j)
                H(i, j) = beta * H1(i, j) + (1 - beta) * H2(i, j);
        }
        qp.set_quadratic(H);
        qp.set_linear(g);
        for (std::size_t i = 0; i < A_le.size(); ++i) qp.add_le(A_le[i], b_le[i]);
        for (std::size_t i = 0; i < A_eq.size(); ++i) qp.add_eq(A_eq[i], b_eq[i]);
        QpResult r = qp.minimize();
        if (r.status != QpStatus::Optimal) return {0.0, {}, false};
        return {r.value + beta * c1 + (1 - beta) * c2, r.x, true};
    };

    MinMax2Result out;
    out.status = QpStatus::Infeasible;
    out.value = std::numeric_limits<double>::infinity();
    out.lower_bound = -std::numeric_limits<double>::infinity();

    double lo = 0.0, hi = 1.0;
    auto consider = [&](const Inner& r) {
        if (!r.ok) return;
        out.status = QpStatus::Optimal;
        out.lower_bound = std::max(out.lower_bound, r.phi);
        double ub = std::max(q1(r.z), q2(r.z));
        if (ub < out.value) { out.value = ub; out.x = r.z; }
    };
    consider(inner(0.0));
    consider(inner(1.0));
    if (out.status != QpStatus::Optimal) return out;

    for (int it = 0; it < 60; ++it) {
        double m1 = lo + (hi - lo) / 3.0;
        double m2 = hi - (hi - lo) / 3.0;
        Inner r1 = inner(m1), r2 = inner(m2);
        consider(r1);
        consider(r2);
        if (!r1.ok || !r2.ok) break;
        if (r1.phi < r2.phi) lo = m1;
        else hi = m2;
        if (out.value - out.lower_bound < 1e-12 * (1.0 + std::abs(out.value))) break;
    }
    return out;
}

}  // namespace dccert
