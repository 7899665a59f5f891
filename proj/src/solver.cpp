#include "dccert/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "dccert/qp.hpp"
#include "dccert/simplex.hpp"

namespace dccert {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

bool canon_quad_nonzero(const CanonFunc& f) {
    if (!f.has_quad) return false;
    for (std::size_t i = 0; i < f.n; ++i)
        for (std::size_t j = 0; j < f.n; ++j)
            if (std::abs(f.Q(i, j)) > 1e-14) return true;
    return false;
}

// Lexicographically smallest vertex of partial h(x_k), for determinism.
Vec control_subgradient(const CanonFunc& ch, const Vec& x) {
    if (canon_quad_nonzero(ch)) {
        Vec g = add(matvec(ch.Q, x), ch.q);
        for (const auto& p : ch.polys) {
            double m = -kInf;
            std::size_t best = 0;
            for (std::size_t t = 0; t < p.size(); ++t) {
                double v = dot(p[t].a, x) + p[t].b;
                if (v > m) { m = v; best = t; }
            }
            axpy(g, 1.0, p[best].a);
        }
        return g;
    }
    Polytope S = eps_subdiff_vrep(ch, x, 0.0);
    std::vector<Vec> vs = S.vertices();
    std::sort(vs.begin(), vs.end());
    return vs.front();
}

struct MeritPieces {
    // psi1 = u_obj(x) - alpha; psi2 = max-affine pieces (constraint gauge + h).
    CanonFunc u_obj;
    MaxAffineData f_pieces;  // pieces of psi2 = f + h (polyhedral by precondition)
    CanonFunc ch;            // control canon
    std::optional<Polytope> Q;  // abstract constraint kept hard

    double merit(const Vec& x, double alpha) const {
        if (Q && !contains(*Q, x, 1e-9)) return kInf;
        double p1 = eval(u_obj, x) - alpha;
        double p2 = -kInf;
        for (const auto& piece : f_pieces) p2 = std::max(p2, dot(piece.a, x) + piece.b);
        double hx = eval(ch, x);
        if (p1 == kInf || hx == kInf) return kInf;
        return std::max(p1, p2) - hx;
    }
};

// One majorization step: minimize max(u_obj - alpha, f-pieces) - l(x) over
// the box, where l is the linearization of h at xk.
Vec dca_step(const MeritPieces& mp, const Polytope& box, const Vec& xk, double alpha,
             const Vec& sk) {
    const std::size_t n = xk.size();
    double l0 = eval(mp.ch, xk) - dot(sk, xk);
    HRep hb = box.hrep();
    if (mp.Q) {
        const HRep& hq = mp.Q->hrep();
        for (std::size_t i = 0; i < hq.A.rows(); ++i) {
            hb.A.append_row(hq.A.row(i));
            hb.b.push_back(hq.b[i]);
        }
        for (std::size_t i = 0; i < hq.Aeq.rows(); ++i) {
            hb.Aeq.append_row(hq.Aeq.row(i));
            hb.beq.push_back(hq.beq[i]);
        }
    }
    for (std::size_t i = 0; i < hb.Aeq.rows(); ++i) {
        // Equality rows as paired inequalities for the LP/QP builders below.
        hb.A.append_row(hb.Aeq.row(i));
        hb.b.push_back(hb.beq[i]);
        hb.A.append_row(scale(hb.Aeq.row(i), -1.0));
        hb.b.push_back(-hb.beq[i]);
    }

    if (!canon_quad_nonzero(mp.u_obj)) {
        // Pure LP: vars (x, t).
        MaxAffineData obj_pieces;
        try {
            obj_pieces = flatten_to_max_affine(mp.u_obj);
        } catch (const NotRepresentableError&) {
            throw InputError("solve_dca: objective not polyhedral-representable");
        }
        LpProblem lp(n + 1);
        if (alpha < 1e50) {
            for (const auto& piece : obj_pieces) {
                Vec row(n + 1, 0.0);
                for (std::size_t i = 0; i < n; ++i) row[i] = piece.a[i];
                row[n] = -1.0;
                lp.add_le(row, alpha - piece.b);
            }
        }
        for (const auto& piece : mp.f_pieces) {
            Vec row(n + 1, 0.0);
            for (std::size_t i = 0; i < n; ++i) row[i] = piece.a[i];
            row[n] = -1.0;
            lp.add_le(row, -piece.b);
        }
        for (std::size_t i = 0; i < hb.A.rows(); ++i) {
            Vec row = hb.A.row(i);
            row.push_back(0.0);
            lp.add_le(row, hb.b[i]);
        }
        Vec c(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) c[i] = -sk[i];
        c[n] = 1.0;
        LpResult r = lp.minimize(c);
        if (r.status != LpStatus::Optimal) throw NumericFailureError("solve_dca: subproblem LP");
        return Vec(r.x.begin(), r.x.begin() + n);
    }

    if (alpha >= 1e50) {
        // Feasibility phase: the objective branch is inactive; minimize the
        // constraint-gauge majorant by LP.
        LpProblem lp(n + 1);
        for (const auto& piece : mp.f_pieces) {
            Vec row(n + 1, 0.0);
            for (std::size_t i = 0; i < n; ++i) row[i] = piece.a[i];
            row[n] = -1.0;
            lp.add_le(row, -piece.b);
        }
        for (std::size_t i = 0; i < hb.A.rows(); ++i) {
            Vec row = hb.A.row(i);
            row.push_back(0.0);
            lp.add_le(row, hb.b[i]);
        }
        Vec c(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) c[i] = -sk[i];
        c[n] = 1.0;
        LpResult r = lp.minimize(c);
        if (r.status != LpStatus::Optimal) throw NumericFailureError("solve_dca: subproblem LP");
        return Vec(r.x.begin(), r.x.begin() + n);
    }

    // Quadratic objective: dual ternary over the weight between the two
    // branches; each inner problem is a convex QP with an epigraph variable.
    auto inner = [&](double beta) -> std::pair<double, Vec> {
        QpProblem qp(n + 1);
        Mat H(n + 1, n + 1);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) H(i, j) = beta * mp.u_obj.Q(i, j);
        qp.set_quadratic(H);
        Vec g(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) g[i] = beta * mp.u_obj.q[i] - sk[i];
        g[n] = 1.0 - beta;
        qp.set_linear(g);
        for (const auto& piece : mp.f_pieces) {
            Vec row(n + 1, 0.0);
            for (std::size_t i = 0; i < n; ++i) row[i] = piece.a[i];
            row[n] = -1.0;
            qp.add_le(row, -piece.b);
        }
        for (std::size_t i = 0; i < hb.A.rows(); ++i) {
            Vec row = hb.A.row(i);
            row.push_back(0.0);
            qp.add_le(row, hb.b[i]);
        }
        QpResult r = qp.minimize();
        if (r.status != QpStatus::Optimal) return {kInf, {}};
        double val = r.value + beta * (mp.u_obj.c - alpha);
        return {val, Vec(r.x.begin(), r.x.begin() + n)};
    };
    // Majorant value at a candidate point.
    auto majorant = [&](const Vec& x) -> double {
        double p1 = eval(mp.u_obj, x) - alpha;
        double p2 = -kInf;
        for (const auto& piece : mp.f_pieces) p2 = std::max(p2, dot(piece.a, x) + piece.b);
        return std::max(p1, p2) - (l0 + dot(sk, x));
    };
    double lo = 0, hi = 1;
    double best_val = majorant(xk);
    Vec best_x = xk;
    auto consider = [&](const Vec& x) {
        if (x.empty()) return;
        double m = majorant(x);
        if (m < best_val) {
            best_val = m;
            best_x = x;
        }
    };
    consider(inner(0).second);
    consider(inner(1).second);
    for (int it = 0; it < 40; ++it) {
        double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
        auto [v1, x1] = inner(m1);
        auto [v2, x2] = inner(m2);
        consider(x1);
        consider(x2);
        if (v1 < v2) hi = m2;
        else lo = m1;
    }
    return best_x;
}

SolveTrace run_dca(const MeritPieces& mp, const Polytope& box, Vec x0,
                   std::function<bool(const Vec&)> feasible,
                   std::function<double(const Vec&)> objective, std::size_t max_iter,
                   double tol) {
    SolveTrace trace;
    Vec xk = x0;
    double alpha = kInf;
    if (feasible(xk)) alpha = objective(xk);
    if (alpha == kInf) {
        // Feasibility phase: alpha = +big makes the objective branch
        // inactive and the merit reduces to the constraint gauge.
        alpha = 1e100;
    }
    for (std::size_t it = 0; it < max_iter; ++it) {
        if (feasible(xk)) alpha = std::min(alpha, objective(xk));
        double mk = mp.merit(xk, alpha);
        trace.iterates.push_back({xk, mk});
        Vec sk = control_subgradient(mp.ch, xk);
        Vec xnext = dca_step(mp, box, xk, alpha, sk);
        // Majorant value of the step; no sufficient decrease means the
        // iterate is a fixed point of the majorization.
        double p1 = eval(mp.u_obj, xnext) - alpha;
        double p2 = -kInf;
        for (const auto& piece : mp.f_pieces) p2 = std::max(p2, dot(piece.a, xnext) + piece.b);
        double hx = eval(mp.ch, xk);
        double maj = std::max(p1, p2) - (hx + dot(sk, sub(xnext, xk)));
        if (maj >= mk - tol) {
            trace.status = SolveStatus::Converged;
            break;
        }
        xk = xnext;
    }
    if (trace.iterates.empty()) trace.iterates.push_back({xk, mp.merit(xk, alpha)});
    trace.final = trace.iterates.back().first;
    trace.alpha = alpha;
    return trace;
}

}  // namespace

SolveTrace solve_dca(const Problem& P, const Vec& x0, const Polytope& box, std::size_t max_iter,
                     double tol) {
    ImprovementObjective io = improvement_objective(P, P.feasible(x0) ? dc_eval(P.objective, x0)
                                                                      : 0.0);
    if (!io.psi2)
        throw InputError("solve_dca: constraint scalarizations are not polyhedral");
    MeritPieces mp;
    mp.u_obj = canonicalize(P.objective.u);
    mp.f_pieces = io.psi2->pieces();
    mp.ch = canonicalize(P.objective.h);
    mp.Q = P.Q;
    Polytope boxc = box.converted();
    return run_dca(
        mp, boxc, x0, [&](const Vec& x) { return P.feasible(x); },
        [&](const Vec& x) { return dc_eval(P.objective, x); }, max_iter, tol);
}

SolveTrace solve_dca_cone(const ConeProblem& P, const Vec& x0, const Polytope& box,
                          std::size_t max_iter, double tol) {
    // psi2 = max over base vertices of <lam, Phi> + h, no -1 shift.
    MaxAffineData pieces;
    for (const Vec& lam : P.base.B.vertices()) {
        CanonFunc part = P.Phi.scalarize(lam, 1.0);
        MaxAffineData flat = flatten_to_max_affine(part);  // throws if not polyhedral
        pieces.insert(pieces.end(), flat.begin(), flat.end());
    }
    MeritPieces mp;
    mp.u_obj = canonicalize(P.objective.u);
    mp.f_pieces = pieces;
    mp.ch = canonicalize(P.objective.h);
    mp.Q = P.Q;
    Polytope boxc = box.converted();
    return run_dca(
        mp, boxc, x0, [&](const Vec& x) { return P.feasible(x); },
        [&](const Vec& x) { return dc_eval(P.objective, x); }, max_iter, tol);
}

}  // namespace dccert
