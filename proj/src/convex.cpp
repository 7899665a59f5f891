#include "dccert/convex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dccert/qp.hpp"
#include "dccert/simplex.hpp"

namespace dccert {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

ConvexFunc ConvexFunc::max_affine(std::size_t n, MaxAffineData pieces) {
    if (pieces.empty()) throw InputError("max_affine: needs at least one piece");
    for (const auto& p : pieces)
        if (p.a.size() != n) throw InputError("max_affine: piece dimension mismatch");
    ConvexFunc f;
    f.kind_ = Kind::MaxAffine;
    f.n_ = n;
    f.pieces_ = std::move(pieces);
    return f;
}

ConvexFunc ConvexFunc::quadratic(const Mat& Q, const Vec& q, double c) {
    ConvexFunc f;
    f.kind_ = Kind::Quadratic;
    f.n_ = q.size();
    if (Q.rows() != f.n_ || Q.cols() != f.n_) throw InputError("quadratic: shape mismatch");
    double scale0 = 0.0;
    for (std::size_t i = 0; i < f.n_; ++i) scale0 = std::max(scale0, std::abs(Q(i, i)));
    EigSym es = eig_sym(Q);
    if (!es.values.empty() && es.values.back() < -1e-9 * (1.0 + scale0))
        throw InputError("quadratic: Q is not positive semidefinite");
    f.Q_ = Q;
    f.q_ = q;
    f.c_ = c;
    return f;
}

ConvexFunc ConvexFunc::indicator(const Polytope& P) {
    if (P.is_empty()) throw EmptySetError("indicator of the empty set is improper");
    ConvexFunc f;
    f.kind_ = Kind::IndicatorPoly;
    f.n_ = P.dim();
    f.poly_ = std::make_shared<Polytope>(P.converted());
    return f;
}

ConvexFunc ConvexFunc::sum(std::vector<ConvexFunc> terms) {
    if (terms.empty()) throw InputError("sum: needs terms");
    for (const auto& t : terms)
        if (t.dim() != terms[0].dim()) throw InputError("sum: dimension mismatch");
    ConvexFunc f;
    f.kind_ = Kind::Sum;
    f.n_ = terms[0].dim();
    f.terms_ = std::move(terms);
    return f;
}

CanonFunc canonicalize(const ConvexFunc& f) {
    CanonFunc out;
    out.n = f.dim();
    switch (f.kind()) {
        case ConvexFunc::Kind::MaxAffine:
            if (f.pieces().size() == 1) {
                // Affine content folds into the (zero) quadratic part.
                out.has_quad = true;
                out.Q = Mat(out.n, out.n);
                out.q = f.pieces()[0].a;
                out.c = f.pieces()[0].b;
            } else {
                out.polys.push_back(f.pieces());
            }
            break;
        case ConvexFunc::Kind::Quadratic:
            out.has_quad = true;
            out.Q = f.Q();
            out.q = f.q();
            out.c = f.c();
            break;
        case ConvexFunc::Kind::IndicatorPoly:
            out.doms.push_back(f.domain_poly());
            break;
        case ConvexFunc::Kind::Sum: {
            for (const auto& t : f.terms()) out = add_canon(out, canonicalize(t));
            break;
        }
    }
    if (!out.has_quad) {
        out.Q = Mat(out.n, out.n);
        out.q = Vec(out.n, 0.0);
    }
    return out;
}

CanonFunc add_canon(const CanonFunc& f, const CanonFunc& g) {
    CanonFunc out;
    out.n = std::max(f.n, g.n);
    out.has_quad = f.has_quad || g.has_quad;
    out.Q = Mat(out.n, out.n);
    out.q = Vec(out.n, 0.0);
    out.c = f.c + g.c;
    for (const CanonFunc* src : {&f, &g}) {
        if (src->n == 0) continue;
        if (src->has_quad) {
            for (std::size_t i = 0; i < src->n; ++i) {
                out.q[i] += src->q[i];
                for (std::size_t j = 0; j < src->n; ++j) out.Q(i, j) += src->Q(i, j);
            }
        }
        for (const auto& p : src->polys) out.polys.push_back(p);
        for (const auto& d : src->doms) out.doms.push_back(d);
    }
    return out;
}

CanonFunc scale_canon(const CanonFunc& f, double coef) {
    CanonFunc out;
    out.n = f.n;
    out.Q = Mat(f.n, f.n);
    out.q = Vec(f.n, 0.0);
    if (coef == 0.0) {
        // 0*f is the indicator of dom f.
        out.doms = f.doms;
        return out;
    }
    out.has_quad = f.has_quad;
    if (f.has_quad) {
        for (std::size_t i = 0; i < f.n; ++i) {
            out.q[i] = coef * f.q[i];
            for (std::size_t j = 0; j < f.n; ++j) out.Q(i, j) = coef * f.Q(i, j);
        }
        out.c = coef * f.c;
    }
    for (const auto& p : f.polys) {
        if (coef > 0) {
            MaxAffineData sp;
            for (const auto& piece : p) sp.push_back({scale(piece.a, coef), coef * piece.b});
            out.polys.push_back(sp);
        } else if (p.size() == 1) {
            // Affine piece: negative scaling folds into the linear part.
            out.has_quad = true;
            axpy(out.q, coef, p[0].a);
            out.c += coef * p[0].b;
        } else {
            throw NotRepresentableError("negative weight on a nonsmooth max-affine term");
        }
    }
    if (!f.doms.empty()) {
        if (coef > 0) out.doms = f.doms;
        else throw NotRepresentableError("negative weight on an indicator term");
    }
    return out;
}

bool same_pieces(const MaxAffineData& a, const MaxAffineData& b, double tol) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a[i].b - b[i].b) > tol) return false;
        for (std::size_t j = 0; j < a[i].a.size(); ++j)
            if (std::abs(a[i].a[j] - b[i].a[j]) > tol) return false;
    }
    return true;
}

CanonFunc weighted_canon_combination(const std::vector<std::pair<double, const CanonFunc*>>& parts,
                                     std::size_t n) {
    CanonFunc out;
    out.n = n;
    out.Q = Mat(n, n);
    out.q = Vec(n, 0.0);

    // Pool weights of identical max-affine factors and indicator domains.
    std::vector<std::pair<double, const MaxAffineData*>> pooled_polys;
    std::vector<std::pair<double, const Polytope*>> pooled_doms;
    for (const auto& [w, f] : parts) {
        if (w == 0.0 && f->doms.empty()) continue;
        if (f->has_quad && w != 0.0) {
            out.has_quad = true;
            for (std::size_t i = 0; i < n; ++i) {
                out.q[i] += w * f->q[i];
                for (std::size_t j = 0; j < n; ++j) out.Q(i, j) += w * f->Q(i, j);
            }
            out.c += w * f->c;
        }
        for (const auto& p : f->polys) {
            if (w == 0.0) continue;
            bool merged = false;
            for (auto& [pw, pf] : pooled_polys)
                if (same_pieces(*pf, p)) {
                    pw += w;
                    merged = true;
                    break;
                }
            if (!merged) pooled_polys.push_back({w, &p});
        }
        for (const auto& d : f->doms) {
            bool merged = false;
            for (auto& [dw, df] : pooled_doms)
                if (polytope_equal(*df, d, 1e-10)) {
                    dw += std::max(w, 0.0);
                    merged = true;
                    break;
                }
            if (!merged) pooled_doms.push_back({std::max(w, 0.0), &d});
            if (w < 0.0) throw NotRepresentableError("negative weight on an indicator term");
        }
    }
    for (const auto& [w, p] : pooled_polys) {
        if (std::abs(w) < 1e-14) continue;
        if (w > 0) {
            MaxAffineData sp;
            for (const auto& piece : *p) sp.push_back({scale(piece.a, w), w * piece.b});
            out.polys.push_back(sp);
        } else if (p->size() == 1) {
            out.has_quad = true;
            axpy(out.q, w, (*p)[0].a);
            out.c += w * (*p)[0].b;
        } else {
            throw NotRepresentableError("pooled weight negative on a nonsmooth max-affine term");
        }
    }
    for (const auto& [w, d] : pooled_doms) out.doms.push_back(*d);
    finalize_quadratic(out);
    return out;
}

void finalize_quadratic(CanonFunc& f, double psd_tol) {
    if (!f.has_quad) return;
    double scale0 = 0.0;
    for (std::size_t i = 0; i < f.n; ++i) scale0 = std::max(scale0, std::abs(f.Q(i, i)));
    if (scale0 == 0.0) return;
    EigSym es = eig_sym(f.Q);
    double lo = es.values.back();
    if (lo < -psd_tol * (1.0 + scale0))
        throw NotRepresentableError("combined quadratic part is not convex");
    if (lo < 0) {
        // Clip curvature at zero to keep downstream solves PSD.
        for (std::size_t i = 0; i < f.n; ++i)
            for (std::size_t j = 0; j < f.n; ++j) {
                double v = 0;
                for (std::size_t k = 0; k < f.n; ++k)
                    v += es.vectors(i, k) * std::max(es.values[k], 0.0) * es.vectors(j, k);
                f.Q(i, j) = v;
            }
    }
}

double eval(const CanonFunc& f, const Vec& x, double tol) {
    for (const auto& d : f.doms)
        if (!contains(d, x, tol)) return kInf;
    double v = f.c;
    if (f.has_quad) {
        Vec Qx = matvec(f.Q, x);
        v += 0.5 * dot(x, Qx) + dot(f.q, x);
    }
    for (const auto& p : f.polys) {
        double m = -kInf;
        for (const auto& piece : p) m = std::max(m, dot(piece.a, x) + piece.b);
        v += m;
    }
    return v;
}

double eval(const ConvexFunc& f, const Vec& x, double tol) {
    switch (f.kind()) {
        case ConvexFunc::Kind::MaxAffine: {
            double m = -kInf;
            for (const auto& piece : f.pieces()) m = std::max(m, dot(piece.a, x) + piece.b);
            return m;
        }
        case ConvexFunc::Kind::Quadratic: {
            Vec Qx = matvec(f.Q(), x);
            return 0.5 * dot(x, Qx) + dot(f.q(), x) + f.c();
        }
        case ConvexFunc::Kind::IndicatorPoly:
            return contains(f.domain_poly(), x, tol) ? 0.0 : kInf;
        case ConvexFunc::Kind::Sum: {
            double s = 0.0;
            for (const auto& t : f.terms()) {
                double v = eval(t, x, tol);
                if (v == kInf) return kInf;
                s += v;
            }
            return s;
        }
    }
    return kInf;
}

namespace {

// Growth rate of the conjugate objective along null directions of Q:
// a positive optimum certifies conjugate = +infinity (domain-free case).
bool conjugate_unbounded(const CanonFunc& f, const Vec& y) {
    std::vector<Vec> N = null_space_basis(f.Q);
    if (N.empty()) return false;
    const std::size_t k = N.size(), np = f.polys.size();
    // vars: z (k), s_j per poly; maximize (y-q).d - sum s_j, d = N z, |z|<=1.
    LpProblem lp(k + np);
    for (std::size_t j = 0; j < np; ++j) {
        for (const auto& piece : f.polys[j]) {
            Vec row(k + np, 0.0);
            for (std::size_t a = 0; a < k; ++a) row[a] = dot(piece.a, N[a]);
            row[k + j] = -1.0;
            lp.add_le(row, 0.0);
        }
    }
    for (std::size_t a = 0; a < k; ++a) {
        Vec e(k + np, 0.0);
        e[a] = 1.0;
        lp.add_le(e, 1.0);
        e[a] = -1.0;
        lp.add_le(e, 1.0);
    }
    Vec obj(k + np, 0.0);
    Vec yq = sub(y, f.q);
    for (std::size_t a = 0; a < k; ++a) obj[a] = dot(yq, N[a]);
    for (std::size_t j = 0; j < np; ++j) obj[k + j] = -1.0;
    LpResult r = lp.maximize(obj);
    return r.status == LpStatus::Optimal && r.value > 1e-9;
}

void append_dom_rows_lifted(const Polytope& d, std::size_t nv, std::size_t n, LpProblem& lp) {
    const HRep& h = d.hrep();
    for (std::size_t i = 0; i < h.A.rows(); ++i) {
        Vec row(nv, 0.0);
        Vec a = h.A.row(i);
        for (std::size_t c = 0; c < n; ++c) row[c] = a[c];
        lp.add_le(row, h.b[i]);
    }
    for (std::size_t i = 0; i < h.Aeq.rows(); ++i) {
        Vec row(nv, 0.0);
        Vec a = h.Aeq.row(i);
        for (std::size_t c = 0; c < n; ++c) row[c] = a[c];
        lp.add_eq(row, h.beq[i]);
    }
}

}  // namespace

ConjResult conjugate_with_arg(const CanonFunc& f, const Vec& y) {
    const std::size_t n = f.n;
    const std::size_t np = f.polys.size();

    // Pure quadratic: stationary point or inconsistency.
    if (np == 0 && f.doms.empty()) {
        if (!f.has_quad)
            return (norm2(y) <= 1e-12) ? ConjResult{-f.c, Vec(n, 0.0), true}
                                       : ConjResult{kInf, {}, false};
        Vec rhs = sub(y, f.q);
        Vec xhat;
        if (!solve_linear(f.Q, rhs, xhat)) {
            xhat = lstsq(f.Q, rhs);
            Vec res = sub(matvec(f.Q, xhat), rhs);
            if (norm2(res) > 1e-7 * (1.0 + norm2(rhs))) return {kInf, {}, false};
        }
        Vec Qx = matvec(f.Q, xhat);
        double fx = 0.5 * dot(xhat, Qx) + dot(f.q, xhat) + f.c;
        return {dot(y, xhat) - fx, xhat, true};
    }

    bool quad_active = false;
    if (f.has_quad)
        for (std::size_t i = 0; i < n && !quad_active; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (std::abs(f.Q(i, j)) > 1e-14) { quad_active = true; break; }

    if (!quad_active) {
        // LP in (x, t_j): max (y-q).x - sum t_j.
        LpProblem lp(n + np);
        for (std::size_t j = 0; j < np; ++j)
            for (const auto& piece : f.polys[j]) {
                Vec row(n + np, 0.0);
                for (std::size_t i = 0; i < n; ++i) row[i] = piece.a[i];
                row[n + j] = -1.0;
                lp.add_le(row, -piece.b);
            }
        for (const auto& d : f.doms) append_dom_rows_lifted(d, n + np, n, lp);
        Vec obj(n + np, 0.0);
        for (std::size_t i = 0; i < n; ++i) obj[i] = y[i] - (f.has_quad ? f.q[i] : 0.0);
        for (std::size_t j = 0; j < np; ++j) obj[n + j] = -1.0;
        LpResult r = lp.maximize(obj);
        if (r.status == LpStatus::Unbounded) return {kInf, {}, false};
        if (r.status == LpStatus::Infeasible) return {-kInf, {}, false};  // improper
        Vec arg(r.x.begin(), r.x.begin() + n);
        return {r.value - f.c, arg, true};
    }

    // Quadratic plus polyhedral structure: convex QP.
    if (f.doms.empty() && conjugate_unbounded(f, y)) return {kInf, {}, false};
    QpProblem qp(n + np);
    Mat H(n + np, n + np);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) H(i, j) = f.Q(i, j);
    qp.set_quadratic(H);
    Vec g(n + np, 0.0);
    for (std::size_t i = 0; i < n; ++i) g[i] = f.q[i] - y[i];
    for (std::size_t j = 0; j < np; ++j) g[n + j] = 1.0;
    qp.set_linear(g);
    for (std::size_t j = 0; j < np; ++j)
        for (const auto& piece : f.polys[j]) {
            Vec row(n + np, 0.0);
            for (std::size_t i = 0; i < n; ++i) row[i] = piece.a[i];
            row[n + j] = -1.0;
            qp.add_le(row, -piece.b);
        }
    for (const auto& d : f.doms) {
        const HRep& h = d.hrep();
        for (std::size_t i = 0; i < h.A.rows(); ++i) {
            Vec row(n + np, 0.0);
            Vec a = h.A.row(i);
            for (std::size_t c = 0; c < n; ++c) row[c] = a[c];
            qp.add_le(row, h.b[i]);
        }
        for (std::size_t i = 0; i < h.Aeq.rows(); ++i) {
            Vec row(n + np, 0.0);
            Vec a = h.Aeq.row(i);
            for (std::size_t c = 0; c < n; ++c) row[c] = a[c];
            qp.add_eq(row, h.beq[i]);
        }
    }
    QpResult r = qp.minimize();
    if (r.status == QpStatus::Infeasible) return {-kInf, {}, false};
    if (r.status == QpStatus::Unbounded) return {kInf, {}, false};
    if (r.status == QpStatus::MaxIter) throw NumericFailureError("conjugate_value: QP stalled");
    Vec arg(r.x.begin(), r.x.begin() + n);
    return {-(r.value + f.c), arg, true};
}

double conjugate_value(const CanonFunc& f, const Vec& y) { return conjugate_with_arg(f, y).value; }

double conjugate_value(const ConvexFunc& f, const Vec& y) {
    return conjugate_value(canonicalize(f), y);
}

bool in_eps_subdiff(const CanonFunc& f, const Vec& x, const Vec& y, double eps, double tol) {
    double fx = eval(f, x);
    if (fx == kInf) throw InfiniteValueError("in_eps_subdiff: f(x) infinite");
    double conj = conjugate_value(f, y);
    if (conj == kInf) return false;
    return fx + conj <= dot(y, x) + eps + tol;
}

bool in_eps_subdiff(const ConvexFunc& f, const Vec& x, const Vec& y, double eps, double tol) {
    return in_eps_subdiff(canonicalize(f), x, y, eps, tol);
}

namespace {

// Merge several max-affine terms into one by cross-summing pieces.
MaxAffineData merge_polys(const std::vector<MaxAffineData>& polys, std::size_t n) {
    MaxAffineData acc{{Vec(n, 0.0), 0.0}};
    for (const auto& p : polys) {
        if (acc.size() * p.size() > 20000)
            throw NumericFailureError("max-affine merge: piece blow-up");
        MaxAffineData next;
        for (const auto& x : acc)
            for (const auto& y : p) next.push_back({add(x.a, y.a), x.b + y.b});
        acc.swap(next);
    }
    return acc;
}

}  // namespace

MaxAffineData flatten_to_max_affine(const CanonFunc& f) {
    bool quad_active = false;
    if (f.has_quad)
        for (std::size_t i = 0; i < f.n && !quad_active; ++i)
            for (std::size_t j = 0; j < f.n; ++j)
                if (std::abs(f.Q(i, j)) > 1e-14) { quad_active = true; break; }
    if (quad_active || !f.doms.empty())
        throw NotRepresentableError("flatten_to_max_affine: polyhedral full-domain kinds only");
    MaxAffineData merged = merge_polys(f.polys, f.n);
    Vec shift = f.has_quad ? f.q : Vec(f.n, 0.0);
    double c0 = f.c;
    for (auto& piece : merged) {
        piece.a = add(piece.a, shift);
        piece.b += c0;
    }
    return merged;
}

Polytope eps_subdiff_vrep(const CanonFunc& f, const Vec& x, double eps, double tol) {
    const std::size_t n = f.n;
    double fx = eval(f, x);
    if (fx == kInf) throw InfiniteValueError("eps_subdiff_vrep: f(x) infinite");

    bool quad_active = false;
    if (f.has_quad)
        for (std::size_t i = 0; i < n && !quad_active; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (std::abs(f.Q(i, j)) > 1e-14) { quad_active = true; break; }
    if (quad_active)
        throw NotRepresentableError("eps_subdiff_vrep: polyhedral kinds only");

    Vec shift = f.has_quad ? f.q : Vec(n, 0.0);  // affine content
    for (const auto& d : f.doms)
        if (!is_interior(d, x, tol))
            throw UnboundedSetError("eps_subdiff_vrep: unbounded at boundary point");

    MaxAffineData merged = merge_polys(f.polys, n);
    double mval = -kInf;
    for (const auto& piece : merged) mval = std::max(mval, dot(piece.a, x) + piece.b);

    const std::size_t k = merged.size();
    const std::size_t nd = f.doms.size();

    // Lifted polytope over (lambda, w_1..w_nd, s_1..s_nd); each vertex maps
    // to a generator through y = A'lambda + shift + sum w_l.
    const std::size_t dim_l = k + nd * n + nd;
    Mat A(0, dim_l);
    Vec b;
    Mat Aeq(0, dim_l);
    Vec beq;
    for (std::size_t i = 0; i < k; ++i) {
        Vec row(dim_l, 0.0);
        row[i] = -1.0;
        A.append_row(row);
        b.push_back(0.0);
    }
    {
        Vec row(dim_l, 0.0);
        for (std::size_t i = 0; i < k; ++i) row[i] = 1.0;
        Aeq.append_row(row);
        beq.push_back(1.0);
    }
    {
        // Budget row: sum lambda_i gap_i + sum s_l <= eps.
        Vec row(dim_l, 0.0);
        for (std::size_t i = 0; i < k; ++i)
            row[i] = mval - dot(merged[i].a, x) - merged[i].b;
        for (std::size_t l = 0; l < nd; ++l) row[k + nd * n + l] = 1.0;
        A.append_row(row);
        b.push_back(eps);
    }
    for (std::size_t l = 0; l < nd; ++l) {
        Vec srow(dim_l, 0.0);
        srow[k + nd * n + l] = -1.0;
        A.append_row(srow);
        b.push_back(0.0);
        for (const Vec& v : f.doms[l].vertices()) {
            Vec row(dim_l, 0.0);
            Vec dvx = sub(v, x);
            for (std::size_t i = 0; i < n; ++i) row[k + l * n + i] = dvx[i];
            row[k + nd * n + l] = -1.0;
            A.append_row(row);
            b.push_back(0.0);
        }
    }
    Polytope lifted = Polytope::from_hrep(A, b, Aeq, beq).converted(tol);
    if (lifted.is_empty()) return Polytope::empty_set(n);
    std::vector<Vec> pts;
    for (const Vec& z : lifted.vertices()) {
        Vec y = shift;
        for (std::size_t i = 0; i < k; ++i) axpy(y, z[i], merged[i].a);
        for (std::size_t l = 0; l < nd; ++l)
            for (std::size_t i = 0; i < n; ++i) y[i] += z[k + l * n + i];
        pts.push_back(y);
    }
    return Polytope::from_vrep(pts, tol).converted(tol);
}

Polytope eps_subdiff_vrep(const ConvexFunc& f, const Vec& x, double eps, double tol) {
    return eps_subdiff_vrep(canonicalize(f), x, eps, tol);
}

std::optional<Vec> grad(const ConvexFunc& f, const Vec& x, double act_tol) {
    switch (f.kind()) {
        case ConvexFunc::Kind::Quadratic:
            return add(matvec(f.Q(), x), f.q());
        case ConvexFunc::Kind::MaxAffine: {
            double m = eval(f, x);
            std::optional<Vec> g;
            for (const auto& piece : f.pieces()) {
                if (dot(piece.a, x) + piece.b >= m - act_tol * (1.0 + std::abs(m))) {
                    if (!g) g = piece.a;
                    else {
                        for (std::size_t i = 0; i < x.size(); ++i)
                            if (std::abs((*g)[i] - piece.a[i]) > act_tol) return std::nullopt;
                    }
                }
            }
            return g;
        }
        case ConvexFunc::Kind::IndicatorPoly: {
            if (!contains(f.domain_poly(), x)) throw InfiniteValueError("grad: x outside domain");
            if (is_interior(f.domain_poly(), x)) return Vec(x.size(), 0.0);
            return std::nullopt;
        }
        case ConvexFunc::Kind::Sum: {
            Vec g(x.size(), 0.0);
            for (const auto& t : f.terms()) {
                auto gt = grad(t, x, act_tol);
                if (!gt) return std::nullopt;
                axpy(g, 1.0, *gt);
            }
            return g;
        }
    }
    return std::nullopt;
}

bool regular_subdiff_contains(const ConvexFunc& f, const Vec& x, const Vec& y, double tol) {
    return in_eps_subdiff(f, x, y, 0.0, tol);
}

std::vector<GeneratorSet> subdiff_generators(const CanonFunc& f, const Vec& x, double tol) {
    std::vector<GeneratorSet> out;
    if (eval(f, x) == kInf) throw InfiniteValueError("subdiff_generators: f(x) infinite");
    if (f.has_quad) {
        GeneratorSet g;
        g.points.push_back(add(matvec(f.Q, x), f.q));
        out.push_back(g);
    }
    for (const auto& p : f.polys) {
        double m = -kInf;
        for (const auto& piece : p) m = std::max(m, dot(piece.a, x) + piece.b);
        GeneratorSet g;
        for (const auto& piece : p)
            if (dot(piece.a, x) + piece.b >= m - 1e-9 * (1.0 + std::abs(m)))
                g.points.push_back(piece.a);
        out.push_back(g);
    }
    for (const auto& d : f.doms) {
        GeneratorSet g;
        g.points.push_back(Vec(f.n, 0.0));
        const HRep& h = d.hrep();
        for (std::size_t i = 0; i < h.A.rows(); ++i) {
            Vec a = h.A.row(i);
            if (std::abs(dot(a, x) - h.b[i]) <= tol * 100 * std::max(1.0, norm2(a)))
                g.rays.push_back(a);
        }
        for (std::size_t i = 0; i < h.Aeq.rows(); ++i) {
            Vec a = h.Aeq.row(i);
            g.rays.push_back(a);
            g.rays.push_back(scale(a, -1.0));
        }
        out.push_back(g);
    }
    if (out.empty()) {
        GeneratorSet g;
        g.points.push_back(Vec(f.n, 0.0));
        out.push_back(g);
    }
    return out;
}

MembershipResult subdiff_sum_membership(const Vec& xstar, const std::vector<SubdiffTerm>& terms,
                                        const std::vector<NormalTerm>& normals, double budget,
                                        double tol) {
    const std::size_t n = xstar.size();
    // Variable layout, per subdiff term i:
    //   v_i (n) when the term has a quadratic part (element Q v_i, budget
    //   1/2 v'Qv), lambda_{ik} per max-affine factor (budget sum lambda gap),
    //   w_{il} (n) + s_{il} per indicator factor (budget s).
    // Per normal term l: w_l (n) + s_l.
    struct Layout {
        std::size_t v = SIZE_MAX;
        std::vector<std::size_t> lam;
        std::vector<std::size_t> w, s;
        Vec fixed;
    };
    std::vector<Layout> lay(terms.size());
    std::size_t nv = 0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const CanonFunc& g = terms[i].g;
        if (eval(g, terms[i].x) == kInf)
            throw InfiniteValueError("subdiff_sum_membership: term infinite at its point");
        lay[i].fixed = Vec(n, 0.0);
        if (g.has_quad) {
            lay[i].fixed = add(matvec(g.Q, terms[i].x), g.q);
            bool nonzero = false;
            for (std::size_t a = 0; a < n && !nonzero; ++a)
                for (std::size_t b2 = 0; b2 < n; ++b2)
                    if (std::abs(g.Q(a, b2)) > 1e-14) { nonzero = true; break; }
            if (nonzero) { lay[i].v = nv; nv += n; }
        }
        for (const auto& p : g.polys) {
            lay[i].lam.push_back(nv);
            nv += p.size();
        }
        for (std::size_t l = 0; l < g.doms.size(); ++l) {
            lay[i].w.push_back(nv);
            nv += n;
            lay[i].s.push_back(nv);
            nv += 1;
        }
    }
    std::vector<std::size_t> nw(normals.size()), ns(normals.size());
    for (std::size_t l = 0; l < normals.size(); ++l) {
        nw[l] = nv;
        nv += n;
        ns[l] = nv;
        nv += 1;
    }

    QpProblem qp(nv);
    Mat H(nv, nv);
    Vec lin(nv, 0.0);

    for (std::size_t i = 0; i < terms.size(); ++i) {
        const CanonFunc& g = terms[i].g;
        const Vec& xi = terms[i].x;
        if (lay[i].v != SIZE_MAX)
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b2 = 0; b2 < n; ++b2) H(lay[i].v + a, lay[i].v + b2) = g.Q(a, b2);
        for (std::size_t k = 0; k < g.polys.size(); ++k) {
            const auto& p = g.polys[k];
            double m = -kInf;
            for (const auto& piece : p) m = std::max(m, dot(piece.a, xi) + piece.b);
            for (std::size_t t = 0; t < p.size(); ++t)
                lin[lay[i].lam[k] + t] += std::max(m - dot(p[t].a, xi) - p[t].b, 0.0);
            Vec eq(nv, 0.0);
            for (std::size_t t = 0; t < p.size(); ++t) eq[lay[i].lam[k] + t] = 1.0;
            qp.add_eq(eq, 1.0);
            for (std::size_t t = 0; t < p.size(); ++t) {
                Vec row(nv, 0.0);
                row[lay[i].lam[k] + t] = -1.0;
                qp.add_le(row, 0.0);
            }
        }
        for (std::size_t l = 0; l < g.doms.size(); ++l) {
            const Polytope& P = g.doms[l];
            if (!contains(P, xi, tol * 100))
                throw InfiniteValueError("subdiff_sum_membership: point outside domain");
            lin[lay[i].s[l]] += 1.0;
            Vec row0(nv, 0.0);
            row0[lay[i].s[l]] = -1.0;
            qp.add_le(row0, 0.0);
            for (const Vec& vtx : P.vertices()) {
                Vec row(nv, 0.0);
                Vec dv = sub(vtx, xi);
                for (std::size_t a = 0; a < n; ++a) row[lay[i].w[l] + a] = dv[a];
                row[lay[i].s[l]] = -1.0;
                qp.add_le(row, 0.0);
            }
        }
    }
    for (std::size_t l = 0; l < normals.size(); ++l) {
        const Polytope& P = normals[l].P;
        if (!contains(P, normals[l].x, tol * 100))
            throw InfiniteValueError("subdiff_sum_membership: normal-term point outside set");
        lin[ns[l]] += 1.0;
        Vec row0(nv, 0.0);
        row0[ns[l]] = -1.0;
        qp.add_le(row0, 0.0);
        for (const Vec& vtx : P.vertices()) {
            Vec row(nv, 0.0);
            Vec dv = sub(vtx, normals[l].x);
            for (std::size_t a = 0; a < n; ++a) row[nw[l] + a] = dv[a];
            row[ns[l]] = -1.0;
            qp.add_le(row, 0.0);
        }
    }

    // Matching equality: the summed elements equal xstar.
    for (std::size_t a = 0; a < n; ++a) {
        Vec row(nv, 0.0);
        double rhs = xstar[a];
        for (std::size_t i = 0; i < terms.size(); ++i) {
            const CanonFunc& g = terms[i].g;
            rhs -= lay[i].fixed[a];
            if (lay[i].v != SIZE_MAX)
                for (std::size_t b2 = 0; b2 < n; ++b2) row[lay[i].v + b2] += g.Q(a, b2);
            for (std::size_t k = 0; k < g.polys.size(); ++k)
                for (std::size_t t = 0; t < g.polys[k].size(); ++t)
                    row[lay[i].lam[k] + t] += g.polys[k][t].a[a];
            for (std::size_t l = 0; l < g.doms.size(); ++l) row[lay[i].w[l] + a] += 1.0;
        }
        for (std::size_t l = 0; l < normals.size(); ++l) row[nw[l] + a] += 1.0;
        qp.add_eq(row, rhs);
    }

    qp.set_quadratic(H);
    qp.set_linear(lin);
    QpResult r = qp.minimize();
    MembershipResult out;
    if (r.status == QpStatus::Infeasible) {
        out.decided = true;
        out.member = false;
        out.min_budget = kInf;
        return out;
    }
    if (r.status != QpStatus::Optimal) return out;  // undecided
    out.decided = true;
    out.min_budget = std::max(r.value, 0.0);
    out.member = out.min_budget <= budget + tol;
    // Per-term budgets from the solution, for witness reporting.
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const CanonFunc& g = terms[i].g;
        double bi = 0.0;
        if (lay[i].v != SIZE_MAX) {
            Vec v(r.x.begin() + lay[i].v, r.x.begin() + lay[i].v + n);
            bi += 0.5 * dot(v, matvec(g.Q, v));
        }
        for (std::size_t k = 0; k < g.polys.size(); ++k)
            for (std::size_t t = 0; t < g.polys[k].size(); ++t)
                bi += r.x[lay[i].lam[k] + t] * lin[lay[i].lam[k] + t];
        for (std::size_t l = 0; l < g.doms.size(); ++l) bi += r.x[lay[i].s[l]];
        out.term_budgets.push_back(std::max(bi, 0.0));
    }
    for (std::size_t l = 0; l < normals.size(); ++l)
        out.term_budgets.push_back(std::max(r.x[ns[l]], 0.0));
    return out;
}

double dc_eval(const DCPair& f, const Vec& x, double tol) {
    double u = eval(f.u, x, tol);
    if (u == kInf) return kInf;
    double h = eval(f.h, x, tol);
    return u - h;
}

bool dcpair_domain_ok(const DCPair& f, double tol) {
    CanonFunc cu = canonicalize(f.u), ch = canonicalize(f.h);
    if (ch.doms.empty()) return true;
    if (cu.doms.empty()) return false;  // dom u = R^n cannot fit inside a strict dom h
    Polytope du = cu.doms[0];
    for (std::size_t i = 1; i < cu.doms.size(); ++i) {
        const HRep& h = cu.doms[i].hrep();
        du = with_rows(du, h.A, h.b, h.Aeq, h.beq);
    }
    du = du.converted();
    if (du.is_empty()) return true;
    for (const Vec& v : du.vertices())
        for (const auto& dh : ch.doms)
            if (!contains(dh, v, tol * 100)) return false;
    return true;
}

}  // namespace dccert
