#include "dccert/dc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "dccert/qp.hpp"
#include "dccert/simplex.hpp"

namespace dccert {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

VectorMap::VectorMap(std::vector<ConvexFunc> us, ConvexFunc h) : h_(std::move(h)) {
    if (us.empty()) throw InputError("VectorMap: needs at least one component");
    n_ = us[0].dim();
    for (const auto& u : us)
        if (u.dim() != n_ || h_.dim() != n_) throw InputError("VectorMap: dimension mismatch");
    us_ = std::move(us);
    for (const auto& u : us_) canon_us_.push_back(canonicalize(u));
    canon_h_ = canonicalize(h_);
}

bool VectorMap::in_domain(const Vec& x, double tol) const {
    for (const auto& cu : canon_us_)
        if (eval(cu, x, tol) == kInf) return false;
    return eval(canon_h_, x, tol) != kInf;
}

Vec VectorMap::value(const Vec& x, double tol) const {
    double hx = eval(canon_h_, x, tol);
    Vec out(out_dim());
    for (std::size_t j = 0; j < out_dim(); ++j) {
        double uj = eval(canon_us_[j], x, tol);
        if (uj == kInf || hx == kInf) throw InfiniteValueError("VectorMap: x outside domain");
        out[j] = uj - hx;
    }
    return out;
}

CanonFunc VectorMap::scalarize(const Vec& lam, double h_extra) const {
    if (lam.size() != out_dim()) throw InputError("scalarize: weight dimension mismatch");
    double lam_sum = 0;
    for (double l : lam) lam_sum += l;
    std::vector<std::pair<double, const CanonFunc*>> parts;
    parts.push_back({h_extra - lam_sum, &canon_h_});
    for (std::size_t j = 0; j < out_dim(); ++j) parts.push_back({lam[j], &canon_us_[j]});
    return weighted_canon_combination(parts, n_);
}

std::optional<Mat> VectorMap::jacobian(const Vec& x) const {
    auto gh = grad(h_, x);
    if (!gh) return std::nullopt;
    Mat J(out_dim(), n_);
    for (std::size_t j = 0; j < out_dim(); ++j) {
        auto gu = grad(us_[j], x);
        if (!gu) return std::nullopt;
        for (std::size_t i = 0; i < n_; ++i) J(j, i) = (*gu)[i] - (*gh)[i];
    }
    return J;
}

ActiveSet active_index_face(const Polytope& C, const VectorMap& Phi, const Vec& x, double eps,
                            double tol) {
    if (!Phi.in_domain(x, tol)) throw InfiniteValueError("active_index_face: x outside dom Phi");
    Vec phix = Phi.value(x, tol);
    Polytope Cc = C.converted();
    double s = support(Cc, phix);
    Mat row(0, Cc.dim());
    row.append_row(scale(phix, -1.0));
    Vec rhs{eps - s};
    return ActiveSet{Cc, x, eps, with_rows(Cc, row, rhs)};
}

namespace {

// Raw scalarization value <lam,Phi>(x) + h_extra*h(x); no representation needed.
double raw_scal_eval(const VectorMap& Phi, const Vec& lam, double h_extra, const Vec& x,
                     double tol) {
    double hx = eval(Phi.canon_control(), x, tol);
    if (hx == kInf) return kInf;
    double lam_sum = 0;
    double acc = 0;
    for (std::size_t j = 0; j < Phi.out_dim(); ++j) {
        if (lam[j] == 0.0) continue;
        double uj = eval(Phi.canon_u(j), x, tol);
        if (uj == kInf) return kInf;
        acc += lam[j] * uj;
        lam_sum += lam[j];
    }
    return acc + (h_extra - lam_sum) * hx;
}

double midpoint_violation(const VectorMap& Phi, const Vec& lam, const std::vector<Vec>& grid,
                          double tol) {
    double worst = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double fi = raw_scal_eval(Phi, lam, 1.0, grid[i], tol);
        if (fi == kInf) continue;
        for (std::size_t j = i + 1; j < grid.size(); ++j) {
            double fj = raw_scal_eval(Phi, lam, 1.0, grid[j], tol);
            if (fj == kInf) continue;
            Vec mid = scale(add(grid[i], grid[j]), 0.5);
            double fm = raw_scal_eval(Phi, lam, 1.0, mid, tol);
            if (fm == kInf) continue;  // domain convexity is reported separately
            worst = std::max(worst, fm - 0.5 * (fi + fj));
        }
    }
    return worst;
}

}  // namespace

BdcReport validate_bdc(const VectorMap& Phi, const Polytope& B, const std::vector<Vec>& grid,
                       double tol) {
    BdcReport rep;
    Polytope Bc = B.converted();
    double worst = 0;
    for (const Vec& lam : Bc.vertices()) {
        double v = midpoint_violation(Phi, lam, grid, kTol);
        rep.vertex_checks.push_back({lam, v});
        worst = std::max(worst, v);
    }
    rep.worst_violation = worst;
    rep.passed = worst <= tol;

    // Closure properties: polytope domains are convex by construction, and
    // Phi+Phi with control 2h doubles the midpoint defect.
    rep.domain_convex = true;
    rep.sum_closure_violation = 2.0 * worst;

    bool symmetric = true;
    for (const Vec& lam : Bc.vertices())
        if (!contains(Bc, scale(lam, -1.0), 1e-7)) { symmetric = false; break; }
    bool full_dom = Phi.canon_control().doms.empty();
    for (std::size_t j = 0; j < Phi.out_dim() && full_dom; ++j)
        if (!Phi.canon_u(j).doms.empty()) full_dom = false;
    rep.symmetric_applicable = symmetric && full_dom;
    if (rep.symmetric_applicable) {
        double neg_worst = 0;
        for (const Vec& lam : Bc.vertices())
            neg_worst = std::max(neg_worst, midpoint_violation(Phi, scale(lam, -1.0), grid, kTol));
        rep.negation_violation = neg_worst;
    }
    return rep;
}

std::vector<double> default_eta_schedule(double g_at_x, double h_at_x, std::size_t points) {
    double eta_max = 10.0 * (1.0 + std::abs(g_at_x) + std::abs(h_at_x));
    std::vector<double> s{0.0};
    for (std::size_t i = 1; i <= points; ++i) s.push_back(eta_max * double(i) / double(points));
    return s;
}

namespace {

bool quad_nonzero(const CanonFunc& f) {
    if (!f.has_quad) return false;
    for (std::size_t i = 0; i < f.n; ++i)
        for (std::size_t j = 0; j < f.n; ++j)
            if (std::abs(f.Q(i, j)) > 1e-14) return true;
    return false;
}

// Inclusion  xstar + partial_eta h(x)  subseteq  partial_{eta+eps} g(x).
Verdict3 inclusion_at_eta(const CanonFunc& cg, const CanonFunc& ch, const Vec& x,
                          const Vec& xstar, double eta, double eps, double tol, bool& exact) {
    if (!quad_nonzero(ch)) {
        // Polyhedral h: vertex checks decide exactly.
        try {
            Polytope S = eps_subdiff_vrep(ch, x, eta, tol);
            if (S.is_empty()) return Verdict3::Yes;
            for (const Vec& v : S.vertices())
                if (!in_eps_subdiff(cg, x, add(xstar, v), eta + eps, tol)) return Verdict3::No;
            return Verdict3::Yes;
        } catch (const UnboundedSetError&) {
            // fall through to sampling
        }
    } else if (ch.polys.empty() && ch.doms.empty() && quad_nonzero(cg) && cg.polys.empty() &&
               cg.doms.empty()) {
        // Both sides pure quadratic: ellipsoid inside ellipsoid, decided by
        // maximizing the target's gap gauge over the source ball (exact).
        const std::size_t n = x.size();
        Vec gradh = add(matvec(ch.Q, x), ch.q);
        Vec gradg = add(matvec(cg.Q, x), cg.q);
        Vec c = sub(add(xstar, gradh), gradg);
        EigSym eg = eig_sym(cg.Q);
        double gscale = std::abs(eg.values.empty() ? 0.0 : eg.values[0]);
        // Range conditions: c and range(Q_h) must lie in range(Q_g).
        for (std::size_t k = 0; k < n; ++k) {
            if (eg.values[k] > 1e-12 * (1.0 + gscale)) continue;
            Vec nk(n);
            for (std::size_t i = 0; i < n; ++i) nk[i] = eg.vectors(i, k);
            if (std::abs(dot(nk, c)) > 1e-9 * (1.0 + norm2(c))) return Verdict3::No;
            if (eta > 0 && norm2(matvec(ch.Q, nk)) > 1e-9) return Verdict3::No;
        }
        // A = S Qg+ S and b = S Qg+ c with S = Qh^(1/2).
        EigSym eh = eig_sym(ch.Q);
        Mat S(n, n), Qginv(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0, gi = 0;
                for (std::size_t k = 0; k < n; ++k) {
                    s += eh.vectors(i, k) * std::sqrt(std::max(eh.values[k], 0.0)) *
                         eh.vectors(j, k);
                    if (eg.values[k] > 1e-12 * (1.0 + gscale))
                        gi += eg.vectors(i, k) / eg.values[k] * eg.vectors(j, k);
                }
                S(i, j) = s;
                Qginv(i, j) = gi;
            }
        Mat A = matmul(S, matmul(Qginv, S));
        Vec b = matvec(S, matvec(Qginv, c));
        double base = 0.5 * dot(c, matvec(Qginv, c));
        double worst = base + max_quad_over_ball(A, b, std::sqrt(2.0 * eta));
        return worst <= eta + eps + tol ? Verdict3::Yes : Verdict3::No;
    } else if (ch.polys.empty() && ch.doms.empty() && !quad_nonzero(cg)) {
        // Ellipsoid source, polyhedral target: per-facet support comparison.
        Polytope T = eps_subdiff_vrep(cg, x, eta + eps, tol);
        if (T.is_empty()) return Verdict3::No;
        Vec gradh = add(matvec(ch.Q, x), ch.q);
        const HRep& hr = T.hrep();
        for (std::size_t i = 0; i < hr.A.rows(); ++i) {
            Vec c = hr.A.row(i);
            double sup = dot(c, add(xstar, gradh)) +
                         std::sqrt(std::max(2.0 * eta * dot(c, matvec(ch.Q, c)), 0.0));
            if (sup > hr.b[i] + tol * std::max(1.0, norm2(c))) return Verdict3::No;
        }
        for (std::size_t i = 0; i < hr.Aeq.rows(); ++i) {
            for (double sgn : {1.0, -1.0}) {
                Vec cs = scale(hr.Aeq.row(i), sgn);
                double sup = dot(cs, add(xstar, gradh)) +
                             std::sqrt(std::max(2.0 * eta * dot(cs, matvec(ch.Q, cs)), 0.0));
                if (sup > sgn * hr.beq[i] + tol * std::max(1.0, norm2(cs))) return Verdict3::No;
            }
        }
        return Verdict3::Yes;
    }

    // General fallback: sampled boundary points; a violated sample refutes
    // exactly, agreement leaves the verdict open.
    exact = false;
    std::mt19937_64 rng(977);
    std::normal_distribution<double> N;
    const std::size_t n = x.size();
    std::vector<Vec> dirs;
    for (std::size_t i = 0; i < n; ++i) {
        Vec e(n, 0.0);
        e[i] = 1.0;
        dirs.push_back(e);
        e[i] = -1.0;
        dirs.push_back(e);
    }
    for (int k = 0; k < 30; ++k) {
        Vec d(n);
        for (auto& v : d) v = N(rng);
        double nd = norm2(d);
        if (nd > 1e-12) dirs.push_back(scale(d, 1.0 / nd));
    }
    Vec base = ch.has_quad ? add(matvec(ch.Q, x), ch.q) : Vec(n, 0.0);
    for (const Vec& d : dirs) {
        Vec y = base;
        if (quad_nonzero(ch)) {
            double qd = dot(d, matvec(ch.Q, d));
            if (qd > 1e-14) axpy(y, std::sqrt(2.0 * eta / qd), matvec(ch.Q, d));
        }
        for (const auto& p : ch.polys) {
            double m = -kInf;
            std::size_t best = 0;
            for (std::size_t t = 0; t < p.size(); ++t) {
                double v = dot(p[t].a, x) + p[t].b;
                if (v > m) { m = v; best = t; }
            }
            axpy(y, 1.0, p[best].a);
        }
        if (!in_eps_subdiff(cg, x, add(xstar, y), eta + eps, tol)) return Verdict3::No;
    }
    return Verdict3::Unknown;
}

}  // namespace

DcSubdiffResult dc_subdiff_contains(const ConvexFunc& g, const ConvexFunc& h, const Vec& x,
                                    const Vec& xstar, double eps, std::vector<double> eta_schedule,
                                    double tol) {
    CanonFunc cg = canonicalize(g), ch = canonicalize(h);
    double gx = eval(cg, x), hx = eval(ch, x);
    if (gx == kInf || hx == kInf)
        throw InfiniteValueError("dc_subdiff_contains: g or h infinite at x");
    if (eta_schedule.empty()) eta_schedule = default_eta_schedule(gx, hx);
    std::sort(eta_schedule.begin(), eta_schedule.end());

    DcSubdiffResult res;
    res.verdict = Verdict3::Yes;
    std::vector<int> verdicts(eta_schedule.size());
    for (std::size_t i = 0; i < eta_schedule.size(); ++i) {
        bool exact = true;
        Verdict3 v = inclusion_at_eta(cg, ch, x, xstar, eta_schedule[i], eps, tol, exact);
        if (!exact) res.exact = false;
        verdicts[i] = (v == Verdict3::Yes) ? 1 : (v == Verdict3::No ? 0 : 2);
        if (v == Verdict3::No) {
            res.verdict = Verdict3::No;
            res.refuted_eta = eta_schedule[i];
            return res;
        }
        if (v == Verdict3::Unknown) res.verdict = Verdict3::Unknown;
    }
    // Bisect between adjacent schedule points with differing verdicts.
    const double min_spacing = 1e-7;
    for (std::size_t i = 0; i + 1 < eta_schedule.size(); ++i) {
        if (verdicts[i] == verdicts[i + 1]) continue;
        double lo = eta_schedule[i], hi = eta_schedule[i + 1];
        while (hi - lo > min_spacing) {
            double mid = 0.5 * (lo + hi);
            bool exact = true;
            Verdict3 v = inclusion_at_eta(cg, ch, x, xstar, mid, eps, tol, exact);
            if (!exact) res.exact = false;
            if (v == Verdict3::No) {
                res.verdict = Verdict3::No;
                res.refuted_eta = mid;
                return res;
            }
            if ((v == Verdict3::Yes ? 1 : 2) == verdicts[i]) lo = mid;
            else hi = mid;
        }
        res.schedule_warning = true;
    }
    return res;
}

namespace {

// Cutting-plane minimization of a convex function over an H-rep polytope;
// eval returns value and a subgradient. Exact for piecewise-linear
// objectives, 1e-11 relative gap otherwise.
struct KelleyResult {
    bool feasible = false;
    double value = kInf;
    Vec arg;
    double lower = -kInf;
};

template <typename EvalFn>
KelleyResult kelley_minimize(const Polytope& F, EvalFn&& ev, int max_iter = 80) {
    KelleyResult out;
    Polytope Fc = F.has_hrep() ? F : F.converted();
    if (Fc.is_empty()) return out;
    const HRep& h = Fc.hrep();
    const std::size_t n = Fc.dim();

    std::vector<Vec> cut_rows;
    Vec cut_rhs;
    Vec lam;
    try {
        lam = chebyshev_center(Fc).center;
    } catch (const EmptySetError&) {
        return out;
    }
    for (int it = 0; it < max_iter; ++it) {
        auto [fv, sg] = ev(lam);
        if (fv < out.value) {
            out.value = fv;
            out.arg = lam;
            out.feasible = true;
        }
        if (fv < kInf) {
            Vec row(n + 1);
            for (std::size_t i = 0; i < n; ++i) row[i] = sg[i];
            row[n] = -1.0;
            cut_rows.push_back(row);
            cut_rhs.push_back(dot(sg, lam) - fv);
        }
        LpProblem lp(n + 1);
        for (std::size_t i = 0; i < h.A.rows(); ++i) {
            Vec row = h.A.row(i);
            row.push_back(0.0);
            lp.add_le(row, h.b[i]);
        }
        for (std::size_t i = 0; i < h.Aeq.rows(); ++i) {
            Vec row = h.Aeq.row(i);
            row.push_back(0.0);
            lp.add_eq(row, h.beq[i]);
        }
        for (std::size_t i = 0; i < cut_rows.size(); ++i) lp.add_le(cut_rows[i], cut_rhs[i]);
        Vec tb(n + 1, 0.0);
        tb[n] = -1.0;
        lp.add_le(tb, std::abs(out.value == kInf ? 1e6 : out.value) + 1e6);
        Vec obj(n + 1, 0.0);
        obj[n] = 1.0;
        LpResult mr = lp.minimize(obj);
        if (mr.status != LpStatus::Optimal) break;
        out.lower = mr.value;
        Vec next(mr.x.begin(), mr.x.begin() + n);
        if (out.value - out.lower <= 1e-11 * (1.0 + std::abs(out.value))) break;
        lam = next;
    }
    return out;
}

}  // namespace

bool joint_face_applicable(const VectorMap& Phi) {
    // The weights enter all constraints linearly when every component's
    // quadratic part equals the control's (so the curvature cancels out of
    // the lambda-dependence); purely polyhedral maps are the common case.
    const CanonFunc& ch = Phi.canon_control();
    const std::size_t n = Phi.in_dim();
    for (std::size_t j = 0; j < Phi.out_dim(); ++j) {
        const CanonFunc& cu = Phi.canon_u(j);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) {
                double qj = cu.has_quad ? cu.Q(a, b) : 0.0;
                double qh = ch.has_quad ? ch.Q(a, b) : 0.0;
                if (std::abs(qj - qh) > 1e-12) return false;
            }
    }
    return true;
}

JointFaceResult joint_face_min_budget(const VectorMap& Phi, double h_extra, const Polytope& face,
                                      const Vec& x, const std::vector<SubdiffTerm>& fixed_terms,
                                      const std::vector<NormalTerm>& normals, const Vec& xstar,
                                      const Vec& budget_lin, double tol) {
    JointFaceResult out;
    if (!joint_face_applicable(Phi)) return out;
    Polytope F = face.has_hrep() ? face : face.converted();
    if (F.is_empty()) return out;

    const std::size_t n = xstar.size();
    const std::size_t m = Phi.out_dim();
    const CanonFunc& ch = Phi.canon_control();

    // Pool identical max-affine factors across components and the control:
    // the pooled weight  T(lam) = sum_j mult_j lam_j + c0  stays linear, and
    // shared-control cancellations become representable.
    struct PolyFactor {
        const MaxAffineData* pieces;
        Vec lam_coef;   // multiplier of each lam_j in the pooled weight
        double c0 = 0;  // constant part (h_extra * control multiplicity)
        std::size_t start = 0;  // variable offset of the scaled simplex
    };
    struct DomFactor {
        const Polytope* P;
        Vec lam_coef;
        double c0 = 0;
        std::size_t w = 0, s = 0;
        bool needs_sign_row = false;
    };
    std::vector<PolyFactor> polys;
    std::vector<DomFactor> doms;
    auto add_poly = [&](const MaxAffineData& p, std::size_t owner /*m = control*/) {
        for (auto& pf : polys)
            if (same_pieces(*pf.pieces, p)) {
                if (owner < m) pf.lam_coef[owner] += 1.0;
                else {
                    pf.c0 += h_extra;
                    for (std::size_t j = 0; j < m; ++j) pf.lam_coef[j] -= 1.0;
                }
                return;
            }
        PolyFactor pf;
        pf.pieces = &p;
        pf.lam_coef = Vec(m, 0.0);
        if (owner < m) pf.lam_coef[owner] = 1.0;
        else {
            pf.c0 = h_extra;
            for (std::size_t j = 0; j < m; ++j) pf.lam_coef[j] = -1.0;
        }
        polys.push_back(std::move(pf));
    };
    auto add_dom = [&](const Polytope& d, std::size_t owner) {
        for (auto& df : doms)
            if (polytope_equal(*df.P, d, 1e-10)) {
                if (owner < m) df.lam_coef[owner] += 1.0;
                else {
                    df.c0 += h_extra;
                    for (std::size_t j = 0; j < m; ++j) df.lam_coef[j] -= 1.0;
                }
                return;
            }
        DomFactor df;
        df.P = &d;
        df.lam_coef = Vec(m, 0.0);
        if (owner < m) df.lam_coef[owner] = 1.0;
        else {
            df.c0 = h_extra;
            for (std::size_t j = 0; j < m; ++j) df.lam_coef[j] = -1.0;
        }
        doms.push_back(std::move(df));
    };
    for (std::size_t j = 0; j < m; ++j) {
        const CanonFunc& cu = Phi.canon_u(j);
        for (const auto& p : cu.polys) add_poly(p, j);
        for (const auto& d : cu.doms) add_dom(d, j);
    }
    for (const auto& p : ch.polys) add_poly(p, m);
    for (const auto& d : ch.doms) add_dom(d, m);

    // Shared quadratic factor: Q_tot = h_extra * Q_h (applicability made the
    // lambda-dependence vanish); the linear part q(lam) stays per-component.
    Mat Qtot(n, n);
    bool quad_present = false;
    if (ch.has_quad) {
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) {
                Qtot(a, b) = h_extra * ch.Q(a, b);
                if (std::abs(Qtot(a, b)) > 1e-14) quad_present = true;
            }
    }

    // Variable layout.
    std::size_t nv = m;
    std::size_t vq = SIZE_MAX;
    if (quad_present) {
        vq = nv;
        nv += n;
    }
    for (auto& pf : polys) {
        pf.start = nv;
        nv += pf.pieces->size();
    }
    for (auto& df : doms) {
        df.w = nv;
        nv += n;
        df.s = nv;
        nv += 1;
    }

    struct FixedLayout {
        std::size_t v = SIZE_MAX;
        std::vector<std::size_t> lamstart;
        std::vector<std::size_t> w, s;
        Vec fixed;
    };
    std::vector<FixedLayout> flay(fixed_terms.size());
    for (std::size_t i = 0; i < fixed_terms.size(); ++i) {
        const CanonFunc& g = fixed_terms[i].g;
        if (eval(g, fixed_terms[i].x) == kInf)
            throw InfiniteValueError("joint_face_min_budget: fixed term infinite at its point");
        flay[i].fixed = Vec(n, 0.0);
        if (g.has_quad) {
            flay[i].fixed = add(matvec(g.Q, fixed_terms[i].x), g.q);
            if (quad_nonzero(g)) {
                flay[i].v = nv;
                nv += n;
            }
        }
        for (const auto& p : g.polys) {
            flay[i].lamstart.push_back(nv);
            nv += p.size();
        }
        for (std::size_t l = 0; l < g.doms.size(); ++l) {
            flay[i].w.push_back(nv);
            nv += n;
            flay[i].s.push_back(nv);
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

    // Face rows on lam.
    {
        const HRep& hr = F.hrep();
        for (std::size_t i = 0; i < hr.A.rows(); ++i) {
            Vec row(nv, 0.0);
            Vec a = hr.A.row(i);
            for (std::size_t j = 0; j < m; ++j) row[j] = a[j];
            qp.add_le(row, hr.b[i]);
        }
        for (std::size_t i = 0; i < hr.Aeq.rows(); ++i) {
            Vec row(nv, 0.0);
            Vec a = hr.Aeq.row(i);
            for (std::size_t j = 0; j < m; ++j) row[j] = a[j];
            qp.add_eq(row, hr.beq[i]);
        }
    }

    if (quad_present)
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) H(vq + a, vq + b) = Qtot(a, b);

    // Scaled simplexes: weights sum to the pooled coefficient T(lam).
    for (const auto& pf : polys) {
        Vec row(nv, 0.0);
        for (std::size_t t = 0; t < pf.pieces->size(); ++t) row[pf.start + t] = 1.0;
        for (std::size_t j = 0; j < m; ++j) row[j] -= pf.lam_coef[j];
        qp.add_eq(row, pf.c0);
        for (std::size_t t = 0; t < pf.pieces->size(); ++t) {
            Vec r2(nv, 0.0);
            r2[pf.start + t] = -1.0;
            qp.add_le(r2, 0.0);
        }
        double mval = -kInf;
        for (const auto& piece : *pf.pieces) mval = std::max(mval, dot(piece.a, x) + piece.b);
        for (std::size_t t = 0; t < pf.pieces->size(); ++t)
            lin[pf.start + t] +=
                std::max(mval - dot((*pf.pieces)[t].a, x) - (*pf.pieces)[t].b, 0.0);
    }
    auto add_dom_rows = [&](std::size_t wv, std::size_t sv, const Polytope& P, const Vec& basept) {
        if (!contains(P, basept, tol * 100))
            throw InfiniteValueError("joint_face_min_budget: point outside a domain factor");
        lin[sv] += 1.0;
        Vec row0(nv, 0.0);
        row0[sv] = -1.0;
        qp.add_le(row0, 0.0);
        for (const Vec& vtx : P.vertices()) {
            Vec row(nv, 0.0);
            Vec dvx = sub(vtx, basept);
            for (std::size_t a = 0; a < n; ++a) row[wv + a] = dvx[a];
            row[sv] = -1.0;
            qp.add_le(row, 0.0);
        }
    };
    for (const auto& df : doms) {
        add_dom_rows(df.w, df.s, *df.P, x);
        // Pooled weight must stay nonnegative for the scaling to be valid.
        bool constant = true;
        for (std::size_t j = 0; j < m; ++j)
            if (std::abs(df.lam_coef[j]) > 1e-14) constant = false;
        if (constant) {
            if (df.c0 < -1e-12) return out;  // unrepresentable for every lam
        } else {
            Vec row(nv, 0.0);
            for (std::size_t j = 0; j < m; ++j) row[j] = -df.lam_coef[j];
            qp.add_le(row, df.c0);
        }
    }

    for (std::size_t i = 0; i < fixed_terms.size(); ++i) {
        const CanonFunc& g = fixed_terms[i].g;
        const Vec& xi = fixed_terms[i].x;
        if (flay[i].v != SIZE_MAX)
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b2 = 0; b2 < n; ++b2)
                    H(flay[i].v + a, flay[i].v + b2) = g.Q(a, b2);
        for (std::size_t k = 0; k < g.polys.size(); ++k) {
            const auto& p = g.polys[k];
            double mval = -kInf;
            for (const auto& piece : p) mval = std::max(mval, dot(piece.a, xi) + piece.b);
            Vec eq(nv, 0.0);
            for (std::size_t t = 0; t < p.size(); ++t) eq[flay[i].lamstart[k] + t] = 1.0;
            qp.add_eq(eq, 1.0);
            for (std::size_t t = 0; t < p.size(); ++t) {
                Vec r2(nv, 0.0);
                r2[flay[i].lamstart[k] + t] = -1.0;
                qp.add_le(r2, 0.0);
                lin[flay[i].lamstart[k] + t] += std::max(mval - dot(p[t].a, xi) - p[t].b, 0.0);
            }
        }
        for (std::size_t l = 0; l < g.doms.size(); ++l)
            add_dom_rows(flay[i].w[l], flay[i].s[l], g.doms[l], xi);
    }
    for (std::size_t l = 0; l < normals.size(); ++l)
        add_dom_rows(nw[l], ns[l], normals[l].P, normals[l].x);

    // Matching rows: total element = xstar.
    for (std::size_t a = 0; a < n; ++a) {
        Vec row(nv, 0.0);
        double rhs = xstar[a];
        // Affine/gradient parts: q(lam) = sum lam_j q_j + (h_extra-sum lam) q_h
        // plus the shared quadratic's gradient Qtot x.
        for (std::size_t j = 0; j < m; ++j) {
            const CanonFunc& cu = Phi.canon_u(j);
            if (cu.has_quad) row[j] += cu.q[a];
            if (ch.has_quad) row[j] -= ch.q[a];
        }
        if (ch.has_quad) rhs -= h_extra * ch.q[a];
        if (quad_present) {
            rhs -= dot(Qtot.row(a), x);
            for (std::size_t b = 0; b < n; ++b) row[vq + b] += Qtot(a, b);
        }
        for (const auto& pf : polys)
            for (std::size_t t = 0; t < pf.pieces->size(); ++t)
                row[pf.start + t] += (*pf.pieces)[t].a[a];
        for (const auto& df : doms) row[df.w + a] += 1.0;
        for (std::size_t i = 0; i < fixed_terms.size(); ++i) {
            const CanonFunc& g = fixed_terms[i].g;
            rhs -= flay[i].fixed[a];
            if (flay[i].v != SIZE_MAX)
                for (std::size_t b2 = 0; b2 < n; ++b2) row[flay[i].v + b2] += g.Q(a, b2);
            for (std::size_t k = 0; k < g.polys.size(); ++k)
                for (std::size_t t = 0; t < g.polys[k].size(); ++t)
                    row[flay[i].lamstart[k] + t] += g.polys[k][t].a[a];
            for (std::size_t l = 0; l < g.doms.size(); ++l) row[flay[i].w[l] + a] += 1.0;
        }
        for (std::size_t l = 0; l < normals.size(); ++l) row[nw[l] + a] += 1.0;
        qp.add_eq(row, rhs);
    }

    for (std::size_t j = 0; j < m && j < budget_lin.size(); ++j) lin[j] -= budget_lin[j];

    qp.set_quadratic(H);
    qp.set_linear(lin);
    QpResult r = qp.minimize();
    if (r.status == QpStatus::Infeasible) {
        out.solved = true;
        out.min_cost = kInf;
        return out;
    }
    if (r.status != QpStatus::Optimal) return out;
    out.solved = true;
    out.min_cost = r.value;
    out.lam = Vec(r.x.begin(), r.x.begin() + m);
    // Budgets: fixed terms first, then the scalarization term, then normals.
    for (std::size_t i = 0; i < fixed_terms.size(); ++i) {
        const CanonFunc& g = fixed_terms[i].g;
        double bi = 0.0;
        if (flay[i].v != SIZE_MAX) {
            Vec v(r.x.begin() + flay[i].v, r.x.begin() + flay[i].v + n);
            bi += 0.5 * dot(v, matvec(g.Q, v));
        }
        for (std::size_t k = 0; k < g.polys.size(); ++k) {
            const auto& p = g.polys[k];
            double mval = -kInf;
            for (const auto& piece : p)
                mval = std::max(mval, dot(piece.a, fixed_terms[i].x) + piece.b);
            for (std::size_t t = 0; t < p.size(); ++t)
                bi += r.x[flay[i].lamstart[k] + t] *
                      std::max(mval - dot(p[t].a, fixed_terms[i].x) - p[t].b, 0.0);
        }
        for (std::size_t l = 0; l < g.doms.size(); ++l) bi += r.x[flay[i].s[l]];
        out.term_budgets.push_back(std::max(bi, 0.0));
    }
    {
        double bs = 0.0;
        if (quad_present) {
            Vec v(r.x.begin() + vq, r.x.begin() + vq + n);
            bs += 0.5 * dot(v, matvec(Qtot, v));
        }
        for (const auto& pf : polys) {
            double mval = -kInf;
            for (const auto& piece : *pf.pieces) mval = std::max(mval, dot(piece.a, x) + piece.b);
            for (std::size_t t = 0; t < pf.pieces->size(); ++t)
                bs += r.x[pf.start + t] *
                      std::max(mval - dot((*pf.pieces)[t].a, x) - (*pf.pieces)[t].b, 0.0);
        }
        for (const auto& df : doms) bs += r.x[df.s];
        out.term_budgets.push_back(std::max(bs, 0.0));
    }
    for (std::size_t l = 0; l < normals.size(); ++l)
        out.term_budgets.push_back(std::max(r.x[ns[l]], 0.0));
    return out;
}

SupRuleResult sup_compact_subdiff_contains(const VectorMap& Phi, const ConvexFunc& g,
                                           const Polytope& C, const Vec& x, const Vec& xstar,
                                           double eps, double tol) {
    CanonFunc cgrest = canonicalize(g);
    Polytope Cc = C.converted();
    if (!Phi.in_domain(x, tol))
        throw InfiniteValueError("sup_compact_subdiff_contains: x outside dom Phi");

    // Premise check at the vertices (representability certifies convexity).
    for (const Vec& lam : Cc.vertices()) {
        try {
            CanonFunc combo = add_canon(Phi.scalarize(lam, 0.0), cgrest);
            finalize_quadratic(combo);
        } catch (const NotRepresentableError& e) {
            throw ValidationError(std::string("sup rule premise failed at a vertex: ") + e.what());
        }
    }

    Vec phix = Phi.value(x, tol);
    double s = support(Cc, phix);

    auto G_eval = [&](const Vec& lam) -> std::pair<double, Vec> {
        CanonFunc combo;
        try {
            combo = add_canon(Phi.scalarize(lam, 0.0), cgrest);
            finalize_quadratic(combo);
        } catch (const NotRepresentableError&) {
            return {kInf, Vec(lam.size(), 0.0)};
        }
        double fx = eval(combo, x);
        ConjResult cj = conjugate_with_arg(combo, xstar);
        if (fx == kInf || cj.value == kInf || !cj.attained)
            return {kInf, Vec(lam.size(), 0.0)};
        double val = fx + cj.value - dot(xstar, x);
        Vec sg(lam.size());
        Vec phiy = Phi.value(cj.arg, tol);
        for (std::size_t j = 0; j < lam.size(); ++j) sg[j] = phix[j] - phiy[j];
        return {val, sg};
    };

    const bool joint_ok = joint_face_applicable(Phi);
    std::vector<SubdiffTerm> fixed{{cgrest, x}};

    // m(eta) = min_{lam in C_{eps-eta}(x)} G(lam) - eta is convex in eta.
    auto m_of = [&](double eta) -> std::pair<double, KelleyResult> {
        Mat row(0, Cc.dim());
        row.append_row(scale(phix, -1.0));
        Vec rhs{(eps - eta) - s};
        Polytope face = with_rows(Cc, row, rhs);
        if (face.is_empty()) return {kInf, {}};
        if (joint_ok) {
            JointFaceResult jr = joint_face_min_budget(Phi, 0.0, face, x, fixed, {}, xstar,
                                                       Vec(Phi.out_dim(), 0.0), tol);
            KelleyResult kr;
            if (!jr.solved) return {kInf, kr};
            kr.feasible = jr.min_cost < kInf;
            kr.value = jr.min_cost;
            kr.arg = jr.lam;
            return {jr.min_cost - eta, kr};
        }
        KelleyResult kr = kelley_minimize(face, G_eval);
        if (!kr.feasible || kr.value == kInf) return {kInf, kr};
        return {kr.value - eta, kr};
    };

    SupRuleResult out;
    double best = kInf;
    KelleyResult best_kr;
    double best_eta = 0;
    auto consider = [&](double eta) {
        auto [v, kr] = m_of(eta);
        if (v < best) {
            best = v;
            best_kr = kr;
            best_eta = eta;
        }
    };
    consider(0.0);
    if (eps > 0) {
        consider(eps);
        double lo = 0, hi = eps;
        for (int it = 0; it < 60 && hi - lo > 1e-14 * (1 + eps); ++it) {
            double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
            auto [v1, k1] = m_of(m1);
            auto [v2, k2] = m_of(m2);
            if (v1 < best) { best = v1; best_kr = k1; best_eta = m1; }
            if (v2 < best) { best = v2; best_kr = k2; best_eta = m2; }
            if (v1 < v2) hi = m2;
            else lo = m1;
        }
    }
    if (best <= tol) {
        out.verdict = Verdict3::Yes;
        out.eta = best_eta;
        out.lam = best_kr.arg;
    } else {
        out.verdict = Verdict3::No;
    }
    return out;
}

MaxRuleResult max_rule_contains(const ConvexFunc& psi1, const ConvexFunc& psi2, const Vec& x,
                                const Vec& xstar, double eta, std::size_t alpha_grid,
                                double tol) {
    CanonFunc c1 = canonicalize(psi1), c2 = canonicalize(psi2);
    double f1 = eval(c1, x), f2 = eval(c2, x);
    if (f1 == kInf || f2 == kInf) throw InfiniteValueError("max_rule_contains: psi_i(x) infinite");
    double psimax = std::max(f1, f2);

    // margin(alpha2) = min-budget(alpha2) - available(alpha2), convex.
    auto margin = [&](double a2) -> std::pair<double, MembershipResult> {
        double a1 = 1.0 - a2;
        double avail = eta - (psimax - a1 * f1 - a2 * f2);
        std::vector<SubdiffTerm> terms;
        terms.push_back({scale_canon(c1, a1), x});
        terms.push_back({scale_canon(c2, a2), x});
        MembershipResult mr = subdiff_sum_membership(xstar, terms, {}, std::max(avail, 0.0), tol);
        if (!mr.decided) return {kInf, mr};
        return {mr.min_budget - avail, mr};
    };

    MaxRuleResult out;
    double best = kInf, best_a2 = 0;
    MembershipResult best_mr;
    auto consider = [&](double a2) {
        auto [v, mr] = margin(a2);
        if (v < best) {
            best = v;
            best_a2 = a2;
            best_mr = mr;
        }
    };
    for (std::size_t i = 0; i < alpha_grid; ++i) consider(double(i) / double(alpha_grid - 1));
    double lo = std::max(0.0, best_a2 - 1.0 / double(alpha_grid - 1));
    double hi = std::min(1.0, best_a2 + 1.0 / double(alpha_grid - 1));
    for (int it = 0; it < 50 && hi - lo > 1e-13; ++it) {
        double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
        auto [v1, r1] = margin(m1);
        auto [v2, r2] = margin(m2);
        if (v1 < best) { best = v1; best_a2 = m1; best_mr = r1; }
        if (v2 < best) { best = v2; best_a2 = m2; best_mr = r2; }
        if (v1 < v2) hi = m2;
        else lo = m1;
    }

    out.contains = best <= tol;
    out.alpha = {1.0 - best_a2, best_a2};
    out.slack = -best;
    if (out.contains && best_mr.term_budgets.size() == 2) {
        double a1 = 1.0 - best_a2;
        out.eta1 = a1 > 1e-12 ? best_mr.term_budgets[0] / a1 : 0.0;
        out.eta0 = best_a2 > 1e-12 ? best_mr.term_budgets[1] / best_a2 : 0.0;
    }
    return out;
}

bool coderivative_contains(const VectorMap& Phi, const Vec& x, const Vec& lam, const Vec& xstar,
                           double tol) {
    if (!Phi.in_domain(x, tol)) throw InfiniteValueError("coderivative_contains: x outside dom");
    CanonFunc scal = Phi.scalarize(lam, 1.0);  // <lam,Phi> + h
    auto gh = grad(Phi.control(), x);
    if (gh) {
        // D*Phi(x)(lam) = partial(<lam,Phi>+h)(x) - grad h(x).
        return in_eps_subdiff(scal, x, add(xstar, *gh), 0.0, tol);
    }
    // Nonsmooth control: decide through the DC intersection formula with
    // g = <lam,Phi> + h. A Yes certifies a global subgradient, which is in
    // particular a regular one.
    std::vector<SubdiffTerm> terms{{scal, x}};
    CanonFunc ch = Phi.canon_control();
    // xstar in partial_0(scal - h)(x): test via schedule on the raw canon pair.
    // Reuse dc machinery at the canon level by wrapping scal in a Sum func.
    // (scal is polyhedral or quadratic+polyhedral; rebuild a ConvexFunc.)
    std::vector<ConvexFunc> parts;
    if (scal.has_quad) parts.push_back(ConvexFunc::quadratic(scal.Q, scal.q, scal.c));
    for (const auto& p : scal.polys) parts.push_back(ConvexFunc::max_affine(scal.n, p));
    for (const auto& d : scal.doms) parts.push_back(ConvexFunc::indicator(d));
    if (parts.empty()) parts.push_back(ConvexFunc::zero(scal.n));
    ConvexFunc g_fun = parts.size() == 1 ? parts[0] : ConvexFunc::sum(parts);
    DcSubdiffResult r = dc_subdiff_contains(g_fun, Phi.control(), x, xstar, 0.0, {}, tol);
    return r.verdict == Verdict3::Yes;
}

std::vector<GeneratorSet> coderivative_generators(const VectorMap& Phi, const Vec& x,
                                                  const Vec& lam, double tol) {
    auto gh = grad(Phi.control(), x);
    if (!gh) throw NotDifferentiableError("coderivative_generators: control nonsmooth at x");
    CanonFunc scal = Phi.scalarize(lam, 1.0);
    std::vector<GeneratorSet> gens = subdiff_generators(scal, x, tol);
    GeneratorSet shift;
    shift.points.push_back(scale(*gh, -1.0));
    gens.push_back(shift);
    return gens;
}

}  // namespace dccert
