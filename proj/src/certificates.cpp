#include "dccert/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

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

Polytope scaled_polytope(const Polytope& P, double t) {
    // Scale through the H-representation: exact at any scale, including the
    // degenerate t -> 0 limit where vertex re-conversion loses facets.
    const HRep& h = P.hrep();
    Vec b = h.b, beq = h.beq;
    for (auto& v : b) v *= t;
    for (auto& v : beq) v *= t;
    Mat A = h.A, Aeq = h.Aeq;
    if (t == 0.0) {
        // The set collapses to the origin.
        A = Mat(0, P.dim());
        b = Vec();
        Aeq = Mat::identity(P.dim());
        beq = Vec(P.dim(), 0.0);
    }
    return Polytope::from_hrep(A, b, Aeq, beq);
}

ConvexFunc rebuild_from_canon(const CanonFunc& g) {
    std::vector<ConvexFunc> parts;
    if (g.has_quad) {
        if (canon_quad_nonzero(g)) parts.push_back(ConvexFunc::quadratic(g.Q, g.q, g.c));
        else parts.push_back(ConvexFunc::affine(g.q, g.c));
    }
    for (const auto& p : g.polys) parts.push_back(ConvexFunc::max_affine(g.n, p));
    for (const auto& d : g.doms) parts.push_back(ConvexFunc::indicator(d));
    if (parts.empty()) parts.push_back(ConvexFunc::zero(g.n));
    return parts.size() == 1 ? parts[0] : ConvexFunc::sum(parts);
}

// The objective can fold into the map as an extra component only when its
// quadratic part matches the control's as well.
bool augmented_applicable(const VectorMap& Phi, const CanonFunc& u_obj) {
    if (!joint_face_applicable(Phi)) return false;
    const CanonFunc& ch = Phi.canon_control();
    const std::size_t n = Phi.in_dim();
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            double qo = u_obj.has_quad ? u_obj.Q(a, b) : 0.0;
            double qh = ch.has_quad ? ch.Q(a, b) : 0.0;
            if (std::abs(qo - qh) > 1e-12) return false;
        }
    return true;
}

// Face over (alpha1, mu): alpha1 in [lo, 1], mu in (1-alpha1)*base.
Polytope alpha_mu_face(const Polytope& base, double alpha1_lower) {
    const HRep& hb = base.hrep();
    const std::size_t m = base.dim();
    Mat A(0, m + 1);
    Vec b;
    Mat Aeq(0, m + 1);
    Vec beq;
    {
        Vec row(m + 1, 0.0);
        row[0] = 1.0;
        A.append_row(row);
        b.push_back(1.0);
        row[0] = -1.0;
        A.append_row(row);
        b.push_back(-std::max(alpha1_lower, 0.0));
    }
    for (std::size_t i = 0; i < hb.A.rows(); ++i) {
        Vec row(m + 1, 0.0);
        Vec a = hb.A.row(i);
        row[0] = hb.b[i];
        for (std::size_t j = 0; j < m; ++j) row[j + 1] = a[j];
        A.append_row(row);
        b.push_back(hb.b[i]);
    }
    for (std::size_t i = 0; i < hb.Aeq.rows(); ++i) {
        Vec row(m + 1, 0.0);
        Vec a = hb.Aeq.row(i);
        row[0] = hb.beq[i];
        for (std::size_t j = 0; j < m; ++j) row[j + 1] = a[j];
        Aeq.append_row(row);
        beq.push_back(hb.beq[i]);
    }
    return Polytope::from_hrep(A, b, Aeq, beq);
}

}  // namespace

Problem::Problem(DCPair obj, VectorMap phi, Polytope c, Vec z0_, std::optional<Polytope> q)
    : objective(std::move(obj)), Phi(std::move(phi)), C(c.converted()), z0(std::move(z0_)), Q() {
    if (q) Q = q->converted();
    if (Phi.out_dim() != C.dim()) throw InputError("Problem: constraint dimension mismatch");
    if (!dcpair_domain_ok(objective)) throw InputError("Problem: dom u not inside dom h");
    // The objective control and the map control must be the same function;
    // probe on a seeded grid.
    std::mt19937_64 rng(1234);
    std::normal_distribution<double> N;
    for (int t = 0; t < 32; ++t) {
        Vec x(dim());
        for (auto& v : x) v = 2.0 * N(rng);
        double a = eval(objective.h, x), b = eval(Phi.control(), x);
        if (a == kInf && b == kInf) continue;
        if (std::abs(a - b) > 1e-9 * (1.0 + std::abs(a)))
            throw InputError("Problem: objective and constraint map use different controls");
    }
}

bool Problem::feasible(const Vec& x, double tol) const {
    if (!Phi.in_domain(x, tol)) return false;
    if (Q && !contains(*Q, x, tol)) return false;
    return contains(C, Phi.value(x, tol), tol);
}

ImprovementObjective improvement_objective(const Problem& P, double alpha) {
    if (!std::isfinite(alpha)) throw InfiniteValueError("improvement_objective: alpha infinite");
    ImprovementObjective out;
    out.alpha = alpha;
    out.h = P.objective.h;
    out.dual = dual_slope(P.C, P.z0);
    // psi1 = phi + h - alpha = u_obj - alpha.
    CanonFunc cu = canonicalize(P.objective.u);
    cu.c -= alpha;
    if (!cu.has_quad) {
        cu.has_quad = true;  // carry the constant in the affine slot
        cu.Q = Mat(cu.n, cu.n);
        cu.q = Vec(cu.n, 0.0);
    }
    out.psi1 = rebuild_from_canon(cu);

    bool polyhedral = true;
    for (const Vec& lam : out.dual.vertices()) {
        CanonFunc part = P.Phi.scalarize(lam, 1.0);
        part.c -= dot(lam, P.z0) + 1.0;  // <lam, Phi - z0> + h - 1
        if (!part.has_quad) {
            part.has_quad = true;
            part.Q = Mat(part.n, part.n);
            part.q = Vec(part.n, 0.0);
        }
        out.psi2_parts.push_back(part);
        if (canon_quad_nonzero(part) || !part.doms.empty()) polyhedral = false;
    }
    if (polyhedral) {
        MaxAffineData pieces;
        for (const auto& part : out.psi2_parts) {
            MaxAffineData flat = flatten_to_max_affine(part);
            pieces.insert(pieces.end(), flat.begin(), flat.end());
        }
        out.psi2 = ConvexFunc::max_affine(P.dim(), pieces);
    }
    return out;
}

ImprovementObjective improvement_objective(const Problem& P, const Vec& xbar) {
    double val = dc_eval(P.objective, xbar);
    if (val == kInf) throw InfiniteValueError("improvement_objective: objective infinite at xbar");
    return improvement_objective(P, val);
}

double ImprovementObjective::eval_f(const Vec& x, double tol) const {
    double hx = eval(h, x, tol);
    if (hx == kInf) return kInf;
    double best = -kInf;
    for (const auto& part : psi2_parts) {
        double v = eval(part, x, tol);
        if (v == kInf) return kInf;
        best = std::max(best, v - hx);
    }
    return best;
}

double ImprovementObjective::eval_psi2(const Vec& x, double tol) const {
    double best = -kInf;
    for (const auto& part : psi2_parts) {
        double v = eval(part, x, tol);
        if (v == kInf) return kInf;
        best = std::max(best, v);
    }
    return best;
}

double ImprovementObjective::merit(const Vec& x, double tol) const {
    double p1 = eval(psi1, x, tol);
    double p2 = eval_psi2(x, tol);
    double hx = eval(h, x, tol);
    if (p1 == kInf || p2 == kInf || hx == kInf) return kInf;
    return std::max(p1, p2) - hx;
}

namespace detail {

std::vector<Vec> sample_subdiff_points(const ConvexFunc& h, const Vec& xbar, double eta,
                                       std::size_t extra_samples, unsigned seed) {
    CanonFunc ch = canonicalize(h);
    const std::size_t n = xbar.size();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N;
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<Vec> pts;

    if (!canon_quad_nonzero(ch)) {
        Polytope S = eps_subdiff_vrep(ch, xbar, eta);
        if (S.is_empty()) return pts;
        const auto& vs = S.vertices();
        pts = vs;
        for (std::size_t t = 0; t < extra_samples && vs.size() > 1; ++t) {
            Vec w(vs.size());
            double tot = 0;
            for (auto& v : w) {
                v = -std::log(std::max(U(rng), 1e-12));
                tot += v;
            }
            Vec p(n, 0.0);
            for (std::size_t i = 0; i < vs.size(); ++i) axpy(p, w[i] / tot, vs[i]);
            pts.push_back(p);
        }
        return pts;
    }

    // Quadratic part: shell points of the gradient-centered ellipsoid,
    // composed with active pieces of polyhedral factors.
    Vec grad0 = add(matvec(ch.Q, xbar), ch.q);
    std::vector<Vec> poly_offsets{Vec(n, 0.0)};
    for (const auto& p : ch.polys) {
        std::vector<Vec> next;
        double m = -kInf;
        for (const auto& piece : p) m = std::max(m, dot(piece.a, xbar) + piece.b);
        for (const auto& piece : p) {
            if (dot(piece.a, xbar) + piece.b < m - 1e-9 * (1 + std::abs(m))) continue;
            for (const auto& base : poly_offsets) next.push_back(add(base, piece.a));
        }
        poly_offsets.swap(next);
    }
    std::vector<Vec> dirs;
    for (std::size_t i = 0; i < n; ++i) {
        Vec e(n, 0.0);
        e[i] = 1.0;
        dirs.push_back(e);
        e[i] = -1.0;
        dirs.push_back(e);
    }
    for (std::size_t t = 0; t < extra_samples; ++t) {
        Vec d(n);
        for (auto& v : d) v = N(rng);
        double nd = norm2(d);
        if (nd > 1e-12) dirs.push_back(scale(d, 1.0 / nd));
    }
    for (const auto& off : poly_offsets) {
        pts.push_back(add(grad0, off));
        for (const Vec& d : dirs) {
            double qd = dot(d, matvec(ch.Q, d));
            if (qd <= 1e-14) continue;
            Vec p = add(grad0, off);
            axpy(p, std::sqrt(2.0 * eta / qd), matvec(ch.Q, d));
            pts.push_back(p);
        }
    }
    return pts;
}

WitnessOutcome engine_search(const EngineSpec& spec, const Vec& xbar, const Vec& xstar,
                             double eta, double alpha1_lower, double tol) {
    WitnessOutcome out;
    const VectorMap& Phi = *spec.Phi;
    const std::size_t m = Phi.out_dim();
    std::vector<NormalTerm> normals;
    if (spec.Qset) normals.push_back({*spec.Qset, xbar});

    const bool phi_poly = joint_face_applicable(Phi);
    const bool aug_ok = augmented_applicable(Phi, spec.u_obj);

    if (aug_ok) {
        // Single joint QP over (alpha1, mu): fold the objective in as an
        // extra component with h_extra = 1.
        std::vector<ConvexFunc> us;
        us.push_back(rebuild_from_canon(spec.u_obj));
        for (std::size_t j = 0; j < m; ++j) us.push_back(Phi.component_u(j));
        VectorMap ext(us, Phi.control());
        Polytope face = alpha_mu_face(spec.base, alpha1_lower);

        Vec budget_lin(m + 1, 0.0);
        budget_lin[0] = spec.margin_const;
        for (std::size_t j = 0; j < m; ++j) budget_lin[j + 1] = spec.budget_vec[j];

        JointFaceResult jr =
            joint_face_min_budget(ext, 1.0, face, xbar, {}, normals, xstar, budget_lin, kTol);
        if (!jr.solved) {
            out.certified = false;
            return out;
        }
        if (jr.min_cost == kInf) {
            out.refuted = true;
            out.margin = kInf;
            return out;
        }
        double margin = jr.min_cost + spec.margin_const - eta;
        out.margin = margin;
        if (margin <= tol) {
            out.found = true;
            GlobalWitness w;
            w.eta = eta;
            w.xstar = xstar;
            double a1 = jr.lam[0], a2 = 1.0 - a1;
            w.alpha = {a1, a2};
            Vec mu(m);
            for (std::size_t j = 0; j < m; ++j) mu[j] = jr.lam[j + 1];
            w.lam = a2 > 1e-9 ? scale(mu, 1.0 / a2) : mu;
            // One scalarization budget covers alpha1 eta1 + alpha2 eta2.
            w.eta1 = 0.0;
            w.eta2 = a2 > 1e-9 ? jr.term_budgets[0] / a2 : 0.0;
            if (!normals.empty()) w.eta3 = jr.term_budgets.back();
            w.slack = -margin;
            out.w = w;
        } else {
            out.refuted = true;
        }
        return out;
    }

    if (phi_poly) {
        // Quadratic objective: ternary over alpha1 on the convex margin.
        auto eval_at = [&](double a1) -> std::pair<double, JointFaceResult> {
            double a2 = 1.0 - a1;
            std::vector<SubdiffTerm> fixed{{scale_canon(spec.u_obj, a1), xbar}};
            Polytope face = scaled_polytope(spec.base, a2);
            JointFaceResult jr = joint_face_min_budget(Phi, a2, face, xbar, fixed, normals,
                                                       xstar, spec.budget_vec, kTol);
            if (!jr.solved || jr.min_cost == kInf) return {kInf, jr};
            return {jr.min_cost + spec.margin_const * a2 - eta, jr};
        };
        double lo = std::max(alpha1_lower, 0.0), hi = 1.0;
        double best = kInf, best_a1 = lo;
        JointFaceResult best_jr;
        auto consider = [&](double a1) {
            auto [v, jr] = eval_at(a1);
            if (v < best) {
                best = v;
                best_a1 = a1;
                best_jr = jr;
            }
        };
        consider(lo);
        if (best > tol) consider(hi);
        double tlo = lo, thi = hi;
        for (int it = 0; it < 40 && best > tol && thi - tlo > 1e-12; ++it) {
            double m1 = tlo + (thi - tlo) / 3, m2 = thi - (thi - tlo) / 3;
            auto [v1, j1] = eval_at(m1);
            auto [v2, j2] = eval_at(m2);
            if (v1 < best) { best = v1; best_a1 = m1; best_jr = j1; }
            if (v2 < best) { best = v2; best_a1 = m2; best_jr = j2; }
            if (v1 < v2) thi = m2;
            else tlo = m1;
        }
        out.margin = best;
        if (best <= tol) {
            out.found = true;
            GlobalWitness w;
            w.eta = eta;
            w.xstar = xstar;
            double a2 = 1.0 - best_a1;
            w.alpha = {best_a1, a2};
            w.lam = a2 > 1e-9 ? scale(best_jr.lam, 1.0 / a2) : best_jr.lam;
            if (best_jr.term_budgets.size() >= 2) {
                w.eta1 = best_a1 > 1e-9 ? best_jr.term_budgets[0] / best_a1 : 0.0;
                w.eta2 = a2 > 1e-9 ? best_jr.term_budgets[1] / a2 : 0.0;
            }
            if (!normals.empty()) w.eta3 = best_jr.term_budgets.back();
            w.slack = -best;
            out.w = w;
        } else {
            out.refuted = true;
        }
        return out;
    }

    if (m == 1) {
        // Quadratic single-component map: the margin is jointly convex in
        // (alpha2, mu), so nested ternary searches decide it exactly.
        double blo = kInf, bhi = -kInf;
        for (const Vec& v : spec.base.vertices()) {
            blo = std::min(blo, v[0]);
            bhi = std::max(bhi, v[0]);
        }
        auto margin_at = [&](double a2, double mu) -> double {
            double a1 = 1.0 - a2;
            double avail = eta - spec.margin_const * a2 + mu * spec.budget_vec[0];
            std::vector<SubdiffTerm> terms;
            terms.push_back({scale_canon(spec.u_obj, a1), xbar});
            try {
                terms.push_back({Phi.scalarize({mu}, a2), xbar});
            } catch (const NotRepresentableError&) {
                return kInf;
            }
            MembershipResult mr =
                subdiff_sum_membership(xstar, terms, normals, std::max(avail, 0.0), tol);
            if (!mr.decided) return kInf;
            return mr.min_budget - avail;
        };
        bool hit = false;  // early exit once any probe certifies a witness
        auto inner_min = [&](double a2) -> std::pair<double, double> {
            double lo = a2 * blo, hi = a2 * bhi;
            if (hi < lo) std::swap(lo, hi);
            double best = kInf, best_mu = 0.5 * (lo + hi);
            for (int pre = 0; pre <= 6 && !hit; ++pre) {
                double mu = lo + (hi - lo) * pre / 6.0;
                double v = margin_at(a2, mu);
                if (v < best) { best = v; best_mu = mu; }
                if (v <= tol) hit = true;
            }
            double tl = lo, th = hi;
            for (int it = 0; it < 40 && !hit && th - tl > 1e-13 * (1 + std::abs(th)); ++it) {
                double m1 = tl + (th - tl) / 3, m2 = th - (th - tl) / 3;
                double v1 = margin_at(a2, m1), v2 = margin_at(a2, m2);
                if (v1 < best) { best = v1; best_mu = m1; }
                if (v2 < best) { best = v2; best_mu = m2; }
                if (best <= tol) hit = true;
                if (v1 < v2) th = m2;
                else tl = m1;
            }
            return {best, best_mu};
        };
        double lo = 0.0, hi = 1.0 - std::max(alpha1_lower, 0.0);
        double best = kInf, best_a2 = 0, best_mu = 0;
        auto consider2 = [&](double a2) {
            if (hit) return;
            auto [v, mu] = inner_min(a2);
            if (v < best) { best = v; best_a2 = a2; best_mu = mu; }
        };
        consider2(lo);
        consider2(hi);
        consider2(0.5 * (lo + hi));
        double tl = lo, th = hi;
        for (int it = 0; it < 40 && !hit && th - tl > 1e-12; ++it) {
            double m1 = tl + (th - tl) / 3, m2 = th - (th - tl) / 3;
            auto [v1, mu1] = inner_min(m1);
            auto [v2, mu2] = inner_min(m2);
            if (v1 < best) { best = v1; best_a2 = m1; best_mu = mu1; }
            if (v2 < best) { best = v2; best_a2 = m2; best_mu = mu2; }
            if (v1 < v2) th = m2;
            else tl = m1;
        }
        out.margin = best;
        if (best <= tol) {
            out.found = true;
            GlobalWitness w;
            w.eta = eta;
            w.xstar = xstar;
            w.alpha = {1.0 - best_a2, best_a2};
            w.lam = {best_a2 > 1e-9 ? best_mu / best_a2 : best_mu};
            w.slack = -best;
            out.w = w;
        } else {
            out.refuted = true;
        }
        return out;
    }

    // Fallback: alpha grid x base-vertex enumeration; a hit is sound but a
    // miss is not a certified refutation.
    out.certified = false;
    for (int ai = 20; ai >= 0; --ai) {
        double a1 = std::max(double(ai) / 20.0, alpha1_lower);
        double a2 = 1.0 - a1;
        for (const Vec& lamv : spec.base.vertices()) {
            double avail = eta - spec.margin_const * a2 + a2 * dot(lamv, spec.budget_vec);
            if (avail < -tol) continue;
            std::vector<SubdiffTerm> terms;
            terms.push_back({scale_canon(spec.u_obj, a1), xbar});
            try {
                terms.push_back({Phi.scalarize(scale(lamv, a2), a2), xbar});
            } catch (const NotRepresentableError&) {
                continue;
            }
            MembershipResult mr =
                subdiff_sum_membership(xstar, terms, normals, std::max(avail, 0.0), tol);
            if (mr.decided && mr.member) {
                out.found = true;
                GlobalWitness w;
                w.eta = eta;
                w.xstar = xstar;
                w.alpha = {a1, a2};
                w.lam = lamv;
                if (mr.term_budgets.size() >= 2) {
                    w.eta1 = a1 > 1e-9 ? mr.term_budgets[0] / a1 : 0.0;
                    w.eta2 = a2 > 1e-9 ? mr.term_budgets[1] / a2 : 0.0;
                }
                if (!normals.empty()) w.eta3 = mr.term_budgets.back();
                w.slack = avail - mr.min_budget;
                out.w = w;
                return out;
            }
        }
    }
    return out;
}

double engine_alpha1_max(const EngineSpec& spec, const Vec& xbar, const Vec& xstar, double eta,
                         double tol) {
    WitnessOutcome any = engine_search(spec, xbar, xstar, eta, 0.0, tol);
    if (!any.found) return -1.0;
    WitnessOutcome full = engine_search(spec, xbar, xstar, eta, 1.0 - 1e-12, tol);
    if (full.found) return 1.0;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 18; ++it) {
        double mid = 0.5 * (lo + hi);
        WitnessOutcome r = engine_search(spec, xbar, xstar, eta, mid, tol);
        if (r.found) lo = mid;
        else hi = mid;
    }
    return lo;
}

InclusionProbe probe_inclusion(const EngineSpec& spec, const Vec& xbar, double eta,
                               const CertOptions& opts) {
    InclusionProbe probe;
    probe.all_covered = true;
    std::vector<Vec> points =
        sample_subdiff_points(spec.h, xbar, eta, opts.boundary_samples, opts.seed);
    if (points.empty()) return probe;  // empty subdifferential: nothing to cover
    for (const Vec& xstar : points) {
        WitnessOutcome r = engine_search(spec, xbar, xstar, eta, 0.0, opts.tol);
        if (!r.certified) probe.certified = false;
        if (r.found) {
            if (probe.witnesses.size() < 8) probe.witnesses.push_back(r.w);
        } else {
            probe.all_covered = false;
            probe.failed_xstar = xstar;
            probe.failed_margin = r.margin;
            return probe;
        }
    }
    return probe;
}

}  // namespace detail

namespace {

detail::EngineSpec make_set_engine(const Problem& P, const Vec& xbar) {
    detail::EngineSpec spec;
    spec.Phi = &P.Phi;
    spec.u_obj = canonicalize(P.objective.u);
    spec.h = P.objective.h;
    spec.base = dual_slope(P.C, P.z0);
    spec.budget_vec = sub(P.Phi.value(xbar), P.z0);
    spec.margin_const = 1.0;
    if (P.Q) spec.Qset = *P.Q;
    return spec;
}

// Equality face of the dual slope: <lam, Phi(xbar) - z0> = 1.
Polytope equality_face(const Polytope& dual, const Vec& phix_minus_z0) {
    Mat Aeq(0, dual.dim());
    Aeq.append_row(phix_minus_z0);
    return with_rows(dual, Mat(0, dual.dim()), Vec(), Aeq, Vec{1.0});
}

}  // namespace

Certificate check_global(const Problem& P, const Vec& xbar, const CertOptions& opts) {
    if (!P.feasible(xbar, opts.tol)) throw InfeasiblePointError("check_global: xbar infeasible");
    detail::EngineSpec spec = make_set_engine(P, xbar);

    Certificate cert;
    double ux = eval(P.objective.u, xbar), hx = eval(P.objective.h, xbar);
    std::vector<double> schedule = opts.eta_schedule;
    if (schedule.empty()) {
        double eta_max = 10.0 * (1.0 + std::abs(ux - hx) + std::abs(hx));
        schedule.push_back(0.0);
        for (std::size_t i = 1; i <= opts.eta_points; ++i)
            schedule.push_back(eta_max * double(i) / double(opts.eta_points));
    }
    std::sort(schedule.begin(), schedule.end());
    cert.schedule = schedule;

    std::vector<InclusionProbe> probes(schedule.size());
    if (opts.threads > 1) {
        std::vector<std::thread> pool;
        std::size_t per = (schedule.size() + opts.threads - 1) / opts.threads;
        for (std::size_t t = 0; t < opts.threads; ++t) {
            std::size_t lo = t * per, hi = std::min(schedule.size(), lo + per);
            if (lo >= hi) break;
            pool.emplace_back([&, lo, hi] {
                for (std::size_t i = lo; i < hi; ++i)
                    probes[i] = detail::probe_inclusion(spec, xbar, schedule[i], opts);
            });
        }
        for (auto& th : pool) th.join();
    } else {
        for (std::size_t i = 0; i < schedule.size(); ++i)
            probes[i] = detail::probe_inclusion(spec, xbar, schedule[i], opts);
    }

    bool any_uncertified = false;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const auto& pr = probes[i];
        if (!pr.certified) any_uncertified = true;
        if (!pr.all_covered) {
            if (pr.certified) {
                cert.verdict = CertVerdict::Fails;
                cert.refuted_eta = schedule[i];
                cert.refuted_xstar = pr.failed_xstar;
                cert.refuted_margin = pr.failed_margin;
            } else {
                cert.verdict = CertVerdict::NotFoundAtResolution;
                cert.notes = "no witness found on an inexact search path";
            }
            return cert;
        }
        for (const auto& w : pr.witnesses)
            if (cert.witnesses.size() < 200) cert.witnesses.push_back(w);
    }
    if (any_uncertified) {
        cert.verdict = CertVerdict::NotFoundAtResolution;
        cert.notes = "all sampled inclusions covered, but a search path was inexact";
        return cert;
    }
    cert.verdict = CertVerdict::Holds;

    // Converse bookkeeping: uniform alpha1 lower bound across endpoint and
    // middle etas.
    double min_a1 = 1.0;
    std::vector<std::size_t> idxs{0, schedule.size() / 2, schedule.size() - 1};
    for (std::size_t i : idxs) {
        std::vector<Vec> pts =
            detail::sample_subdiff_points(spec.h, xbar, schedule[i], 8, opts.seed);
        for (const Vec& xstar : pts) {
            double a1 = detail::engine_alpha1_max(spec, xbar, xstar, schedule[i], opts.tol);
            if (a1 >= 0) min_a1 = std::min(min_a1, a1);
        }
    }
    cert.min_alpha1 = min_a1;
    cert.all_alpha1_positive = min_a1 >= opts.alpha_min;

    // Grid estimate of the converse eta range (flagged as an estimate).
    {
        CanonFunc ch = canonicalize(P.objective.h);
        std::mt19937_64 rng(opts.seed + 7);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        double R = 2.0 + 2.0 * norm_inf(xbar);
        double best = 0.0;
        for (int t = 0; t < 200; ++t) {
            Vec y(P.dim());
            for (auto& v : y) v = R * U(rng);
            if (!P.feasible(y, opts.tol)) continue;
            auto gy = grad(P.objective.h, y);
            std::vector<Vec> subs;
            if (gy) subs.push_back(*gy);
            else if (!canon_quad_nonzero(ch)) {
                Polytope S = eps_subdiff_vrep(ch, y, 0.0);
                if (!S.is_empty()) subs = S.vertices();
            }
            for (const Vec& ys : subs) {
                double conj = conjugate_value(ch, ys);
                if (conj == kInf) continue;
                best = std::max(best, conj + hx - dot(ys, xbar));
            }
        }
        cert.eta_bar_estimate = best;
        cert.notes += (cert.notes.empty() ? std::string() : std::string("; "));
        cert.notes += "eta_bar is a feasible-grid estimate";
    }
    return cert;
}

namespace {

// Active-row generators of the normal cone N_Q(xbar).
std::vector<Vec> q_normal_rays(const std::optional<Polytope>& Q, const Vec& xbar, double tol) {
    std::vector<Vec> rays;
    if (!Q) return rays;
    const HRep& h = Q->hrep();
    for (std::size_t i = 0; i < h.A.rows(); ++i) {
        Vec a = h.A.row(i);
        if (std::abs(dot(a, xbar) - h.b[i]) <= tol * 100 * std::max(1.0, norm2(a)))
            rays.push_back(a);
    }
    for (std::size_t i = 0; i < h.Aeq.rows(); ++i) {
        rays.push_back(h.Aeq.row(i));
        rays.push_back(scale(h.Aeq.row(i), -1.0));
    }
    return rays;
}

}  // namespace

QcResult check_QC(const Problem& P, const Vec& xbar, double tol) {
    QcResult out;
    if (!P.Phi.in_domain(xbar)) throw InfiniteValueError("check_QC: xbar outside dom Phi");
    Polytope dual = dual_slope(P.C, P.z0);
    Vec v = sub(P.Phi.value(xbar), P.z0);
    Polytope face = equality_face(dual, v);
    if (face.is_empty()) {
        out.holds = true;
        out.face_empty = true;
        return out;
    }
    std::vector<Vec> qrays = q_normal_rays(P.Q, xbar, tol);
    auto J = P.Phi.jacobian(xbar);
    if (J) {
        // Violated iff some face point lands on -N_Q(xbar) under J'.
        const auto& fverts = face.vertices();
        LpProblem lp(fverts.size() + qrays.size());
        for (std::size_t a = 0; a < P.dim(); ++a) {
            Vec row(fverts.size() + qrays.size(), 0.0);
            for (std::size_t r = 0; r < fverts.size(); ++r)
                row[r] = matvec_t(*J, fverts[r])[a];
            for (std::size_t k = 0; k < qrays.size(); ++k)
                row[fverts.size() + k] = qrays[k][a];
            lp.add_eq(row, 0.0);
        }
        {
            Vec row(fverts.size() + qrays.size(), 0.0);
            for (std::size_t r = 0; r < fverts.size(); ++r) row[r] = 1.0;
            lp.add_eq(row, 1.0);
        }
        for (std::size_t i = 0; i < fverts.size() + qrays.size(); ++i) {
            Vec row(fverts.size() + qrays.size(), 0.0);
            row[i] = -1.0;
            lp.add_le(row, 0.0);
        }
        out.holds = lp.feasible_point().status != LpStatus::Optimal;
        return out;
    }
    // Nonsmooth map: refute through vertex coderivatives; a refutation is
    // exact, agreement is sampling-level only.
    out.exact = false;
    for (const Vec& lam : face.vertices()) {
        if (coderivative_contains(P.Phi, xbar, lam, Vec(P.dim(), 0.0), tol)) {
            out.holds = false;
            out.exact = true;
            return out;
        }
    }
    out.holds = true;
    return out;
}

LocalCertificate check_local_necessary(const Problem& P, const Vec& xbar, double tol) {
    if (!P.feasible(xbar, tol)) throw InfeasiblePointError("check_local_necessary: infeasible");
    auto gh = grad(P.objective.h, xbar);
    if (!gh)
        throw NotDifferentiableError("check_local_necessary: control not differentiable at xbar");

    LocalCertificate out;
    Polytope dual = dual_slope(P.C, P.z0);
    Vec v = sub(P.Phi.value(xbar), P.z0);
    Polytope face = equality_face(dual, v);

    CanonFunc u_obj = canonicalize(P.objective.u);
    const std::size_t m = P.Phi.out_dim();
    std::vector<NormalTerm> normals;
    if (P.Q) normals.push_back({*P.Q, xbar});
    std::vector<Vec> qrays = q_normal_rays(P.Q, xbar, tol);

    auto stationarity_only = [&]() -> bool {
        std::vector<SubdiffTerm> terms{{u_obj, xbar}};
        MembershipResult r = subdiff_sum_membership(*gh, terms, normals, tol, tol);
        return r.decided && r.member;
    };

    bool found = false;
    Vec alpha, lam;
    if (face.is_empty()) {
        if (stationarity_only()) {
            found = true;
            alpha = {1.0, 0.0};
            lam = Vec(m, 0.0);
        }
    } else {
        const bool phi_poly = joint_face_applicable(P.Phi);
        const bool aug_ok = augmented_applicable(P.Phi, u_obj);
        if (aug_ok) {
            std::vector<ConvexFunc> us;
            us.push_back(rebuild_from_canon(u_obj));
            for (std::size_t j = 0; j < m; ++j) us.push_back(P.Phi.component_u(j));
            VectorMap ext(us, P.Phi.control());
            Polytope facex = alpha_mu_face(face, 0.0);
            JointFaceResult jr = joint_face_min_budget(ext, 1.0, facex, xbar, {}, normals, *gh,
                                                       Vec(m + 1, 0.0), kTol);
            if (jr.solved && jr.min_cost <= tol) {
                found = true;
                double a1 = jr.lam[0];
                alpha = {a1, 1.0 - a1};
                Vec mu(m);
                for (std::size_t j = 0; j < m; ++j) mu[j] = jr.lam[j + 1];
                lam = (1.0 - a1) > 1e-9 ? scale(mu, 1.0 / (1.0 - a1)) : mu;
            }
        } else if (phi_poly) {
            auto eval_at = [&](double a1) -> std::pair<double, JointFaceResult> {
                double a2 = 1.0 - a1;
                std::vector<SubdiffTerm> fixed{{scale_canon(u_obj, a1), xbar}};
                Polytope fs = scaled_polytope(face, a2);
                JointFaceResult jr = joint_face_min_budget(P.Phi, a2, fs, xbar, fixed, normals,
                                                           *gh, Vec(m, 0.0), kTol);
                if (!jr.solved || jr.min_cost == kInf) return {kInf, jr};
                return {jr.min_cost, jr};
            };
            double best = kInf, best_a1 = 0;
            JointFaceResult best_jr;
            auto consider = [&](double a1) {
                auto [val, jr] = eval_at(a1);
                if (val < best) {
                    best = val;
                    best_a1 = a1;
                    best_jr = jr;
                }
            };
            consider(0);
            consider(1);
            double lo = 0, hi = 1;
            for (int it = 0; it < 40 && hi - lo > 1e-12; ++it) {
                double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
                auto [v1, j1] = eval_at(m1);
                auto [v2, j2] = eval_at(m2);
                if (v1 < best) { best = v1; best_a1 = m1; best_jr = j1; }
                if (v2 < best) { best = v2; best_a1 = m2; best_jr = j2; }
                if (v1 < v2) hi = m2;
                else lo = m1;
            }
            if (best <= tol) {
                found = true;
                double a2 = 1.0 - best_a1;
                alpha = {best_a1, a2};
                lam = a2 > 1e-9 ? scale(best_jr.lam, 1.0 / a2) : best_jr.lam;
            }
        }
        if (!found && stationarity_only()) {
            found = true;
            alpha = {1.0, 0.0};
            lam = Vec(m, 0.0);
        }
    }
    if (found) {
        out.multipliers_found = true;
        out.alpha = alpha;
        out.lam = lam;
        out.complementarity = alpha[1] * (1.0 - dot(lam, v));
    }

    QcResult qc = check_QC(P, xbar, tol);
    out.qc_holds = qc.holds;
    out.qc_exact = qc.exact;
    if (qc.holds && out.multipliers_found && !face.is_empty()) {
        if (auto J = P.Phi.jacobian(xbar)) {
            // Conic form through an LP over subdifferential generators of
            // u_obj and nonnegative weights on the face vertices.
            std::vector<GeneratorSet> gens = subdiff_generators(u_obj, xbar, tol);
            {
                GeneratorSet qg;
                qg.points.push_back(Vec(P.dim(), 0.0));
                qg.rays = qrays;
                gens.push_back(qg);
            }
            const auto& fverts = face.vertices();
            std::size_t nv = 0;
            std::vector<std::size_t> starts;
            for (const auto& g : gens) {
                starts.push_back(nv);
                nv += g.points.size() + g.rays.size();
            }
            std::size_t rho0 = nv;
            nv += fverts.size();
            LpProblem lp(nv);
            for (std::size_t a = 0; a < P.dim(); ++a) {
                Vec row(nv, 0.0);
                for (std::size_t gi = 0; gi < gens.size(); ++gi) {
                    std::size_t s = starts[gi];
                    for (std::size_t k = 0; k < gens[gi].points.size(); ++k)
                        row[s + k] = gens[gi].points[k][a];
                    for (std::size_t k = 0; k < gens[gi].rays.size(); ++k)
                        row[s + gens[gi].points.size() + k] = gens[gi].rays[k][a];
                }
                for (std::size_t r = 0; r < fverts.size(); ++r)
                    row[rho0 + r] = matvec_t(*J, fverts[r])[a];
                lp.add_eq(row, (*gh)[a]);
            }
            for (std::size_t gi = 0; gi < gens.size(); ++gi) {
                Vec row(nv, 0.0);
                std::size_t s = starts[gi];
                for (std::size_t k = 0; k < gens[gi].points.size(); ++k) row[s + k] = 1.0;
                lp.add_eq(row, 1.0);
            }
            for (std::size_t i = 0; i < nv; ++i) {
                Vec row(nv, 0.0);
                row[i] = -1.0;
                lp.add_le(row, 0.0);
            }
            LpResult r = lp.feasible_point();
            if (r.status == LpStatus::Optimal) {
                out.cone_form_found = true;
                double eta = 0;
                Vec nu(m, 0.0);
                for (std::size_t rr = 0; rr < fverts.size(); ++rr) {
                    eta += r.x[rho0 + rr];
                    axpy(nu, r.x[rho0 + rr], fverts[rr]);
                }
                out.cone_eta = eta;
                out.cone_lam = eta > 1e-12 ? scale(nu, 1.0 / eta) : nu;
            }
        } else {
            out.notes += "cone form skipped: map not differentiable at xbar";
        }
    } else if (qc.holds && out.multipliers_found) {
        // Empty face: the conic term vanishes.
        out.cone_form_found = stationarity_only();
        out.cone_eta = 0.0;
        out.cone_lam = Vec(m, 0.0);
    }
    return out;
}

SufficientCertificate check_local_sufficient(const Problem& P, const Vec& xbar,
                                             std::vector<double> eta_small_schedule,
                                             const CertOptions& opts) {
    if (!P.feasible(xbar, opts.tol))
        throw InfeasiblePointError("check_local_sufficient: infeasible");
    SufficientCertificate out;
    if (eta_small_schedule.empty()) eta_small_schedule = {0.0, 1e-4, 1e-3, 1e-2};
    out.schedule = eta_small_schedule;

    detail::EngineSpec spec = make_set_engine(P, xbar);
    out.inclusion_ok = true;
    for (double eta : eta_small_schedule) {
        InclusionProbe pr = detail::probe_inclusion(spec, xbar, eta, opts);
        if (!pr.all_covered) {
            out.inclusion_ok = false;
            break;
        }
    }

    auto gh = grad(P.objective.h, xbar);
    Polytope dual = dual_slope(P.C, P.z0);
    Vec v = sub(P.Phi.value(xbar), P.z0);
    Polytope face = equality_face(dual, v);
    if (face.is_empty()) {
        out.qualification_ok = true;
    } else if (gh) {
        QcResult qc = check_QC(P, xbar, opts.tol);
        out.qualification_ok = qc.holds;
        if (!qc.exact) out.notes += "qualification checked by sampling (nonsmooth map); ";
    } else {
        // Nonsmooth control: test the intersection with -partial h(xbar)
        // encoded as a support-function term.
        CanonFunc ch = canonicalize(P.objective.h);
        if (!canon_quad_nonzero(ch) && joint_face_applicable(P.Phi)) {
            Polytope S = eps_subdiff_vrep(ch, xbar, 0.0);
            MaxAffineData pieces;
            for (const Vec& vv : S.vertices()) pieces.push_back({scale(vv, -1.0), 0.0});
            CanonFunc neg_subdiff;
            neg_subdiff.n = P.dim();
            neg_subdiff.Q = Mat(P.dim(), P.dim());
            neg_subdiff.q = Vec(P.dim(), 0.0);
            neg_subdiff.polys.push_back(pieces);
            std::vector<SubdiffTerm> fixed{{neg_subdiff, Vec(P.dim(), 0.0)}};
            JointFaceResult jr =
                joint_face_min_budget(P.Phi, 1.0, face, xbar, fixed, {}, Vec(P.dim(), 0.0),
                                      Vec(P.Phi.out_dim(), 0.0), kTol);
            bool intersects = jr.solved && jr.min_cost <= opts.tol;
            out.qualification_ok = !intersects;
        } else {
            out.qualification_ok = false;
            out.notes += "qualification not decidable for this data; ";
        }
    }

    out.verdict = (out.inclusion_ok && out.qualification_ok) ? SufficientVerdict::LocalMin
                                                             : SufficientVerdict::NotCertified;
    return out;
}

}  // namespace dccert
