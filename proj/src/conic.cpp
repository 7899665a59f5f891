#include "dccert/conic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

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

bool augmented_applicable_cone(const VectorMap& Phi, const CanonFunc& u_obj) {
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

// H-rep of K+ = {lam : <lam, g> >= 0 for generators g of K}.
Polytope kplus_slab(const PolyCone& K, std::size_t m) {
    Mat A(0, m);
    Vec b;
    for (const Vec& g : K.generators) {
        A.append_row(scale(g, -1.0));
        b.push_back(0.0);
    }
    return Polytope::from_hrep(A, b);
}

}  // namespace

ConeBase make_base(const PolyCone& K, std::optional<Vec> e, double tol) {
    ConeBase out;
    out.K = K;
    out.Kplus = positive_polar(K);
    const std::size_t m = K.dim;
    if (out.Kplus.generators.empty()) {
        // K+ = {0}: every scalarization is trivial.
        out.degenerate = true;
        out.B = Polytope::singleton(Vec(m, 0.0)).converted();
        return out;
    }
    out.non_pointed_dual = !cone_lineality(out.Kplus, tol).empty();

    Vec e_used;
    if (e) {
        e_used = *e;
    } else {
        // Chebyshev-style direction: maximize the worst margin over the
        // normalized generators of K+ (an interior point of K, when any).
        LpProblem lp(m + 1);
        for (const Vec& g : out.Kplus.generators) {
            Vec gh = scale(g, 1.0 / std::max(norm2(g), 1e-12));
            Vec row(m + 1, 0.0);
            for (std::size_t i = 0; i < m; ++i) row[i] = -gh[i];
            row[m] = 1.0;
            lp.add_le(row, 0.0);  // <gh, x> >= t
        }
        for (std::size_t i = 0; i < m; ++i) {
            Vec row(m + 1, 0.0);
            row[i] = 1.0;
            lp.add_le(row, 1.0);
            row[i] = -1.0;
            lp.add_le(row, 1.0);
        }
        Vec obj(m + 1, 0.0);
        obj[m] = 1.0;
        LpResult r = lp.maximize(obj);
        if (r.status == LpStatus::Optimal && r.value > 1e-7)
            e_used = Vec(r.x.begin(), r.x.begin() + m);
    }

    if (!e_used.empty()) {
        Polytope slab = kplus_slab(K, m);
        Mat Aeq(0, m);
        Aeq.append_row(e_used);
        try {
            Polytope B = with_rows(slab, Mat(0, m), Vec(), Aeq, Vec{1.0});
            if (!B.is_empty()) {
                out.B = B;
                return out;
            }
        } catch (const UnboundedSetError&) {
            // fall through to the cross-polytope slice
        }
    }
    // Cross-polytope slice: K+ intersected with the l1 ball.
    Mat A(0, m);
    Vec b;
    for (std::size_t mask = 0; mask < (std::size_t(1) << m); ++mask) {
        Vec row(m);
        for (std::size_t i = 0; i < m; ++i) row[i] = (mask >> i) & 1 ? 1.0 : -1.0;
        A.append_row(row);
        b.push_back(1.0);
    }
    Polytope ball = Polytope::from_hrep(A, b);
    const Polytope slab = kplus_slab(K, m);
    const HRep& hs = slab.hrep();
    out.B = with_rows(ball, hs.A, hs.b);
    return out;
}

ConeProblem::ConeProblem(DCPair obj, VectorMap phi, ConeBase b, std::optional<Polytope> q)
    : objective(std::move(obj)), Phi(std::move(phi)), base(std::move(b)), Q() {
    if (q) Q = q->converted();
    if (Phi.out_dim() != base.B.dim()) throw InputError("ConeProblem: dimension mismatch");
    if (!dcpair_domain_ok(objective)) throw InputError("ConeProblem: dom u not inside dom h");
}

bool ConeProblem::feasible(const Vec& x, double tol) const {
    if (!Phi.in_domain(x, tol)) return false;
    if (Q && !contains(*Q, x, tol)) return false;
    Vec phix = Phi.value(x, tol);
    return support(base.B, phix) <= tol;
}

namespace {

detail::EngineSpec make_cone_engine(const ConeProblem& P, const Vec& xbar) {
    detail::EngineSpec spec;
    spec.Phi = &P.Phi;
    spec.u_obj = canonicalize(P.objective.u);
    spec.h = P.objective.h;
    spec.base = P.base.B;
    spec.budget_vec = P.Phi.value(xbar);
    spec.margin_const = 0.0;
    if (P.Q) spec.Qset = *P.Q;
    return spec;
}

// Complementarity face {lam in B : <lam, Phi(xbar)> = 0}.
Polytope cone_face(const ConeProblem& P, const Vec& phix) {
    Mat Aeq(0, P.base.B.dim());
    Aeq.append_row(phix);
    return with_rows(P.base.B, Mat(0, P.base.B.dim()), Vec(), Aeq, Vec{0.0});
}

}  // namespace

Certificate check_cone_global(const ConeProblem& P, const Vec& xbar, const CertOptions& opts) {
    if (P.base.degenerate && !P.Phi.in_domain(xbar))
        throw InfeasiblePointError("check_cone_global: xbar outside dom Phi");
    if (!P.feasible(xbar, opts.tol))
        throw InfeasiblePointError("check_cone_global: xbar infeasible");
    detail::EngineSpec spec = make_cone_engine(P, xbar);

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
    if (P.base.degenerate) cert.notes = "degenerate cone: constraint is vacuous";

    bool any_uncertified = false;
    for (double eta : schedule) {
        InclusionProbe pr = detail::probe_inclusion(spec, xbar, eta, opts);
        if (!pr.certified) any_uncertified = true;
        if (!pr.all_covered) {
            if (pr.certified) {
                cert.verdict = CertVerdict::Fails;
                cert.refuted_eta = eta;
                cert.refuted_xstar = pr.failed_xstar;
                cert.refuted_margin = pr.failed_margin;
            } else {
                cert.verdict = CertVerdict::NotFoundAtResolution;
            }
            return cert;
        }
        for (const auto& w : pr.witnesses)
            if (cert.witnesses.size() < 200) cert.witnesses.push_back(w);
    }
    if (any_uncertified) {
        cert.verdict = CertVerdict::NotFoundAtResolution;
        return cert;
    }
    cert.verdict = CertVerdict::Holds;

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
    return cert;
}

LocalCertificate check_cone_local(const ConeProblem& P, const Vec& xbar, double tol) {
    if (!P.feasible(xbar, tol)) throw InfeasiblePointError("check_cone_local: infeasible");
    auto gh = grad(P.objective.h, xbar);
    if (!gh)
        throw NotDifferentiableError("check_cone_local: control not differentiable at xbar");

    LocalCertificate out;
    const std::size_t m = P.Phi.out_dim();
    Vec phix = P.Phi.value(xbar);
    Polytope face = cone_face(P, phix);
    CanonFunc u_obj = canonicalize(P.objective.u);

    auto stationarity_only = [&]() -> bool {
        std::vector<SubdiffTerm> terms{{u_obj, xbar}};
        MembershipResult r = subdiff_sum_membership(*gh, terms, {}, 0.0, tol);
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
    } else if (augmented_applicable_cone(P.Phi, u_obj)) {
        std::vector<ConvexFunc> us;
        {
            std::vector<ConvexFunc> parts;
            if (u_obj.has_quad) parts.push_back(ConvexFunc::affine(u_obj.q, u_obj.c));
            for (const auto& p : u_obj.polys) parts.push_back(ConvexFunc::max_affine(u_obj.n, p));
            for (const auto& d : u_obj.doms) parts.push_back(ConvexFunc::indicator(d));
            if (parts.empty()) parts.push_back(ConvexFunc::zero(u_obj.n));
            us.push_back(parts.size() == 1 ? parts[0] : ConvexFunc::sum(parts));
        }
        for (std::size_t j = 0; j < m; ++j) us.push_back(P.Phi.component_u(j));
        VectorMap ext(us, P.Phi.control());
        // Face over (alpha1, mu): mu in (1-alpha1)*face.
        const HRep& hb = face.hrep();
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
            b.push_back(0.0);
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
        Polytope facex = Polytope::from_hrep(A, b, Aeq, beq);
        JointFaceResult jr =
            joint_face_min_budget(ext, 1.0, facex, xbar, {}, {}, *gh, Vec(m + 1, 0.0), kTol);
        if (jr.solved && jr.min_cost <= tol) {
            found = true;
            double a1 = jr.lam[0];
            alpha = {a1, 1.0 - a1};
            Vec mu(m);
            for (std::size_t j = 0; j < m; ++j) mu[j] = jr.lam[j + 1];
            lam = (1.0 - a1) > 1e-9 ? scale(mu, 1.0 / (1.0 - a1)) : mu;
        }
    } else if (joint_face_applicable(P.Phi)) {
        auto eval_at = [&](double a1) -> std::pair<double, JointFaceResult> {
            double a2 = 1.0 - a1;
            std::vector<SubdiffTerm> fixed{{scale_canon(u_obj, a1), xbar}};
            Polytope fs = scaled_polytope(face, a2);
            JointFaceResult jr =
                joint_face_min_budget(P.Phi, a2, fs, xbar, fixed, {}, *gh, Vec(m, 0.0), kTol);
            if (!jr.solved || jr.min_cost == kInf) return {kInf, jr};
            return {jr.min_cost, jr};
        };
        double best = kInf, best_a1 = 0;
        JointFaceResult best_jr;
        auto consider = [&](double a1) {
            auto [v, jr] = eval_at(a1);
            if (v < best) {
                best = v;
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
    if (found) {
        out.multipliers_found = true;
        out.alpha = alpha;
        out.lam = lam;
        out.complementarity = alpha[1] * dot(lam, phix);
    }

    // Qualification and conic form over the complementarity face.
    if (face.is_empty()) {
        out.qc_holds = true;
        if (out.multipliers_found) {
            out.cone_form_found = stationarity_only();
            out.cone_eta = 0.0;
            out.cone_lam = Vec(m, 0.0);
        }
        return out;
    }
    auto J = P.Phi.jacobian(xbar);
    if (J) {
        std::vector<Vec> img;
        for (const Vec& lamv : face.vertices()) img.push_back(matvec_t(*J, lamv));
        Polytope image = Polytope::from_vrep(img);
        out.qc_holds = !contains(image, Vec(P.dim(), 0.0), tol);
    } else {
        out.qc_exact = false;
        out.qc_holds = true;
        for (const Vec& lamv : face.vertices())
            if (coderivative_contains(P.Phi, xbar, lamv, Vec(P.dim(), 0.0), tol)) {
                out.qc_holds = false;
                out.qc_exact = true;
                break;
            }
    }
    if (out.qc_holds && out.multipliers_found && J) {
        std::vector<GeneratorSet> gens = subdiff_generators(u_obj, xbar, tol);
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
    }
    return out;
}

ConeLocalQ check_cone_local_withQ(const ConeProblem& P, const Vec& xbar, double tol) {
    if (!P.feasible(xbar, tol))
        throw InfeasiblePointError("check_cone_local_withQ: infeasible");
    auto gh = grad(P.objective.h, xbar);
    if (!gh) throw NotDifferentiableError("check_cone_local_withQ: control nonsmooth");
    auto J = P.Phi.jacobian(xbar);
    if (!J)
        throw NotDifferentiableError("check_cone_local_withQ: map nonsmooth at xbar");
    ConeLocalQ out;
    const std::size_t m = P.Phi.out_dim();
    Vec phix = P.Phi.value(xbar);
    CanonFunc u_obj = canonicalize(P.objective.u);

    // Normal cone generators of Q at xbar.
    std::vector<Vec> qrays;
    if (P.Q) {
        const HRep& h = P.Q->hrep();
        for (std::size_t i = 0; i < h.A.rows(); ++i) {
            Vec a = h.A.row(i);
            if (std::abs(dot(a, xbar) - h.b[i]) <= tol * 100 * std::max(1.0, norm2(a)))
                qrays.push_back(a);
        }
        for (std::size_t i = 0; i < h.Aeq.rows(); ++i) {
            qrays.push_back(h.Aeq.row(i));
            qrays.push_back(scale(h.Aeq.row(i), -1.0));
        }
    }

    // QC: no lam in B with 0 in {J'lam} + N_Q(xbar).
    {
        Polytope B = P.base.B;
        const HRep& hb = B.hrep();
        std::size_t nv = m + qrays.size();
        LpProblem lp(nv);
        for (std::size_t i = 0; i < hb.A.rows(); ++i) {
            Vec row(nv, 0.0);
            Vec a = hb.A.row(i);
            for (std::size_t j = 0; j < m; ++j) row[j] = a[j];
            lp.add_le(row, hb.b[i]);
        }
        for (std::size_t i = 0; i < hb.Aeq.rows(); ++i) {
            Vec row(nv, 0.0);
            Vec a = hb.Aeq.row(i);
            for (std::size_t j = 0; j < m; ++j) row[j] = a[j];
            lp.add_eq(row, hb.beq[i]);
        }
        for (std::size_t r = 0; r < qrays.size(); ++r) {
            Vec row(nv, 0.0);
            row[m + r] = -1.0;
            lp.add_le(row, 0.0);
        }
        for (std::size_t a = 0; a < P.dim(); ++a) {
            Vec row(nv, 0.0);
            for (std::size_t j = 0; j < m; ++j) {
                Vec col = matvec_t(*J, [&] {
                    Vec e(m, 0.0);
                    e[j] = 1.0;
                    return e;
                }());
                row[j] = col[a];
            }
            for (std::size_t r = 0; r < qrays.size(); ++r) row[m + r] = qrays[r][a];
            lp.add_eq(row, 0.0);
        }
        out.qc_holds = lp.feasible_point().status != LpStatus::Optimal;
    }
    if (!out.qc_holds)
        out.notes = "qualification violated; a reported multiplier is not certifying";

    // Multiplier: 0 in subdiff(phi) + J'(t*lam_face) + N_Q(xbar).
    Mat Aeq(0, m);
    Aeq.append_row(phix);
    Polytope face = with_rows(P.base.B, Mat(0, m), Vec(), Aeq, Vec{0.0});
    std::vector<Vec> fverts;
    if (!face.is_empty()) fverts = face.vertices();
    std::vector<GeneratorSet> gens = subdiff_generators(u_obj, xbar, tol);
    std::size_t nv = 0;
    std::vector<std::size_t> starts;
    for (const auto& g : gens) {
        starts.push_back(nv);
        nv += g.points.size() + g.rays.size();
    }
    std::size_t rho0 = nv;
    nv += fverts.size();
    std::size_t w0 = nv;
    nv += qrays.size();
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
        for (std::size_t r = 0; r < qrays.size(); ++r) row[w0 + r] = qrays[r][a];
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
        out.found = true;
        Vec nu(m, 0.0);
        for (std::size_t rr = 0; rr < fverts.size(); ++rr) axpy(nu, r.x[rho0 + rr], fverts[rr]);
        out.lam = nu;
        out.complementarity = dot(nu, phix);
    }
    return out;
}

SufficientCertificate check_cone_sufficient(const ConeProblem& P, const Vec& xbar,
                                            std::vector<double> eta_small_schedule,
                                            const CertOptions& opts) {
    if (!P.feasible(xbar, opts.tol))
        throw InfeasiblePointError("check_cone_sufficient: infeasible");
    SufficientCertificate out;
    if (eta_small_schedule.empty()) eta_small_schedule = {0.0, 1e-4, 1e-3, 1e-2};
    out.schedule = eta_small_schedule;

    detail::EngineSpec spec = make_cone_engine(P, xbar);
    out.inclusion_ok = true;
    for (double eta : eta_small_schedule) {
        InclusionProbe pr = detail::probe_inclusion(spec, xbar, eta, opts);
        if (!pr.all_covered) {
            out.inclusion_ok = false;
            break;
        }
    }

    Vec phix = P.Phi.value(xbar);
    Polytope face = cone_face(P, phix);
    auto gh = grad(P.objective.h, xbar);
    if (face.is_empty()) {
        out.qualification_ok = true;
    } else if (gh) {
        auto J = P.Phi.jacobian(xbar);
        if (J) {
            std::vector<Vec> img;
            for (const Vec& lamv : face.vertices()) img.push_back(matvec_t(*J, lamv));
            out.qualification_ok = !contains(Polytope::from_vrep(img), Vec(P.dim(), 0.0), opts.tol);
        } else {
            out.qualification_ok = true;
            for (const Vec& lamv : face.vertices())
                if (coderivative_contains(P.Phi, xbar, lamv, Vec(P.dim(), 0.0), opts.tol)) {
                    out.qualification_ok = false;
                    break;
                }
            out.notes += "qualification checked at face vertices only; ";
        }
    } else {
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
            out.qualification_ok = !(jr.solved && jr.min_cost <= opts.tol);
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
