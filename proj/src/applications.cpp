#include "dccert/applications.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "dccert/simplex.hpp"

namespace dccert {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

SipResult sip_check_local(const SipProblem& S, const Vec& xbar, double active_tol, double tol) {
    SipResult out;
    const std::size_t n = S.dim();
    if (S.constraint_funcs.empty()) throw InputError("sip_check_local: empty index set");

    // Feasibility and the numerical active set.
    std::vector<std::size_t> active;
    for (std::size_t t = 0; t < S.constraint_funcs.size(); ++t) {
        double v = dc_eval(S.constraint_funcs[t], xbar);
        if (v > tol) throw InfeasiblePointError("sip_check_local: xbar infeasible");
        if (std::abs(v) <= active_tol) active.push_back(t);
    }

    // Gradients of the active constraints and the objective pieces.
    std::vector<Vec> grads;
    for (std::size_t t : active) {
        auto gu = grad(S.constraint_funcs[t].u, xbar);
        auto gh = grad(S.constraint_funcs[t].h, xbar);
        if (!gu || !gh)
            throw NotDifferentiableError("sip_check_local: constraint nonsmooth at xbar");
        grads.push_back(sub(*gu, *gh));
    }
    auto gh_obj = grad(S.objective.h, xbar);
    if (!gh_obj) throw NotDifferentiableError("sip_check_local: control nonsmooth at xbar");
    CanonFunc u_obj = canonicalize(S.objective.u);

    // Uniform Lipschitz estimate around xbar (reported, not asserted).
    {
        std::mt19937_64 rng(17);
        std::normal_distribution<double> N;
        double lip = 0;
        for (int s = 0; s < 64; ++s) {
            Vec d(n);
            for (auto& v : d) v = N(rng);
            double nd = norm2(d);
            if (nd < 1e-12) continue;
            d = scale(d, 0.05 / nd);
            Vec y = add(xbar, d);
            for (const auto& f : S.constraint_funcs) {
                double fy = dc_eval(f, y), fx = dc_eval(f, xbar);
                if (fy == kInf || fx == kInf) continue;
                lip = std::max(lip, std::abs(fy - fx) / 0.05);
            }
        }
        out.lipschitz_estimate = lip;
    }

    // Qualification analogue: no probability vector on the active set with
    // sum nu_t grad_t = 0.
    if (!active.empty()) {
        LpProblem lp(active.size());
        for (std::size_t a = 0; a < n; ++a) {
            Vec row(active.size());
            for (std::size_t t = 0; t < active.size(); ++t) row[t] = grads[t][a];
            lp.add_eq(row, 0.0);
        }
        lp.add_eq(Vec(active.size(), 1.0), 1.0);
        for (std::size_t t = 0; t < active.size(); ++t) {
            Vec row(active.size(), 0.0);
            row[t] = -1.0;
            lp.add_le(row, 0.0);
        }
        out.qc_holds = lp.feasible_point().status != LpStatus::Optimal;
    } else {
        out.qc_holds = true;
    }
    if (!out.qc_holds) {
        out.notes = "qualification violated; checker abstains";
        return out;
    }

    // Multiplier LP: -sum mu_t grad_t in regular subdiff of phi
    //   = partial u_obj(xbar) - grad h(xbar).
    std::vector<GeneratorSet> gens = subdiff_generators(u_obj, xbar, tol);
    std::size_t nv = active.size();
    std::vector<std::size_t> starts;
    for (const auto& g : gens) {
        starts.push_back(nv);
        nv += g.points.size() + g.rays.size();
    }
    LpProblem lp(nv);
    for (std::size_t a = 0; a < n; ++a) {
        Vec row(nv, 0.0);
        for (std::size_t t = 0; t < active.size(); ++t) row[t] = grads[t][a];
        for (std::size_t gi = 0; gi < gens.size(); ++gi) {
            std::size_t s = starts[gi];
            for (std::size_t k = 0; k < gens[gi].points.size(); ++k)
                row[s + k] = gens[gi].points[k][a];
            for (std::size_t k = 0; k < gens[gi].rays.size(); ++k)
                row[s + gens[gi].points.size() + k] = gens[gi].rays[k][a];
        }
        lp.add_eq(row, (*gh_obj)[a]);
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
    if (r.status != LpStatus::Optimal) return out;  // no multiplier: not certified
    out.found = true;
    double compl_res = 0;
    for (std::size_t t = 0; t < active.size(); ++t) {
        if (r.x[t] > 1e-12) out.mu.weights.push_back({active[t], r.x[t]});
        compl_res += r.x[t] * dc_eval(S.constraint_funcs[active[t]], xbar);
    }
    out.complementarity = compl_res;
    return out;
}

bool expected_subdiff_contains(const std::vector<std::pair<double, DCPair>>& terms,
                               const Vec& xbar, const Vec& xstar, double tol) {
    if (terms.empty()) throw InputError("expected_subdiff_contains: no terms");
    const std::size_t n = xbar.size();
    double total = 0;
    std::vector<SubdiffTerm> sterms;
    std::vector<Polytope> doms;
    Vec shift(n, 0.0);
    for (const auto& [w, f] : terms) {
        if (w < 0) throw InputError("expected_subdiff_contains: negative weight");
        double val = dc_eval(f, xbar);
        if (val == kInf) throw InfiniteValueError("expected_subdiff_contains: improper sum");
        total += w * val;
        auto gh = grad(f.h, xbar);
        if (!gh)
            throw NotDifferentiableError("expected_subdiff_contains: control nonsmooth at xbar");
        // w * regular subdiff phi_w = w(partial u_w - grad h_w)
        //   = partial_0(w u_w) - w grad h_w.
        CanonFunc cu = canonicalize(f.u);
        for (const auto& d : cu.doms) doms.push_back(d);
        sterms.push_back({scale_canon(cu, w), xbar});
        axpy(shift, w, *gh);
    }
    std::vector<NormalTerm> normals;
    for (const auto& d : doms) normals.push_back({d, xbar});
    MembershipResult r =
        subdiff_sum_membership(add(xstar, shift), sterms, normals, 0.0, tol);
    return r.decided && r.member;
}

SymMatrix SymMatrix::from(const Mat& A) {
    if (A.rows() != A.cols()) throw InputError("SymMatrix: not square");
    SymMatrix s;
    s.entries = Mat(A.rows(), A.cols());
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < A.cols(); ++j)
            s.entries(i, j) = 0.5 * (A(i, j) + A(j, i));
    return s;
}

EigSym sym_eig(const SymMatrix& A) {
    if (A.p() > 64) throw InputError("sym_eig: p > 64");
    try {
        return eig_sym(A.entries);
    } catch (const std::runtime_error&) {
        throw NumericFailureError("sym_eig: no convergence");
    }
}

MatrixMap::MatrixMap(std::size_t p_, std::vector<std::vector<DCPair>> entries, ConvexFunc h)
    : p(p_), entry_funcs(std::move(entries)), control(std::move(h)) {
    if (entry_funcs.size() != p) throw InputError("MatrixMap: row count mismatch");
    for (const auto& row : entry_funcs)
        if (row.size() != p) throw InputError("MatrixMap: column count mismatch");
}

SymMatrix MatrixMap::value(const Vec& x, double tol) const {
    Mat A(p, p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i; j < p; ++j) {
            double v = dc_eval(entry_funcs[i][j], x, tol);
            if (v == kInf) throw InfiniteValueError("MatrixMap: x outside domain");
            A(i, j) = A(j, i) = v;
        }
    return SymMatrix::from(A);
}

std::optional<Vec> MatrixMap::quad_form_grad(const Vec& x, const Vec& v) const {
    Vec g(dim(), 0.0);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            double w = v[i] * v[j];
            if (std::abs(w) < 1e-15) continue;
            auto gu = grad(entry_funcs[i][j].u, x);
            auto gh = grad(entry_funcs[i][j].h, x);
            if (!gu || !gh) return std::nullopt;
            for (std::size_t a = 0; a < g.size(); ++a) g[a] += w * ((*gu)[a] - (*gh)[a]);
        }
    return g;
}

double MatrixMap::validate(const std::vector<Vec>& grid, std::size_t sphere_samples,
                           unsigned seed) const {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N;
    double worst = 0;
    for (std::size_t s = 0; s < sphere_samples; ++s) {
        Vec v(p);
        for (auto& a : v) a = N(rng);
        double nv = norm2(v);
        if (nv < 1e-12) continue;
        v = scale(v, 1.0 / nv);
        auto qform = [&](const Vec& x) -> double {
            double hx = eval(control, x);
            if (hx == kInf) return kInf;
            double acc = hx;
            for (std::size_t i = 0; i < p; ++i)
                for (std::size_t j = 0; j < p; ++j) {
                    double val = dc_eval(entry_funcs[i][j], x);
                    if (val == kInf) return kInf;
                    acc += v[i] * v[j] * val;
                }
            return acc;
        };
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double fi = qform(grid[i]);
            if (fi == kInf) continue;
            for (std::size_t j = i + 1; j < grid.size(); ++j) {
                double fj = qform(grid[j]);
                if (fj == kInf) continue;
                double fm = qform(scale(add(grid[i], grid[j]), 0.5));
                if (fm == kInf) continue;
                worst = std::max(worst, fm - 0.5 * (fi + fj));
            }
        }
    }
    return worst;
}

EigenFuncs eigen_value_funcs(const MatrixMap& M, const Vec& x, std::size_t k) {
    if (k == 0 || k > M.p) throw InputError("eigen_value_funcs: bad k");
    SymMatrix A = M.value(x);
    EigSym es = sym_eig(A);
    EigenFuncs out;
    out.lambda_k = es.values[k - 1];
    out.Lambda_k = 0;
    for (std::size_t i = 0; i < k; ++i) out.Lambda_k += es.values[i];
    return out;
}

double scalarization_equiv_check(const MatrixMap& M, const Vec& x, std::size_t sphere_grid,
                                 unsigned seed) {
    SymMatrix A = M.value(x);
    double hx = eval(M.control, x);
    EigSym es = sym_eig(A);
    double lhs = es.values[0] + hx;

    // Sphere sampling with power-iteration ascent (shifted to PSD).
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N;
    const std::size_t p = M.p;
    double shift = 0;
    for (std::size_t i = 0; i < p; ++i) {
        double rowsum = 0;
        for (std::size_t j = 0; j < p; ++j) rowsum += std::abs(A.entries(i, j));
        shift = std::max(shift, rowsum);
    }
    double best = -kInf;
    for (std::size_t s = 0; s < sphere_grid; ++s) {
        Vec v(p);
        for (auto& a : v) a = N(rng);
        double nv = norm2(v);
        if (nv < 1e-12) continue;
        v = scale(v, 1.0 / nv);
        // Local ascent: v <- normalize((A + shift I) v).
        for (int it = 0; it < 200; ++it) {
            Vec w = matvec(A.entries, v);
            axpy(w, shift, v);
            double nw = norm2(w);
            if (nw < 1e-14) break;
            w = scale(w, 1.0 / nw);
            if (norm2(sub(w, v)) < 1e-14) { v = w; break; }
            v = w;
        }
        Vec Av = matvec(A.entries, v);
        best = std::max(best, dot(v, Av));
    }
    double rhs = best + hx;
    return std::abs(lhs - rhs);
}

SdpResult sdp_check_local(const MatrixMap& M, const DCPair& phi, const Polytope& Q,
                          const Vec& xbar, double tol, std::size_t rotation_grid) {
    SdpResult out;
    const std::size_t n = xbar.size();
    const std::size_t p = M.p;

    SymMatrix Phix = M.value(xbar);
    EigSym es = sym_eig(Phix);
    if (es.values[0] > tol) throw InfeasiblePointError("sdp_check_local: xbar infeasible");

    auto gh = grad(phi.h, xbar);
    if (!gh) throw NotDifferentiableError("sdp_check_local: control nonsmooth at xbar");
    CanonFunc u_obj = canonicalize(phi.u);

    // Kernel basis of Phi(xbar).
    std::vector<Vec> kernel;
    for (std::size_t i = 0; i < p; ++i) {
        if (std::abs(es.values[i]) <= 1e3 * tol) {
            Vec v(p);
            for (std::size_t r = 0; r < p; ++r) v[r] = es.vectors(r, i);
            kernel.push_back(v);
        }
    }
    Polytope Qc = Q.converted();
    std::vector<Vec> qrays;
    {
        const HRep& h = Qc.hrep();
        for (std::size_t i = 0; i < h.A.rows(); ++i) {
            Vec a = h.A.row(i);
            if (std::abs(dot(a, xbar) - h.b[i]) <= tol * 100 * std::max(1.0, norm2(a)))
                qrays.push_back(a);
        }
        for (std::size_t i = 0; i < h.Aeq.rows(); ++i) {
            qrays.push_back(h.Aeq.row(i));
            qrays.push_back(scale(h.Aeq.row(i), -1.0));
        }
        if (!contains(Qc, xbar, tol)) throw InfeasiblePointError("sdp_check_local: x outside Q");
    }

    if (kernel.empty()) {
        // Interior of the spectrahedron: zero multiplier, plain stationarity.
        std::vector<GeneratorSet> gens = subdiff_generators(u_obj, xbar, tol);
        GeneratorSet qg;
        qg.points.push_back(Vec(n, 0.0));
        qg.rays = qrays;
        gens.push_back(qg);
        std::size_t nv = 0;
        std::vector<std::size_t> starts;
        for (const auto& g : gens) {
            starts.push_back(nv);
            nv += g.points.size() + g.rays.size();
        }
        LpProblem lp(nv);
        for (std::size_t a = 0; a < n; ++a) {
            Vec row(nv, 0.0);
            for (std::size_t gi = 0; gi < gens.size(); ++gi) {
                std::size_t s = starts[gi];
                for (std::size_t k = 0; k < gens[gi].points.size(); ++k)
                    row[s + k] = gens[gi].points[k][a];
                for (std::size_t k = 0; k < gens[gi].rays.size(); ++k)
                    row[s + gens[gi].points.size() + k] = gens[gi].rays[k][a];
            }
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
        if (lp.feasible_point().status == LpStatus::Optimal) {
            out.found = true;
            out.A.entries = Mat(p, p);
            out.complementarity = 0;
            out.qc_holds = true;  // the zero-eigenspace union is empty
            out.notes = "interior point: zero-weight multiplier";
        }
        return out;
    }

    // Rotation grid over the kernel basis when it is 2-or-more dimensional.
    std::vector<std::vector<Vec>> bases;
    bases.push_back(kernel);
    if (kernel.size() >= 2) {
        for (std::size_t g = 1; g < rotation_grid; ++g) {
            double ang = 3.14159265358979323846 * double(g) / double(rotation_grid);
            std::vector<Vec> rot = kernel;
            for (std::size_t i = 0; i + 1 < kernel.size(); i += 2) {
                double c = std::cos(ang), s = std::sin(ang);
                for (std::size_t r = 0; r < p; ++r) {
                    rot[i][r] = c * kernel[i][r] + s * kernel[i + 1][r];
                    rot[i + 1][r] = -s * kernel[i][r] + c * kernel[i + 1][r];
                }
            }
            bases.push_back(rot);
        }
    }

    bool qc_violated_somewhere = false;
    for (const auto& basis : bases) {
        const std::size_t r = basis.size();
        // Directional derivatives d_i = grad of x -> v_i' Phi(x) v_i.
        std::vector<Vec> dirs;
        bool smooth = true;
        for (const Vec& v : basis) {
            auto d = M.quad_form_grad(xbar, v);
            if (!d) { smooth = false; break; }
            dirs.push_back(*d);
        }
        if (!smooth)
            throw NotDifferentiableError("sdp_check_local: entries nonsmooth at xbar");

        // QC on this parametrization: no rho in Delta_r with
        // 0 in sum rho_i d_i + N_Q(xbar).
        {
            LpProblem lp(r + qrays.size());
            for (std::size_t a = 0; a < n; ++a) {
                Vec row(r + qrays.size(), 0.0);
                for (std::size_t i = 0; i < r; ++i) row[i] = dirs[i][a];
                for (std::size_t k = 0; k < qrays.size(); ++k) row[r + k] = qrays[k][a];
                lp.add_eq(row, 0.0);
            }
            {
                Vec row(r + qrays.size(), 0.0);
                for (std::size_t i = 0; i < r; ++i) row[i] = 1.0;
                lp.add_eq(row, 1.0);
            }
            for (std::size_t i = 0; i < r + qrays.size(); ++i) {
                Vec row(r + qrays.size(), 0.0);
                row[i] = -1.0;
                lp.add_le(row, 0.0);
            }
            if (lp.feasible_point().status == LpStatus::Optimal) {
                qc_violated_somewhere = true;
                continue;
            }
        }

        // Multiplier LP: grad h in partial u_obj + sum rho_i d_i + N_Q rays,
        // rho >= 0 free scale (the trace-1 multiplier is the normalized
        // kernel matrix; the inclusion itself fixes only the direction).
        std::vector<GeneratorSet> gens = subdiff_generators(u_obj, xbar, tol);
        std::size_t nv = r + qrays.size();
        std::vector<std::size_t> starts;
        for (const auto& g : gens) {
            starts.push_back(nv);
            nv += g.points.size() + g.rays.size();
        }
        LpProblem lp(nv);
        for (std::size_t a = 0; a < n; ++a) {
            Vec row(nv, 0.0);
            for (std::size_t i = 0; i < r; ++i) row[i] = dirs[i][a];
            for (std::size_t k = 0; k < qrays.size(); ++k) row[r + k] = qrays[k][a];
            for (std::size_t gi = 0; gi < gens.size(); ++gi) {
                std::size_t s = starts[gi];
                for (std::size_t k = 0; k < gens[gi].points.size(); ++k)
                    row[s + k] = gens[gi].points[k][a];
                for (std::size_t k = 0; k < gens[gi].rays.size(); ++k)
                    row[s + gens[gi].points.size() + k] = gens[gi].rays[k][a];
            }
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
        LpResult lr = lp.feasible_point();
        if (lr.status == LpStatus::Optimal) {
            out.found = true;
            out.qc_holds = true;
            double total = 0;
            for (std::size_t i = 0; i < r; ++i) total += lr.x[i];
            Mat A(p, p);
            double compl_res = 0;
            if (total > 1e-12) {
                for (std::size_t i = 0; i < r; ++i) {
                    double rho = lr.x[i] / total;  // normalize to trace 1
                    for (std::size_t a = 0; a < p; ++a)
                        for (std::size_t b = 0; b < p; ++b)
                            A(a, b) += rho * basis[i][a] * basis[i][b];
                    Vec Av = matvec(Phix.entries, basis[i]);
                    compl_res += rho * std::abs(dot(basis[i], Av));
                }
                out.scale = total;
            } else {
                // Zero-weight certificate: any trace-1 kernel matrix works.
                for (std::size_t a = 0; a < p; ++a)
                    for (std::size_t b = 0; b < p; ++b)
                        A(a, b) = basis[0][a] * basis[0][b];
                Vec Av = matvec(Phix.entries, basis[0]);
                compl_res = std::abs(dot(basis[0], Av));
                out.scale = 0;
            }
            out.A = SymMatrix::from(A);
            out.complementarity = compl_res;
            return out;
        }
    }
    if (qc_violated_somewhere) {
        out.qc_holds = false;
        out.notes = "qualification violated on the kernel parametrization; checker abstains";
    } else {
        out.qc_holds = true;
        out.notes = "no trace-1 PSD multiplier on the kernel parametrization";
    }
    return out;
}

}  // namespace dccert
