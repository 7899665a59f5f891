#include "dccert/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dccert/simplex.hpp"

namespace dccert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Visits all k-subsets of {0..m-1}; callback returns false to abort.
template <typename F>
void for_each_subset(std::size_t m, std::size_t k, F&& fn) {
    if (k > m) return;
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        if (!fn(idx)) return;
        std::size_t i = k;
        while (i-- > 0) {
            if (idx[i] != i + m - k) {
                ++idx[i];
                for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
                break;
            }
            if (i == 0) return;
        }
    }
}

double binom(std::size_t m, std::size_t k) {
    double r = 1.0;
    for (std::size_t i = 0; i < k; ++i) r = r * double(m - i) / double(i + 1);
    return r;
}

LpProblem hrep_lp(const HRep& h, std::size_t n) {
    LpProblem lp(n);
    for (std::size_t i = 0; i < h.A.rows(); ++i) lp.add_le(h.A.row(i), h.b[i]);
    for (std::size_t i = 0; i < h.Aeq.rows(); ++i) lp.add_eq(h.Aeq.row(i), h.beq[i]);
    return lp;
}

bool near(const Vec& a, const Vec& b, double tol) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > tol) return false;
    return true;
}

void dedupe_points(std::vector<Vec>& pts, double tol) {
    std::vector<Vec> out;
    for (const Vec& p : pts) {
        bool dup = false;
        for (const Vec& q : out)
            if (near(p, q, tol)) { dup = true; break; }
        if (!dup) out.push_back(p);
    }
    pts.swap(out);
}

// Is p in conv(pts \ {p})? Distance-LP in the weights.
bool in_hull_of_others(const std::vector<Vec>& pts, std::size_t skip, const Vec& p, double tol) {
    const std::size_t n = p.size();
    std::vector<std::size_t> others;
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (i != skip) others.push_back(i);
    if (others.empty()) return false;
    const std::size_t k = others.size();
    // vars: weights (k), t ; minimize t with |sum w v - p|_inf <= t.
    LpProblem lp(k + 1);
    for (std::size_t j = 0; j < n; ++j) {
        Vec row(k + 1, 0.0), row2(k + 1, 0.0);
        for (std::size_t a = 0; a < k; ++a) {
            row[a] = pts[others[a]][j];
            row2[a] = -pts[others[a]][j];
        }
        row[k] = -1.0;
        row2[k] = -1.0;
        lp.add_le(row, p[j]);
        lp.add_le(row2, -p[j]);
    }
    {
        Vec ones(k + 1, 1.0);
        ones[k] = 0.0;
        lp.add_eq(ones, 1.0);
        for (std::size_t a = 0; a < k; ++a) {
            Vec e(k + 1, 0.0);
            e[a] = -1.0;
            lp.add_le(e, 0.0);
        }
    }
    Vec cost(k + 1, 0.0);
    cost[k] = 1.0;
    LpResult r = lp.minimize(cost);
    return r.status == LpStatus::Optimal && r.value <= tol;
}

std::vector<Vec> extreme_points(std::vector<Vec> pts, double tol) {
    dedupe_points(pts, tol);
    std::vector<Vec> out;
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (!in_hull_of_others(pts, i, pts[i], tol)) out.push_back(pts[i]);
    return out;
}

// Vertex enumeration of {y : A y <= b} assumed full-dimensional-ish and
// bounded in R^d. Every basic feasible solution is a vertex.
std::vector<Vec> enumerate_bfs(const Mat& A, const Vec& b, double tol) {
    const std::size_t m = A.rows(), d = A.cols();
    std::vector<Vec> verts;
    if (d == 0) return verts;
    if (binom(m, d) > 6e6)
        throw NumericFailureError("vertex enumeration: too many row combinations");
    std::vector<double> row_scale(m);
    for (std::size_t i = 0; i < m; ++i) row_scale[i] = std::max(1.0, norm2(A.row(i)));
    for_each_subset(m, d, [&](const std::vector<std::size_t>& idx) {
        Mat S(d, d);
        Vec rhs(d);
        for (std::size_t r = 0; r < d; ++r) {
            for (std::size_t c = 0; c < d; ++c) S(r, c) = A(idx[r], c);
            rhs[r] = b[idx[r]];
        }
        Vec y;
        if (solve_linear(S, rhs, y, 1e-10)) {
            bool feas = true;
            for (std::size_t i = 0; i < m && feas; ++i)
                if (dot(A.row(i), y) > b[i] + tol * 100 * row_scale[i]) feas = false;
            if (feas) verts.push_back(y);
        }
        return true;
    });
    dedupe_points(verts, std::max(tol * 100, 1e-7));
    return verts;
}

struct AffineHull {
    Vec x0;
    std::vector<Vec> basis;  // orthonormal tangent directions
};

Vec to_local(const AffineHull& hull, const Vec& x) {
    Vec y(hull.basis.size());
    Vec dx = sub(x, hull.x0);
    for (std::size_t k = 0; k < hull.basis.size(); ++k) y[k] = dot(hull.basis[k], dx);
    return y;
}

Vec to_global(const AffineHull& hull, const Vec& y) {
    Vec x = hull.x0;
    for (std::size_t k = 0; k < hull.basis.size(); ++k) axpy(x, y[k], hull.basis[k]);
    return x;
}

// Facet enumeration for full-dimensional vertex sets in R^d.
void facets_full_dim(const std::vector<Vec>& ys, Mat& A, Vec& b, double tol) {
    const std::size_t d = ys.empty() ? 0 : ys[0].size();
    const std::size_t nv = ys.size();
    if (d == 0) return;
    if (d == 1) {
        double lo = kInf, hi = -kInf;
        for (const Vec& y : ys) { lo = std::min(lo, y[0]); hi = std::max(hi, y[0]); }
        A.append_row({1.0});
        b.push_back(hi);
        A.append_row({-1.0});
        b.push_back(-lo);
        return;
    }
    if (binom(nv, d) > 6e6) throw NumericFailureError("facet enumeration: too many combinations");

    std::vector<Vec> rows;
    Vec offs;
    for_each_subset(nv, d, [&](const std::vector<std::size_t>& idx) {
        Mat D(d - 1, d);
        for (std::size_t r = 0; r + 1 < d; ++r)
            for (std::size_t c = 0; c < d; ++c) D(r, c) = ys[idx[r + 1]][c] - ys[idx[0]][c];
        std::vector<Vec> ns = null_space_basis(D, 1e-9);
        if (ns.size() != 1) return true;  // affinely dependent points
        Vec c = ns[0];
        double beta = dot(c, ys[idx[0]]);
        bool all_le = true, all_ge = true;
        for (const Vec& y : ys) {
            double v = dot(c, y);
            if (v > beta + tol * 100) all_le = false;
            if (v < beta - tol * 100) all_ge = false;
        }
        if (all_le || all_ge) {
            Vec row = all_le ? c : scale(c, -1.0);
            double off = all_le ? beta : -beta;
            bool dup = false;
            for (std::size_t q = 0; q < rows.size(); ++q)
                if (near(rows[q], row, 1e-7) && std::abs(offs[q] - off) < 1e-7) { dup = true; break; }
            if (!dup) {
                // Keep genuine facets: the touching set must span d-1 dims.
                std::vector<Vec> touch;
                for (const Vec& y : ys)
                    if (std::abs(dot(row, y) - off) <= tol * 1000) touch.push_back(y);
                if (!touch.empty()) {
                    std::vector<Vec> diffs;
                    for (std::size_t q = 1; q < touch.size(); ++q)
                        diffs.push_back(sub(touch[q], touch[0]));
                    if (orthonormal_span(diffs, 1e-8).size() + 1 >= d) {
                        rows.push_back(row);
                        offs.push_back(off);
                    }
                }
            }
        }
        return true;
    });
    for (std::size_t q = 0; q < rows.size(); ++q) {
        A.append_row(rows[q]);
        b.push_back(offs[q]);
    }
}

}  // namespace

Polytope Polytope::from_hrep(const Mat& A, const Vec& b, const Mat& Aeq, const Vec& beq) {
    Polytope p;
    p.n_ = A.cols() ? A.cols() : Aeq.cols();
    p.h_ = HRep{A, b, Aeq, beq};
    if (p.h_->Aeq.rows() == 0) p.h_->Aeq = Mat(0, p.n_);
    if (p.h_->A.rows() == 0) p.h_->A = Mat(0, p.n_);
    return p;
}

Polytope Polytope::from_vrep(const std::vector<Vec>& vertices, double tol) {
    Polytope p;
    if (vertices.empty()) return empty_set(0);
    p.n_ = vertices[0].size();
    p.v_ = extreme_points(vertices, tol);
    return p;
}

Polytope Polytope::box(const Vec& lo, const Vec& hi) {
    const std::size_t n = lo.size();
    Mat A(0, n);
    Vec b;
    for (std::size_t j = 0; j < n; ++j) {
        Vec e(n, 0.0);
        e[j] = 1.0;
        A.append_row(e);
        b.push_back(hi[j]);
        e[j] = -1.0;
        A.append_row(e);
        b.push_back(-lo[j]);
    }
    return from_hrep(A, b);
}

Polytope Polytope::simplex(std::size_t k) {
    Mat A(0, k);
    Vec b;
    for (std::size_t j = 0; j < k; ++j) {
        Vec e(k, 0.0);
        e[j] = -1.0;
        A.append_row(e);
        b.push_back(0.0);
    }
    Mat Aeq(0, k);
    Aeq.append_row(Vec(k, 1.0));
    return from_hrep(A, b, Aeq, {1.0});
}

Polytope Polytope::empty_set(std::size_t dim) {
    Polytope p;
    p.n_ = dim;
    p.empty_ = true;
    return p;
}

const HRep& Polytope::hrep() const {
    if (!h_) throw InputError("polytope: H-representation not populated");
    return *h_;
}

const std::vector<Vec>& Polytope::vertices() const {
    if (!v_) throw InputError("polytope: V-representation not populated");
    return *v_;
}

Polytope Polytope::converted(double tol) const {
    if (empty_) return *this;
    Polytope out = *this;

    if (!out.v_) {
        // H -> V. Feasibility, implicit equalities, affine hull, enumerate.
        HRep h = *out.h_;
        LpResult feas = hrep_lp(h, n_).feasible_point();
        if (feas.status != LpStatus::Optimal) {
            out.empty_ = true;
            return out;
        }
        // Detect inequality rows that hold with equality everywhere.
        Mat A2(0, n_), Aeq2 = h.Aeq;
        Vec b2, beq2 = h.beq;
        for (std::size_t i = 0; i < h.A.rows(); ++i) {
            Vec a = h.A.row(i);
            LpResult mn = hrep_lp(h, n_).minimize(a);
            if (mn.status == LpStatus::Optimal && h.b[i] - mn.value < tol * std::max(1.0, norm2(a))) {
                Aeq2.append_row(a);
                beq2.push_back(h.b[i]);
            } else {
                A2.append_row(a);
                b2.push_back(h.b[i]);
            }
        }
        AffineHull hull;
        hull.x0 = feas.x;
        std::vector<Vec> eq_rows;
        for (std::size_t i = 0; i < Aeq2.rows(); ++i) eq_rows.push_back(Aeq2.row(i));
        Mat eqmat(0, n_);
        for (const Vec& r : eq_rows) eqmat.append_row(r);
        hull.basis = null_space_basis(eqmat);

        if (hull.basis.empty()) {
            out.v_ = std::vector<Vec>{hull.x0};
        } else {
            const std::size_t d = hull.basis.size();
            Mat Ared(0, d);
            Vec bred;
            for (std::size_t i = 0; i < A2.rows(); ++i) {
                Vec a = A2.row(i);
                Vec ar(d);
                for (std::size_t k = 0; k < d; ++k) ar[k] = dot(a, hull.basis[k]);
                if (norm2(ar) < 1e-12 * std::max(1.0, norm2(a))) continue;
                Ared.append_row(ar);
                bred.push_back(b2[i] - dot(a, hull.x0));
            }
            // Boundedness of the reduced body.
            for (std::size_t k = 0; k < d; ++k) {
                for (double sgn : {1.0, -1.0}) {
                    LpProblem lp(d);
                    for (std::size_t i = 0; i < Ared.rows(); ++i) lp.add_le(Ared.row(i), bred[i]);
                    Vec c(d, 0.0);
                    c[k] = sgn;
                    if (lp.maximize(c).status == LpStatus::Unbounded)
                        throw UnboundedSetError("polytope H-rep is unbounded");
                }
            }
            std::vector<Vec> ys = enumerate_bfs(Ared, bred, tol);
            std::vector<Vec> xs;
            for (const Vec& y : ys) xs.push_back(to_global(hull, y));
            xs = extreme_points(xs, std::max(tol * 10, 1e-8));
            if (xs.empty()) throw NumericFailureError("vertex enumeration found no vertices");
            out.v_ = xs;
        }
    }

    if (!out.h_) {
        // V -> H via affine hull + facet enumeration.
        const std::vector<Vec>& vs = *out.v_;
        AffineHull hull;
        hull.x0 = vs[0];
        std::vector<Vec> diffs;
        for (std::size_t i = 1; i < vs.size(); ++i) diffs.push_back(sub(vs[i], vs[0]));
        hull.basis = orthonormal_span(diffs, 1e-10);
        const std::size_t d = hull.basis.size();

        Mat Aeq(0, n_);
        Vec beq;
        {
            Mat span_rows(0, n_);
            for (const Vec& t : hull.basis) span_rows.append_row(t);
            for (const Vec& c : null_space_basis(span_rows)) {
                Aeq.append_row(c);
                beq.push_back(dot(c, hull.x0));
            }
        }
        Mat A(0, n_);
        Vec b;
        if (d > 0) {
            std::vector<Vec> ys;
            for (const Vec& v : vs) ys.push_back(to_local(hull, v));
            Mat Ald(0, d);
            Vec bld;
            facets_full_dim(ys, Ald, bld, tol);
            for (std::size_t i = 0; i < Ald.rows(); ++i) {
                Vec c = Ald.row(i);
                Vec cx(n_, 0.0);
                for (std::size_t k = 0; k < d; ++k) axpy(cx, c[k], hull.basis[k]);
                A.append_row(cx);
                b.push_back(bld[i] + dot(cx, hull.x0));
            }
        }
        out.h_ = HRep{A, b, Aeq, beq};
    }
    return out;
}

double support(const Polytope& P, const Vec& d) {
    if (P.is_empty()) return -kInf;
    if (P.has_vrep()) {
        double best = -kInf;
        for (const Vec& v : P.vertices()) best = std::max(best, dot(d, v));
        return best;
    }
    LpResult r = hrep_lp(P.hrep(), P.dim()).maximize(d);
    if (r.status == LpStatus::Infeasible) return -kInf;
    if (r.status == LpStatus::Unbounded) throw UnboundedSetError("support: unbounded");
    return r.value;
}

Vec support_argmax(const Polytope& P, const Vec& d) {
    if (P.is_empty()) throw EmptySetError();
    if (P.has_vrep()) {
        const auto& vs = P.vertices();
        std::size_t best = 0;
        for (std::size_t i = 1; i < vs.size(); ++i)
            if (dot(d, vs[i]) > dot(d, vs[best])) best = i;
        return vs[best];
    }
    LpResult r = hrep_lp(P.hrep(), P.dim()).maximize(d);
    if (r.status != LpStatus::Optimal) throw UnboundedSetError("support_argmax");
    return r.x;
}

bool contains(const Polytope& P, const Vec& x, double tol) {
    if (P.is_empty()) return false;
    if (P.has_hrep()) {
        const HRep& h = P.hrep();
        for (std::size_t i = 0; i < h.A.rows(); ++i) {
            Vec a = h.A.row(i);
            if (dot(a, x) > h.b[i] + tol * std::max(1.0, norm2(a))) return false;
        }
        for (std::size_t i = 0; i < h.Aeq.rows(); ++i) {
            Vec a = h.Aeq.row(i);
            if (std::abs(dot(a, x) - h.beq[i]) > tol * std::max(1.0, norm2(a))) return false;
        }
        return true;
    }
    // Hull-membership LP on the vertices.
    const auto& vs = P.vertices();
    const std::size_t k = vs.size(), n = P.dim();
    LpProblem lp(k + 1);
    for (std::size_t j = 0; j < n; ++j) {
        Vec row(k + 1, 0.0), row2(k + 1, 0.0);
        for (std::size_t a = 0; a < k; ++a) {
            row[a] = vs[a][j];
            row2[a] = -vs[a][j];
        }
        row[k] = row2[k] = -1.0;
        lp.add_le(row, x[j]);
        lp.add_le(row2, -x[j]);
    }
    Vec ones(k + 1, 1.0);
    ones[k] = 0.0;
    lp.add_eq(ones, 1.0);
    for (std::size_t a = 0; a < k; ++a) {
        Vec e(k + 1, 0.0);
        e[a] = -1.0;
        lp.add_le(e, 0.0);
    }
    Vec cost(k + 1, 0.0);
    cost[k] = 1.0;
    LpResult r = lp.minimize(cost);
    return r.status == LpStatus::Optimal && r.value <= tol;
}

bool is_interior(const Polytope& P, const Vec& x, double tol) {
    if (P.is_empty()) return false;
    Polytope Q = P.has_hrep() ? P : P.converted();
    const HRep& h = Q.hrep();
    if (h.Aeq.rows() > 0) {
        // Any genuine equality kills the interior.
        for (std::size_t i = 0; i < h.Aeq.rows(); ++i)
            if (norm2(h.Aeq.row(i)) > 1e-12) return false;
    }
    for (std::size_t i = 0; i < h.A.rows(); ++i) {
        Vec a = h.A.row(i);
        if (dot(a, x) >= h.b[i] - tol * std::max(1.0, norm2(a))) return false;
    }
    return true;
}

bool minkowski_diff_contains(const Polytope& A, const Polytope& B, const Vec& x, double tol) {
    if (A.is_empty() || B.is_empty()) throw EmptySetError("minkowski_diff_contains");
    Polytope Bv = B.has_vrep() ? B : B.converted();
    Polytope Ah = A.has_hrep() ? A : A.converted();
    for (const Vec& v : Bv.vertices())
        if (!contains(Ah, add(x, v), tol)) return false;
    return true;
}

Polytope dual_slope(const Polytope& A, const Vec& z0, double tol) {
    if (A.is_empty()) throw EmptySetError("dual_slope");
    Polytope Ac = (A.has_vrep() && A.has_hrep()) ? A : A.converted();
    if (!is_interior(Ac, z0, tol)) throw NotInteriorError("dual_slope: z0 must be interior");
    const std::size_t n = Ac.dim();
    Mat R(0, n);
    Vec b;
    for (const Vec& v : Ac.vertices()) {
        R.append_row(sub(v, z0));
        b.push_back(1.0);
    }
    return Polytope::from_hrep(R, b).converted(tol);
}

bool eps_normal_set_contains(const Polytope& A, const Vec& x, double eps, const Vec& xstar,
                             double tol) {
    if (!contains(A, x, tol)) return false;
    return support(A, xstar) - dot(xstar, x) <= eps + tol;
}

Polytope with_rows(const Polytope& P, const Mat& A_extra, const Vec& b_extra,
                   const Mat& Aeq_extra, const Vec& beq_extra) {
    Polytope Q = P.has_hrep() ? P : P.converted();
    HRep h = Q.hrep();
    for (std::size_t i = 0; i < A_extra.rows(); ++i) {
        h.A.append_row(A_extra.row(i));
        h.b.push_back(b_extra[i]);
    }
    for (std::size_t i = 0; i < Aeq_extra.rows(); ++i) {
        h.Aeq.append_row(Aeq_extra.row(i));
        h.beq.push_back(beq_extra[i]);
    }
    return Polytope::from_hrep(h.A, h.b, h.Aeq, h.beq).converted();
}

bool polytope_equal(const Polytope& P, const Polytope& Q, double tol) {
    if (P.is_empty() || Q.is_empty()) return P.is_empty() == Q.is_empty();
    Polytope Pc = P.has_vrep() ? P : P.converted();
    Polytope Qc = Q.has_vrep() ? Q : Q.converted();
    for (const Vec& v : Pc.vertices())
        if (!contains(Qc, v, tol)) return false;
    for (const Vec& v : Qc.vertices())
        if (!contains(Pc, v, tol)) return false;
    return true;
}

Chebyshev chebyshev_center(const Polytope& P) {
    Polytope Q = P.has_hrep() ? P : P.converted();
    const HRep& h = Q.hrep();
    const std::size_t n = Q.dim();
    LpProblem lp(n + 1);
    for (std::size_t i = 0; i < h.A.rows(); ++i) {
        Vec row = h.A.row(i);
        row.push_back(norm2(h.A.row(i)));
        lp.add_le(row, h.b[i]);
    }
    for (std::size_t i = 0; i < h.Aeq.rows(); ++i) {
        Vec row = h.Aeq.row(i);
        row.push_back(0.0);
        lp.add_eq(row, h.beq[i]);
    }
    Vec c(n + 1, 0.0);
    c[n] = 1.0;
    LpResult r = lp.maximize(c);
    if (r.status != LpStatus::Optimal) throw EmptySetError("chebyshev_center");
    Vec center(r.x.begin(), r.x.begin() + n);
    return {center, r.x[n]};
}

PolyCone PolyCone::from_generators(std::size_t n, const std::vector<Vec>& gens) {
    PolyCone k;
    k.dim = n;
    for (const Vec& g : gens)
        if (norm2(g) > 1e-14) k.generators.push_back(g);
    return k;
}

PolyCone PolyCone::from_hrep(std::size_t n, const Mat& rows) {
    PolyCone k;
    k.dim = n;
    k.hrep_rows = rows;
    // Recover generators by slicing with the unit cube.
    Mat A = rows;
    Vec b(rows.rows(), 0.0);
    Polytope cube = Polytope::box(Vec(n, -1.0), Vec(n, 1.0));
    Polytope sliced = with_rows(cube, A, b).converted();
    if (!sliced.is_empty()) {
        for (const Vec& v : sliced.vertices())
            if (norm2(v) > 1e-9) k.generators.push_back(v);
    }
    return k;
}

bool cone_contains(const PolyCone& K, const Vec& x, double tol) {
    if (K.hrep_rows) {
        const Mat& A = *K.hrep_rows;
        for (std::size_t i = 0; i < A.rows(); ++i) {
            Vec a = A.row(i);
            if (dot(a, x) > tol * std::max(1.0, norm2(a))) return false;
        }
        return true;
    }
    const std::size_t k = K.generators.size();
    if (k == 0) return norm2(x) <= tol;
    LpProblem lp(k + 1);
    const std::size_t n = K.dim;
    for (std::size_t j = 0; j < n; ++j) {
        Vec row(k + 1, 0.0), row2(k + 1, 0.0);
        for (std::size_t a = 0; a < k; ++a) {
            row[a] = K.generators[a][j];
            row2[a] = -K.generators[a][j];
        }
        row[k] = row2[k] = -1.0;
        lp.add_le(row, x[j]);
        lp.add_le(row2, -x[j]);
    }
    for (std::size_t a = 0; a < k; ++a) {
        Vec e(k + 1, 0.0);
        e[a] = -1.0;
        lp.add_le(e, 0.0);
    }
    Vec cost(k + 1, 0.0);
    cost[k] = 1.0;
    LpResult r = lp.minimize(cost);
    return r.status == LpStatus::Optimal && r.value <= tol;
}

PolyCone positive_polar(const PolyCone& K) {
    const std::size_t n = K.dim;
    Mat rows(0, n);
    for (const Vec& g : K.generators) rows.append_row(scale(g, -1.0));  // <x*, g> >= 0
    PolyCone polar = PolyCone::from_hrep(n, rows);
    return polar;
}

std::vector<Vec> cone_lineality(const PolyCone& K, double tol) {
    // Direction v is in the lineality space iff both v and -v lie in the cone.
    std::vector<Vec> lines;
    for (const Vec& g : K.generators)
        if (cone_contains(K, scale(g, -1.0), tol)) lines.push_back(g);
    return orthonormal_span(lines, tol);
}

}  // namespace dccert
