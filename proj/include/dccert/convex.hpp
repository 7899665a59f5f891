#pragma once

#include <memory>
#include <optional>

#include "dccert/geometry.hpp"

namespace dccert {

/// x -> a.x + b
struct AffinePiece {
    Vec a;
    double b;
};

using MaxAffineData = std::vector<AffinePiece>;

/// Proper lsc convex function in one of the closed-under-construction kinds:
/// max-affine, convex quadratic (1/2 x'Qx + q.x + c), polyhedral indicator,
/// or a sum of those. Immutable.
class ConvexFunc {
public:
    enum class Kind { MaxAffine, Quadratic, IndicatorPoly, Sum };

    /// Zero-dimensional zero function; placeholder until assigned.
    ConvexFunc() = default;

    static ConvexFunc max_affine(std::size_t n, MaxAffineData pieces);
    static ConvexFunc quadratic(const Mat& Q, const Vec& q, double c);
    static ConvexFunc indicator(const Polytope& P);
    static ConvexFunc sum(std::vector<ConvexFunc> terms);

    static ConvexFunc zero(std::size_t n) { return max_affine(n, {{Vec(n, 0.0), 0.0}}); }
    static ConvexFunc affine(const Vec& a, double b) {
        return max_affine(a.size(), {{a, b}});
    }
    /// |x| in one dimension.
    static ConvexFunc abs1() { return max_affine(1, {{{1.0}, 0.0}, {{-1.0}, 0.0}}); }

    Kind kind() const { return kind_; }
    std::size_t dim() const { return n_; }

    const MaxAffineData& pieces() const { return pieces_; }
    const Mat& Q() const { return Q_; }
    const Vec& q() const { return q_; }
    double c() const { return c_; }
    const Polytope& domain_poly() const { return *poly_; }
    const std::vector<ConvexFunc>& terms() const { return terms_; }

private:
    Kind kind_ = Kind::MaxAffine;
    std::size_t n_ = 0;
    MaxAffineData pieces_;
    Mat Q_;
    Vec q_;
    double c_ = 0;
    std::shared_ptr<const Polytope> poly_;
    std::vector<ConvexFunc> terms_;
};

/// Flattened normal form: one merged quadratic, max-affine terms with
/// nonnegative weights folded in, and polyhedral domain factors.
struct CanonFunc {
    std::size_t n = 0;
    bool has_quad = false;
    Mat Q;  // PSD when has_quad
    Vec q;
    double c = 0;
    std::vector<MaxAffineData> polys;
    std::vector<Polytope> doms;  // each stores hrep+vrep

    bool polyhedral() const { return !has_quad; }
};

CanonFunc canonicalize(const ConvexFunc& f);
/// coef * f. Negative coefficients are representable only for affine or
/// quadratic content (PSD of merged quadratics is re-checked by callers).
CanonFunc scale_canon(const CanonFunc& f, double coef);
CanonFunc add_canon(const CanonFunc& f, const CanonFunc& g);

/// Weighted sum with factor merging: identical max-affine factors pool
/// their weights before the sign check, so shared-control cancellations are
/// representable. Throws NotRepresentableError when a pooled weight stays
/// negative on a nonsmooth factor or on an indicator.
CanonFunc weighted_canon_combination(const std::vector<std::pair<double, const CanonFunc*>>& parts,
                                     std::size_t n);

bool same_pieces(const MaxAffineData& a, const MaxAffineData& b, double tol = 1e-12);
/// Verifies the merged quadratic is PSD (within psd_tol) and clips tiny
/// negative curvature. Throws NotRepresentableError on genuine violation.
void finalize_quadratic(CanonFunc& f, double psd_tol = 1e-7);

double eval(const ConvexFunc& f, const Vec& x, double tol = kTol);
double eval(const CanonFunc& f, const Vec& x, double tol = kTol);

/// Cross-sums all max-affine factors plus the affine part into one piece
/// list. Throws NotRepresentableError on quadratic or indicator content.
MaxAffineData flatten_to_max_affine(const CanonFunc& f);

/// Fenchel conjugate value sup_x <y,x> - f(x); +infinity allowed.
double conjugate_value(const ConvexFunc& f, const Vec& y);
double conjugate_value(const CanonFunc& f, const Vec& y);

/// Conjugate value plus a maximizer when the supremum is attained.
struct ConjResult {
    double value = 0;
    Vec arg;
    bool attained = false;
};
ConjResult conjugate_with_arg(const CanonFunc& f, const Vec& y);

/// y in eps-subdifferential of f at x, by the Fenchel characterization
/// f(x) + f*(y) <= <y,x> + eps (+ tol).
bool in_eps_subdiff(const ConvexFunc& f, const Vec& x, const Vec& y, double eps,
                    double tol = kTol);
bool in_eps_subdiff(const CanonFunc& f, const Vec& x, const Vec& y, double eps,
                    double tol = kTol);

/// Exact V-representation of the eps-subdifferential for polyhedral kinds.
/// Indicator factors require x interior to their polytope (else the set is
/// unbounded and refused).
Polytope eps_subdiff_vrep(const ConvexFunc& f, const Vec& x, double eps, double tol = kTol);
Polytope eps_subdiff_vrep(const CanonFunc& f, const Vec& x, double eps, double tol = kTol);

/// Gradient, or nullopt when not differentiable at x (caller falls back to
/// subdifferential paths).
std::optional<Vec> grad(const ConvexFunc& f, const Vec& x, double act_tol = 1e-9);

/// Classic convex subdifferential membership (the regular subdifferential of
/// a proper lsc convex function coincides with it).
bool regular_subdiff_contains(const ConvexFunc& f, const Vec& x, const Vec& y,
                              double tol = kTol);

/// Exact subdifferential at eps=0 as convex hull of points plus conic hull
/// of rays; one generator set per additive factor (Minkowski sum).
struct GeneratorSet {
    std::vector<Vec> points;
    std::vector<Vec> rays;
};
std::vector<GeneratorSet> subdiff_generators(const CanonFunc& f, const Vec& x,
                                             double tol = kTol);

/// One additive term of a Minkowski sum of eps-subdifferentials:
/// contributes the set  partial_{b}(g)(x)  with budget b a solver variable.
struct SubdiffTerm {
    CanonFunc g;
    Vec x;
};
/// Extra polyhedral term N_P^{c}(x) with budget c a solver variable.
struct NormalTerm {
    Polytope P;  // converted
    Vec x;
};

/// Decides  xstar in  sum_i partial_{b_i} g_i(x_i) + sum_l N^{c_l}  with
/// sum b_i + sum c_l <= budget, by one convex QP minimizing the total
/// budget. Exact for the supported kinds.
struct MembershipResult {
    bool decided = false;   // solver reached a verdict
    bool member = false;    // verdict when decided
    double min_budget = 0;  // smallest total budget achieving membership
    std::vector<double> term_budgets;
};
MembershipResult subdiff_sum_membership(const Vec& xstar, const std::vector<SubdiffTerm>& terms,
                                        const std::vector<NormalTerm>& normals, double budget,
                                        double tol = kTol);

/// DC function f = u - h with u = f + h convex (control h).
struct DCPair {
    ConvexFunc u;
    ConvexFunc h;

    std::size_t dim() const { return u.dim(); }
};

double dc_eval(const DCPair& f, const Vec& x, double tol = kTol);

/// dom u subseteq dom h, checked exactly on polyhedral domains.
bool dcpair_domain_ok(const DCPair& f, double tol = kTol);

}  // namespace dccert
