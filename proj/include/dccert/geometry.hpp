#pragma once

#include <optional>

#include "dccert/errors.hpp"
#include "dccert/linalg.hpp"

namespace dccert {

inline constexpr double kTol = 1e-9;

/// H-representation {x : A x <= b, Aeq x = beq}. Equality rows carry
/// lower-dimensional (degenerate) polytopes.
struct HRep {
    Mat A;
    Vec b;
    Mat Aeq;
    Vec beq;
};

/// Bounded convex polyhedron with one or both representations.
/// Values are immutable after construction; all free functions below are
/// pure, so concurrent use is safe.
class Polytope {
public:
    Polytope() = default;

    static Polytope from_hrep(const Mat& A, const Vec& b, const Mat& Aeq = Mat(),
                              const Vec& beq = Vec());
    static Polytope from_vrep(const std::vector<Vec>& vertices, double tol = kTol);
    static Polytope box(const Vec& lo, const Vec& hi);
    static Polytope interval(double lo, double hi) { return box({lo}, {hi}); }
    static Polytope singleton(const Vec& v) { return from_vrep({v}); }
    /// Standard simplex {w >= 0, sum w = 1} in R^k.
    static Polytope simplex(std::size_t k);
    static Polytope empty_set(std::size_t dim);

    std::size_t dim() const { return n_; }
    bool is_empty() const { return empty_; }
    bool has_hrep() const { return h_.has_value(); }
    bool has_vrep() const { return v_.has_value(); }
    const HRep& hrep() const;
    const std::vector<Vec>& vertices() const;

    /// Returns a copy with both representations populated and consistent.
    Polytope converted(double tol = kTol) const;

private:
    std::size_t n_ = 0;
    bool empty_ = false;
    std::optional<HRep> h_;
    std::optional<std::vector<Vec>> v_;
    friend Polytope with_rows(const Polytope&, const Mat&, const Vec&, const Mat&, const Vec&);
};

/// max <d, x> over P; -infinity sentinel for the empty set.
double support(const Polytope& P, const Vec& d);
Vec support_argmax(const Polytope& P, const Vec& d);

bool contains(const Polytope& P, const Vec& x, double tol = kTol);
bool is_interior(const Polytope& P, const Vec& x, double tol = kTol);

/// x + B subseteq A, decided on the vertices of B.
bool minkowski_diff_contains(const Polytope& A, const Polytope& B, const Vec& x,
                             double tol = kTol);

/// (A - z0)^polar, bounded; z0 must be interior to A.
Polytope dual_slope(const Polytope& A, const Vec& z0, double tol = kTol);

/// Membership in the eps-normal set N_A^eps(x); false when x is not in A.
bool eps_normal_set_contains(const Polytope& A, const Vec& x, double eps, const Vec& xstar,
                             double tol = kTol);

/// Appends constraint rows and reconverts.
Polytope with_rows(const Polytope& P, const Mat& A_extra, const Vec& b_extra,
                   const Mat& Aeq_extra = Mat(), const Vec& beq_extra = Vec());

bool polytope_equal(const Polytope& P, const Polytope& Q, double tol = 1e-7);

/// Chebyshev center of the H-representation (largest inscribed ball).
struct Chebyshev {
    Vec center;
    double radius;
};
Chebyshev chebyshev_center(const Polytope& P);

/// Closed convex polyhedral cone, conic V-rep plus optional {x : Ax <= 0}.
struct PolyCone {
    std::size_t dim = 0;
    std::vector<Vec> generators;
    std::optional<Mat> hrep_rows;  // rows a with a.x <= 0

    static PolyCone from_generators(std::size_t n, const std::vector<Vec>& gens);
    static PolyCone from_hrep(std::size_t n, const Mat& rows);
};

/// {x* : <x*, g> >= 0 for all generators g}, with generators recovered by
/// slicing with the unit cube.
PolyCone positive_polar(const PolyCone& K);

bool cone_contains(const PolyCone& K, const Vec& x, double tol = kTol);

/// Lineality space basis of cone(generators); empty when pointed.
std::vector<Vec> cone_lineality(const PolyCone& K, double tol = kTol);

}  // namespace dccert
