#pragma once

#include "dccert/convex.hpp"

namespace dccert {

/// Vector-valued DC map: components phi_j = u_j - h sharing one control h.
class VectorMap {
public:
    VectorMap(std::vector<ConvexFunc> us, ConvexFunc h);

    std::size_t in_dim() const { return n_; }
    std::size_t out_dim() const { return us_.size(); }
    const ConvexFunc& control() const { return h_; }
    const ConvexFunc& component_u(std::size_t j) const { return us_[j]; }
    const CanonFunc& canon_u(std::size_t j) const { return canon_us_[j]; }
    const CanonFunc& canon_control() const { return canon_h_; }

    bool in_domain(const Vec& x, double tol = kTol) const;
    /// Phi(x); throws InfiniteValueError outside the domain.
    Vec value(const Vec& x, double tol = kTol) const;

    /// Canonical form of <lam, Phi> + h_extra * h
    ///   = sum_j lam_j u_j + (h_extra - sum_j lam_j) h.
    /// Throws NotRepresentableError when the weights cannot be realized.
    CanonFunc scalarize(const Vec& lam, double h_extra) const;

    /// Jacobian rows grad phi_j(x); nullopt when some piece is nonsmooth at x.
    std::optional<Mat> jacobian(const Vec& x) const;

private:
    std::size_t n_;
    std::vector<ConvexFunc> us_;
    ConvexFunc h_;
    std::vector<CanonFunc> canon_us_;
    CanonFunc canon_h_;
};

/// eps-active subset of the scalarization set C at x.
struct ActiveSet {
    Polytope base;
    Vec x;
    double eps;
    Polytope face;
};

ActiveSet active_index_face(const Polytope& C, const VectorMap& Phi, const Vec& x, double eps,
                            double tol = kTol);

/// Report of the B-DC validation (Definition-style midpoint checks at the
/// vertices of B, plus the basic closure properties).
struct BdcReport {
    bool passed = false;
    double worst_violation = 0;
    struct VertexCheck {
        Vec lam;
        double violation;
    };
    std::vector<VertexCheck> vertex_checks;
    bool domain_convex = true;          // polytope domains by construction
    double sum_closure_violation = 0;   // midpoint test for Phi+Phi, control 2h
    bool symmetric_applicable = false;  // B = -B and dom Phi = R^n
    double negation_violation = 0;      // midpoint test for -Phi when applicable
};

BdcReport validate_bdc(const VectorMap& Phi, const Polytope& B, const std::vector<Vec>& grid,
                       double tol = 1e-7);

enum class Verdict3 { Yes, No, Unknown };

struct DcSubdiffResult {
    Verdict3 verdict = Verdict3::Unknown;
    double refuted_eta = -1;   // eta witnessing failure when verdict == No
    bool schedule_warning = false;
    bool exact = true;         // false when a sampling fallback was used
};

/// x* in partial_eps(g - h)(x), decided through the intersection formula
/// over the eta schedule (defaults applied when the schedule is empty).
DcSubdiffResult dc_subdiff_contains(const ConvexFunc& g, const ConvexFunc& h, const Vec& x,
                                    const Vec& xstar, double eps,
                                    std::vector<double> eta_schedule = {}, double tol = kTol);

std::vector<double> default_eta_schedule(double g_at_x, double h_at_x, std::size_t points = 64);

struct SupRuleResult {
    Verdict3 verdict = Verdict3::Unknown;
    double eta = 0;  // witness
    Vec lam;         // witness scalarization
};

/// Membership in the eps-subdifferential of sup_{lam in C} <lam,Phi> + g,
/// searched per the union formula over eta in [0,eps] and the (eps-eta)-active
/// face. The 1-D value function is convex in eta, so a ternary search plus an
/// inner cutting-plane minimization decides it.
SupRuleResult sup_compact_subdiff_contains(const VectorMap& Phi, const ConvexFunc& g,
                                           const Polytope& C, const Vec& x, const Vec& xstar,
                                           double eps, double tol = kTol);

struct MaxRuleResult {
    bool contains = false;
    Vec alpha;         // (alpha1, alpha2)
    double eta1 = 0, eta0 = 0;
    double slack = 0;  // achieved budget slack
};

/// x* in the eta-subdifferential of max(psi1, psi2) at x via the two-function
/// convex-combination rule with its scalar budget constraint.
MaxRuleResult max_rule_contains(const ConvexFunc& psi1, const ConvexFunc& psi2, const Vec& x,
                                const Vec& xstar, double eta, std::size_t alpha_grid = 101,
                                double tol = kTol);

/// Joint witness search over a scalarization face:
/// decide whether  xstar  lies in
///   sum_i partial_{b_i}(g_i)(x_i)  +  partial_{b}(<lam,Phi> + h_extra*h)(x)
///   + sum_l N^{c_l}(..)
/// for some lam in `face`, minimizing
///   sum b_i + b + sum c_l - <budget_lin, lam>.
/// One convex QP when every u_j and h is polyhedral or affine (the weights
/// then enter all constraints linearly); g_i fixed terms may carry quadratics.
struct JointFaceResult {
    bool solved = false;      // a finite minimum was computed
    double min_cost = 0;      // minimized budget expression
    Vec lam;                  // minimizing scalarization
    std::vector<double> term_budgets;  // fixed terms, then the lam-term, then normals
};
JointFaceResult joint_face_min_budget(const VectorMap& Phi, double h_extra, const Polytope& face,
                                      const Vec& x, const std::vector<SubdiffTerm>& fixed_terms,
                                      const std::vector<NormalTerm>& normals, const Vec& xstar,
                                      const Vec& budget_lin, double tol = kTol);

/// True when the joint QP formulation above applies to this map.
bool joint_face_applicable(const VectorMap& Phi);

/// x* in D^*Phi(x)(lam) = regular subdifferential of <lam,Phi> at x.
bool coderivative_contains(const VectorMap& Phi, const Vec& x, const Vec& lam, const Vec& xstar,
                           double tol = kTol);

/// Generator sets of D^*Phi(x)(lam) when h is differentiable at x and the
/// scalarization is representable; the sum of the sets (Minkowski) is the
/// coderivative image.
std::vector<GeneratorSet> coderivative_generators(const VectorMap& Phi, const Vec& x,
                                                  const Vec& lam, double tol = kTol);

}  // namespace dccert
