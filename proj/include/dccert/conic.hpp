#pragma once

#include "dccert/certificates.hpp"

namespace dccert {

/// Compact convex base B with cl cone(B) = K+.
struct ConeBase {
    PolyCone K;
    PolyCone Kplus;
    Polytope B;
    bool non_pointed_dual = false;  // K+ has a nontrivial lineality space
    bool degenerate = false;        // K+ = {0}: the constraint is vacuous
};

/// Base construction: slice K+ with <e, lam> = 1 for e interior to K, or
/// with the unit cross-polytope when K has empty interior.
ConeBase make_base(const PolyCone& K, std::optional<Vec> e = {}, double tol = kTol);

/// Cone-constrained DC program  min phi(x)  s.t.  Phi(x) in -K (, x in Q).
struct ConeProblem {
    DCPair objective;
    VectorMap Phi;
    ConeBase base;
    std::optional<Polytope> Q;

    ConeProblem(DCPair obj, VectorMap phi, ConeBase b, std::optional<Polytope> q = {});

    std::size_t dim() const { return objective.u.dim(); }
    /// Phi(x) in -K decided through sup over the base.
    bool feasible(const Vec& x, double tol = kTol) const;
};

Certificate check_cone_global(const ConeProblem& P, const Vec& xbar,
                              const CertOptions& opts = {});

LocalCertificate check_cone_local(const ConeProblem& P, const Vec& xbar, double tol = 1e-7);

/// Corollary form with the abstract constraint: one unnormalized multiplier
/// lambda* in K+ with 0 in subdiff(phi) + D*Phi(lambda*) + N_Q(xbar).
struct ConeLocalQ {
    bool found = false;
    Vec lam;              // in K+
    double complementarity = 0;
    bool qc_holds = false;
    std::string notes;
};
ConeLocalQ check_cone_local_withQ(const ConeProblem& P, const Vec& xbar, double tol = 1e-7);

SufficientCertificate check_cone_sufficient(const ConeProblem& P, const Vec& xbar,
                                            std::vector<double> eta_small_schedule = {},
                                            const CertOptions& opts = {});

}  // namespace dccert
