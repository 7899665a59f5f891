#pragma once

#include "dccert/dc.hpp"

namespace dccert {

/// Set-constrained DC program  min phi(x)  s.t.  Phi(x) in C  (, x in Q):
/// phi = u_obj - h, constraint components share the same control h.
struct Problem {
    DCPair objective;
    VectorMap Phi;
    Polytope C;   // in the constraint image space, z0 interior
    Vec z0;
    std::optional<Polytope> Q;

    Problem(DCPair obj, VectorMap phi, Polytope c, Vec z0_, std::optional<Polytope> q = {});

    std::size_t dim() const { return objective.u.dim(); }
    bool feasible(const Vec& x, double tol = kTol) const;
};

struct CertOptions {
    std::vector<double> eta_schedule;  // empty -> default grid
    std::size_t eta_points = 33;
    std::size_t boundary_samples = 50;
    double alpha_min = 1e-3;  // operational "alpha1 > 0" threshold
    double tol = 1e-6;
    unsigned seed = 2024;
    std::size_t threads = 1;
};

enum class CertVerdict { Holds, Fails, NotFoundAtResolution };

struct GlobalWitness {
    double eta = 0;
    Vec xstar;
    Vec alpha;            // (alpha1, alpha2)
    double eta1 = 0, eta2 = 0, eta3 = 0;
    Vec lam;              // lambda* in the dual slope (or cone base)
    double slack = 0;     // budget slack of the scalar condition
    double alpha1_max = 0;  // largest alpha1 admitting a witness here
};

struct Certificate {
    CertVerdict verdict = CertVerdict::NotFoundAtResolution;
    std::vector<GlobalWitness> witnesses;
    double refuted_eta = -1;
    Vec refuted_xstar;
    double refuted_margin = 0;   // certified infeasibility margin
    bool all_alpha1_positive = false;  // every witness passes alpha1 >= alpha_min
    double min_alpha1 = 0;             // uniform lower bound over tests
    double eta_bar_estimate = -1;      // grid estimate of the converse range
    std::vector<double> schedule;
    std::string notes;
};

/// Improvement-function reformulation data: psi1 = phi + h - alpha and
/// psi2 = f + h with f(x) = sup over the dual slope of <lam, Phi(x)-z0> - 1.
struct ImprovementObjective {
    ConvexFunc psi1;
    std::vector<CanonFunc> psi2_parts;  // one per dual-slope vertex
    std::optional<ConvexFunc> psi2;     // merged max-affine when polyhedral
    ConvexFunc h;
    double alpha = 0;
    Polytope dual;  // the dual slope used

    double eval_f(const Vec& x, double tol = kTol) const;     // feasibility gauge
    double eval_psi2(const Vec& x, double tol = kTol) const;  // f + h
    double merit(const Vec& x, double tol = kTol) const;      // max(psi1,psi2) - h
};

ImprovementObjective improvement_objective(const Problem& P, double alpha);
ImprovementObjective improvement_objective(const Problem& P, const Vec& xbar);

Certificate check_global(const Problem& P, const Vec& xbar, const CertOptions& opts = {});

/// Local necessary conditions: multipliers (alpha1, alpha2, lambda*) with the
/// complementarity alpha2 (1 + <lam, z0 - Phi(xbar)>) = 0, plus the conic
/// normal form when the qualification condition holds.
struct LocalCertificate {
    bool multipliers_found = false;
    Vec alpha;
    Vec lam;
    double complementarity = 0;  // residual
    bool qc_holds = false;
    bool qc_exact = true;
    bool cone_form_found = false;
    double cone_eta = 0;  // scaled multiplier in the conic form
    Vec cone_lam;
    std::string notes;
};

LocalCertificate check_local_necessary(const Problem& P, const Vec& xbar, double tol = 1e-7);

/// Qualification condition: 0 outside the coderivative image over the
/// equality face of the dual slope. Exact for differentiable Phi.
struct QcResult {
    bool holds = false;
    bool exact = true;
    bool face_empty = false;
};
QcResult check_QC(const Problem& P, const Vec& xbar, double tol = 1e-7);

enum class SufficientVerdict { LocalMin, NotCertified };

struct SufficientCertificate {
    SufficientVerdict verdict = SufficientVerdict::NotCertified;
    bool inclusion_ok = false;
    bool qualification_ok = false;
    std::vector<double> schedule;
    std::string notes;
};

SufficientCertificate check_local_sufficient(const Problem& P, const Vec& xbar,
                                             std::vector<double> eta_small_schedule = {},
                                             const CertOptions& opts = {});

/// Single inclusion test used by both global and sufficient checks: does
/// every sampled element of partial_eta h(xbar) admit a Theorem-style
/// witness at level eta? Exposed for the cone module.
struct InclusionProbe {
    bool all_covered = false;
    bool certified = true;  // false when a search path was inexact
    Vec failed_xstar;
    double failed_margin = 0;
    std::vector<GlobalWitness> witnesses;
};

namespace detail {

/// Shared witness engine for the set- and cone-constrained global theorems.
/// The scalar condition reads
///   alpha1 eta1 + alpha2 eta2 (+ eta3) + margin_const*alpha2
///     - <mu, budget_vec> = eta,   mu = alpha2 lambda*,
/// with margin_const = 1, budget_vec = Phi(xbar)-z0 in the set case and
/// margin_const = 0, budget_vec = Phi(xbar) in the cone case.
struct EngineSpec {
    const VectorMap* Phi = nullptr;
    CanonFunc u_obj;   // canonical phi + h
    ConvexFunc h;      // control, for subdifferential sampling
    Polytope base;     // dual slope D or cone base B (converted)
    Vec budget_vec;
    double margin_const = 1.0;
    std::optional<Polytope> Qset;  // converted when present
};

struct WitnessOutcome {
    bool found = false;
    bool refuted = false;  // certified: no witness exists at this (eta, xstar)
    bool certified = true;
    double margin = 0;
    GlobalWitness w;
};

WitnessOutcome engine_search(const EngineSpec& spec, const Vec& xbar, const Vec& xstar,
                             double eta, double alpha1_lower, double tol);

/// Largest alpha1 admitting a witness (bisection), -1 when none exists.
double engine_alpha1_max(const EngineSpec& spec, const Vec& xbar, const Vec& xstar, double eta,
                         double tol);

/// Sample points of partial_eta h(xbar): extreme points plus random
/// in-set combinations (or ellipsoid shell points for quadratic h).
std::vector<Vec> sample_subdiff_points(const ConvexFunc& h, const Vec& xbar, double eta,
                                       std::size_t extra_samples, unsigned seed);

InclusionProbe probe_inclusion(const EngineSpec& spec, const Vec& xbar, double eta,
                               const CertOptions& opts);

}  // namespace detail

}  // namespace dccert
