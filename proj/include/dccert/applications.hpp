#pragma once

#include "dccert/dc.hpp"

namespace dccert {

/// Semi-infinite program over a finite discretization of the index set:
/// min phi(x)  s.t.  phi_t(x) <= 0 for the listed index points.
struct SipProblem {
    DCPair objective;
    std::vector<double> index_points;
    std::vector<DCPair> constraint_funcs;  // one per index point, shared control
    Polytope box;                          // search region for oracles

    std::size_t dim() const { return objective.u.dim(); }
};

/// Finitely supported multiplier measure.
struct DiscreteMeasure {
    std::vector<std::pair<std::size_t, double>> weights;  // (index, w >= 0)
    double total() const {
        double s = 0;
        for (auto& [i, w] : weights) s += w;
        return s;
    }
};

struct SipResult {
    bool found = false;
    DiscreteMeasure mu;
    bool qc_holds = false;
    double complementarity = 0;
    double lipschitz_estimate = 0;
    std::string notes;
};

SipResult sip_check_local(const SipProblem& S, const Vec& xbar, double active_tol = 1e-6,
                          double tol = 1e-7);

/// x* in sum_w w partial phi_w(xbar) + N_D(xbar) for a weighted finite sum
/// of DC terms with differentiable controls.
bool expected_subdiff_contains(const std::vector<std::pair<double, DCPair>>& terms,
                               const Vec& xbar, const Vec& xstar, double tol = 1e-8);

/// Symmetric matrix stored as a full square array (upper triangle mirrored).
struct SymMatrix {
    Mat entries;
    std::size_t p() const { return entries.rows(); }
    static SymMatrix from(const Mat& A);
};

/// sym_eig contract: descending eigenvalues, orthonormal columns; cyclic
/// Jacobi under the hood.
EigSym sym_eig(const SymMatrix& A);

/// Symmetric-matrix-valued DC map: entry functions share one control.
struct MatrixMap {
    std::size_t p = 0;
    std::vector<std::vector<DCPair>> entry_funcs;  // p x p, symmetric
    ConvexFunc control;

    MatrixMap(std::size_t p_, std::vector<std::vector<DCPair>> entries, ConvexFunc h);
    std::size_t dim() const { return control.dim(); }
    SymMatrix value(const Vec& x, double tol = kTol) const;
    /// Gradient of x -> v' Phi(x) v; nullopt when some entry is nonsmooth.
    std::optional<Vec> quad_form_grad(const Vec& x, const Vec& v) const;
    /// Midpoint validation of v'Phi(.)v + h over a grid of sphere directions.
    double validate(const std::vector<Vec>& grid, std::size_t sphere_samples = 64,
                    unsigned seed = 5) const;
};

struct EigenFuncs {
    double lambda_k;
    double Lambda_k;  // sum of the top-k eigenvalues
};
EigenFuncs eigen_value_funcs(const MatrixMap& M, const Vec& x, std::size_t k);

/// |lambda1(Phi(x)) + h(x) - sphere max of v'Phi(x)v + h(x)|, the sphere side
/// computed by sampling plus local power-iteration ascent.
double scalarization_equiv_check(const MatrixMap& M, const Vec& x, std::size_t sphere_grid = 2048,
                                 unsigned seed = 11);

struct SdpResult {
    bool found = false;
    SymMatrix A;        // trace-1 PSD multiplier (normalized direction)
    double scale = 0;   // coderivative weight: 0 in subdiff(phi)+scale*<A,grad Phi>+N_Q
    double complementarity = 0;
    bool qc_holds = false;
    std::string notes;
};

/// Local SDP certificate at a feasible xbar of  min phi  s.t. Phi(x) <= 0,
/// x in Q: a trace-1 PSD multiplier supported on the kernel of Phi(xbar).
SdpResult sdp_check_local(const MatrixMap& M, const DCPair& phi, const Polytope& Q,
                          const Vec& xbar, double tol = 1e-7, std::size_t rotation_grid = 32);

}  // namespace dccert
