#include "dccert/linalg.hpp"

#include <algorithm>

namespace dccert {

bool solve_linear(Mat A, Vec b, Vec& x, double pivot_tol) {
    const std::size_t n = A.rows();
    if (A.cols() != n || b.size() != n) throw std::invalid_argument("solve_linear: shape");
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(A(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            double v = std::abs(A(i, k));
            if (v > best) { best = v; piv = i; }
        }
        if (best <= pivot_tol) return false;
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(A(k, j), A(piv, j));
            std::swap(b[k], b[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            double f = A(i, k) / A(k, k);
            if (f == 0.0) continue;
            A(i, k) = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) A(i, j) -= f * A(k, j);
            b[i] -= f * b[k];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= A(ii, j) * x[j];
        x[ii] = s / A(ii, ii);
    }
    return true;
}

namespace {

// Modified Gram-Schmidt with two passes for stability.
void orthogonalize(Vec& v, const std::vector<Vec>& basis) {
    for (int pass = 0; pass < 2; ++pass)
        for (const Vec& q : basis) axpy(v, -dot(v, q), q);
}

}  // namespace

std::vector<Vec> orthonormal_span(const std::vector<Vec>& vs, double tol) {
    std::vector<Vec> basis;
    for (const Vec& v0 : vs) {
        Vec v = v0;
        double scale0 = norm2(v);
        if (scale0 <= tol) continue;
        orthogonalize(v, basis);
        double nv = norm2(v);
        if (nv > tol * std::max(1.0, scale0)) basis.push_back(scale(v, 1.0 / nv));
    }
    return basis;
}

std::vector<Vec> null_space_basis(const Mat& A, double tol) {
    const std::size_t n = A.cols();
    std::vector<Vec> rows;
    for (std::size_t i = 0; i < A.rows(); ++i) rows.push_back(A.row(i));
    std::vector<Vec> row_basis = orthonormal_span(rows, tol);

    std::vector<Vec> null_basis;
    for (std::size_t j = 0; j < n; ++j) {
        Vec e(n, 0.0);
        e[j] = 1.0;
        orthogonalize(e, row_basis);
        orthogonalize(e, null_basis);
        double ne = norm2(e);
        if (ne > tol) null_basis.push_back(scale(e, 1.0 / ne));
    }
    return null_basis;
}

Vec lstsq(const Mat& A, const Vec& b) {
    // Solve via A^T A x = A^T b restricted to the row space of A.
    const std::size_t n = A.cols();
    Mat AtA(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < A.rows(); ++k) s += A(k, i) * A(k, j);
            AtA(i, j) = s;
        }
    Vec Atb = matvec_t(A, b);

    double dmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) dmax = std::max(dmax, AtA(i, i));
    double reg = (dmax > 0 ? dmax : 1.0) * 1e-14;

    Vec x;
    Mat M = AtA;
    for (std::size_t i = 0; i < n; ++i) M(i, i) += reg;
    if (!solve_linear(M, Atb, x)) {
        // Heavier regularization as a last resort; callers verify residuals.
        M = AtA;
        for (std::size_t i = 0; i < n; ++i) M(i, i) += (dmax > 0 ? dmax : 1.0) * 1e-9;
        if (!solve_linear(M, Atb, x)) x.assign(n, 0.0);
    }
    return x;
}

EigSym eig_sym(const Mat& A0, int max_sweeps) {
    const std::size_t p = A0.rows();
    if (A0.cols() != p) throw std::invalid_argument("eig_sym: not square");
    Mat A = A0;
    // Symmetrize defensively against storage asymmetry in the last ulp.
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j) {
            double v = 0.5 * (A(i, j) + A(j, i));
            A(i, j) = A(j, i) = v;
        }
    Mat V = Mat::identity(p);

    auto offdiag = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = i + 1; j < p; ++j) s += A(i, j) * A(i, j);
        return s;
    };
    double scale0 = 0.0;
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) scale0 += A(i, j) * A(i, j);
    const double thresh = 1e-30 * (1.0 + scale0);

    bool converged = (p <= 1) || offdiag() <= thresh;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        for (std::size_t i = 0; i + 1 < p; ++i) {
            for (std::size_t j = i + 1; j < p; ++j) {
                double apq = A(i, j);
                if (std::abs(apq) < 1e-300) { A(i, j) = A(j, i) = 0.0; continue; }
                double theta = (A(j, j) - A(i, i)) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                double tau = s / (1.0 + c);

                double aii = A(i, i), ajj = A(j, j);
                A(i, i) = aii - t * apq;
                A(j, j) = ajj + t * apq;
                A(i, j) = A(j, i) = 0.0;
                for (std::size_t r = 0; r < p; ++r) {
                    if (r != i && r != j) {
                        double ari = A(r, i), arj = A(r, j);
                        A(r, i) = A(i, r) = ari - s * (arj + tau * ari);
                        A(r, j) = A(j, r) = arj + s * (ari - tau * arj);
                    }
                    double vri = V(r, i), vrj = V(r, j);
                    V(r, i) = vri - s * (vrj + tau * vri);
                    V(r, j) = vrj + s * (vri - tau * vrj);
                }
            }
        }
        converged = offdiag() <= thresh;
    }
    if (!converged) throw std::runtime_error("eig_sym: no convergence");

    std::vector<std::size_t> order(p);
    for (std::size_t i = 0; i < p; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return A(a, a) > A(b, b); });

    EigSym out;
    out.values.resize(p);
    out.vectors = Mat(p, p);
    for (std::size_t k = 0; k < p; ++k) {
        out.values[k] = A(order[k], order[k]);
        for (std::size_t r = 0; r < p; ++r) out.vectors(r, k) = V(r, order[k]);
    }
    return out;
}

}  // namespace dccert
