#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace dccert {

using Vec = std::vector<double>;

/// Dense row-major matrix, sized once at construction.
class Mat {
public:
    Mat() : rows_(0), cols_(0) {}
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Mat(std::initializer_list<std::initializer_list<double>> init) {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            if (row.size() != cols_) throw std::invalid_argument("Mat: ragged init");
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    Vec row(std::size_t i) const {
        return Vec(data_.begin() + i * cols_, data_.begin() + (i + 1) * cols_);
    }
    void set_row(std::size_t i, const Vec& r) {
        for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) = r[j];
    }
    void append_row(const Vec& r) {
        if (cols_ == 0) cols_ = r.size();
        if (r.size() != cols_) throw std::invalid_argument("Mat: row size mismatch");
        data_.insert(data_.end(), r.begin(), r.end());
        ++rows_;
    }

    Mat transposed() const {
        Mat t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

private:
    std::size_t rows_, cols_;
    std::vector<double> data_;
};

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline Vec add(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vec sub(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vec scale(const Vec& a, double c) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = c * a[i];
    return r;
}

inline void axpy(Vec& y, double c, const Vec& x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += c * x[i];
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(const Vec& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

inline Vec matvec(const Mat& A, const Vec& x) {
    Vec y(A.rows(), 0.0);
    for (std::size_t i = 0; i < A.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < A.cols(); ++j) s += A(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

inline Vec matvec_t(const Mat& A, const Vec& y) {
    Vec x(A.cols(), 0.0);
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < A.cols(); ++j) x[j] += A(i, j) * y[i];
    return x;
}

inline Mat matmul(const Mat& A, const Mat& B) {
    Mat C(A.rows(), B.cols());
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t k = 0; k < A.cols(); ++k) {
            double a = A(i, k);
            if (a == 0.0) continue;
            for (std::size_t j = 0; j < B.cols(); ++j) C(i, j) += a * B(k, j);
        }
    return C;
}

/// Solves A x = b by Gaussian elimination with partial pivoting.
/// Returns false when A is singular to working precision.
bool solve_linear(Mat A, Vec b, Vec& x, double pivot_tol = 1e-12);

/// Least-squares solution of A x = b via normal equations with
/// Tikhonov-free rank handling (complete orthogonalization on A^T A).
Vec lstsq(const Mat& A, const Vec& b);

/// Orthonormal basis of the null space of A (columns of the result).
/// Vectors with projection below tol are treated as dependent.
std::vector<Vec> null_space_basis(const Mat& A, double tol = 1e-10);

/// Orthonormal basis of the row space span of the given vectors.
std::vector<Vec> orthonormal_span(const std::vector<Vec>& vs, double tol = 1e-10);

struct EigSym {
    Mat vectors;  // columns are orthonormal eigenvectors
    Vec values;   // descending
};

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Throws std::runtime_error if the sweep limit is hit before the
/// off-diagonal mass falls below the convergence threshold.
EigSym eig_sym(const Mat& A, int max_sweeps = 64);

inline std::string vec_to_string(const Vec& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(v[i]);
    }
    return s + "]";
}

}  // namespace dccert
