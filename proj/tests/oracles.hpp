#pragma once

// Test-only oracles: independent brute-force routes for values the library
// computes by smarter paths. Nothing here may call into the code path it
// checks (the eigensolver below is a two-sided Jacobi on an explicit Gram
// matrix; the library SVD is one-sided and never forms the Gram matrix).

#include <algorithm>
#include <cmath>
#include <vector>

#include "lorapre/matrix.hpp"
#include "lorapre/rng.hpp"

namespace oracles {

using lorapre::Matrix;
using lorapre::Rng;

inline Matrix random_matrix(Rng& rng, int p, int q, double stddev = 1.0) {
    Matrix m(p, q);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, stddev);
    return m;
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition: classic two-sided cyclic Jacobi.
// ---------------------------------------------------------------------------

struct EigResult {
    std::vector<double> values; // descending
    Matrix vectors;             // columns
};

inline EigResult eig_symmetric(Matrix a) {
    const int n = a.rows();
    Matrix q = Matrix::identity(n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (off < 1e-26) break;
        for (int p = 0; p < n; ++p) {
            for (int r = p + 1; r < n; ++r) {
                if (std::fabs(a(p, r)) < 1e-300) continue;
                const double theta = (a(r, r) - a(p, p)) / (2.0 * a(p, r));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p), akr = a(k, r);
                    a(k, p) = c * akp - s * akr;
                    a(k, r) = s * akp + c * akr;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k), ark = a(r, k);
                    a(p, k) = c * apk - s * ark;
                    a(r, k) = s * apk + c * ark;
                }
                for (int k = 0; k < n; ++k) {
                    const double qkp = q(k, p), qkr = q(k, r);
                    q(k, p) = c * qkp - s * qkr;
                    q(k, r) = s * qkp + c * qkr;
                }
            }
        }
    }
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return a(x, x) > a(y, y); });
    EigResult res;
    res.values.resize(n);
    res.vectors = Matrix(n, n);
    for (int j = 0; j < n; ++j) {
        res.values[j] = a(order[j], order[j]);
        for (int i = 0; i < n; ++i) res.vectors(i, j) = q(i, order[j]);
    }
    return res;
}

// Inverse of a symmetric positive-definite matrix through its
// eigendecomposition (the explicit route the pinv tests compare against).
inline Matrix spd_inverse_eig(const Matrix& s) {
    const EigResult eig = eig_symmetric(s);
    const int n = s.rows();
    Matrix inv(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double sum = 0.0;
            for (int k = 0; k < n; ++k)
                sum += eig.vectors(i, k) * eig.vectors(j, k) / eig.values[k];
            inv(i, j) = sum;
        }
    return inv;
}

// Singular values of x via eigenvalues of the smaller Gram matrix.
inline std::vector<double> singular_values_gram(const Matrix& x) {
    const bool wide = x.cols() > x.rows();
    const int n = wide ? x.rows() : x.cols();
    Matrix gram(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double sum = 0.0;
            if (wide) {
                for (int k = 0; k < x.cols(); ++k) sum += x(i, k) * x(j, k);
            } else {
                for (int k = 0; k < x.rows(); ++k) sum += x(k, i) * x(k, j);
            }
            gram(i, j) = sum;
        }
    const EigResult eig = eig_symmetric(gram);
    std::vector<double> s(eig.values.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::sqrt(std::max(eig.values[i], 0.0));
    return s;
}

// Frobenius distance to the best rank-r approximation: sqrt(sum_{i>r} s_i^2).
inline double eckart_young_error(const Matrix& x, int r) {
    const std::vector<double> s = singular_values_gram(x);
    double sq = 0.0;
    for (std::size_t i = static_cast<std::size_t>(r); i < s.size(); ++i) sq += s[i] * s[i];
    return std::sqrt(sq);
}

// ---------------------------------------------------------------------------
// Kronecker products and column-stacked vec (Hessian checks)
// ---------------------------------------------------------------------------

inline std::vector<double> vec_col(const Matrix& m) {
    std::vector<double> v;
    v.reserve(m.size());
    for (int j = 0; j < m.cols(); ++j)
        for (int i = 0; i < m.rows(); ++i) v.push_back(m(i, j));
    return v;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i1 = 0; i1 < a.rows(); ++i1)
        for (int j1 = 0; j1 < a.cols(); ++j1)
            for (int i2 = 0; i2 < b.rows(); ++i2)
                for (int j2 = 0; j2 < b.cols(); ++j2)
                    out(i1 * b.rows() + i2, j1 * b.cols() + j2) = a(i1, j1) * b(i2, j2);
    return out;
}

inline std::vector<double> mat_vec(const Matrix& m, const std::vector<double>& x) {
    std::vector<double> y(static_cast<std::size_t>(m.rows()), 0.0);
    for (int i = 0; i < m.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < m.cols(); ++j) s += m(i, j) * x[static_cast<std::size_t>(j)];
        y[static_cast<std::size_t>(i)] = s;
    }
    return y;
}

// ---------------------------------------------------------------------------
// Conditioned random matrices built from Gram-Schmidt orthonormal factors
// (no dependence on the library SVD).
// ---------------------------------------------------------------------------

inline Matrix gram_schmidt_orthonormal(Rng& rng, int n, int k) {
    Matrix m = random_matrix(rng, n, k);
    for (int j = 0; j < k; ++j) {
        for (int pass = 0; pass < 2; ++pass) {
            for (int prev = 0; prev < j; ++prev) {
                double dot = 0.0;
                for (int i = 0; i < n; ++i) dot += m(i, j) * m(i, prev);
                for (int i = 0; i < n; ++i) m(i, j) -= dot * m(i, prev);
            }
        }
        double nrm = 0.0;
        for (int i = 0; i < n; ++i) nrm += m(i, j) * m(i, j);
        nrm = std::sqrt(nrm);
        for (int i = 0; i < n; ++i) m(i, j) /= nrm;
    }
    return m;
}

// U diag(s) V^T with singular values log-spaced in [s_max/condition, s_max].
inline Matrix conditioned_matrix(Rng& rng, int p, int q, double condition,
                                 double s_max = 1.0) {
    const int k = std::min(p, q);
    const Matrix u = gram_schmidt_orthonormal(rng, p, k);
    const Matrix v = gram_schmidt_orthonormal(rng, q, k);
    Matrix out(p, q);
    for (int idx = 0; idx < k; ++idx) {
        const double frac = k == 1 ? 0.0 : static_cast<double>(idx) / (k - 1);
        const double s = s_max * std::pow(1.0 / condition, frac);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < q; ++j) out(i, j) += s * u(i, idx) * v(j, idx);
    }
    return out;
}

} // namespace oracles
