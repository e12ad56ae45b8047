#pragma once

#include <vector>

#include "lorapre/matrix.hpp"

namespace lorapre {

// ---------------------------------------------------------------------------
// Dense kernels (OpenMP-parallel over output rows for large inputs; bit-
// identical to the serial reference in serial_kernels.hpp because every
// output element keeps its fixed summation order).
// ---------------------------------------------------------------------------

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix hadamard_square(const Matrix& x);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix abs_elementwise(const Matrix& x);
Matrix add_scaled(double alpha, const Matrix& a, double beta, const Matrix& b);
Matrix scale(const Matrix& a, double s);

double frobenius_norm(const Matrix& x);
double max_abs(const Matrix& x); // elementwise infinity norm
double frobenius_dot(const Matrix& a, const Matrix& b);

// ---------------------------------------------------------------------------
// Tikhonov-damped pseudo-inverses. Both are computed through an r x r
// symmetric positive-definite Cholesky solve (r = the small factor
// dimension); no p x p or q x q inverse is ever formed. Spectral norm of
// either result is at most 1/(2*sqrt(lambda)).
// ---------------------------------------------------------------------------

// A^T (A A^T + lambda I)^-1 for A of shape r x q; result q x r.
Matrix damped_right_pinv(const Matrix& a, double lambda);

// (B^T B + lambda I)^-1 B^T for B of shape p x r; result r x p.
Matrix damped_left_pinv(const Matrix& b, double lambda);

// ---------------------------------------------------------------------------
// Small-matrix SVD oracle: one-sided Jacobi on the smaller Gram dimension,
// fixed sweep order, deterministic sign convention (first nonzero entry of
// each left singular vector is non-negative). Desk scale only (p, q <= 512).
// ---------------------------------------------------------------------------

struct SvdResult {
    Matrix u;                           // p x k
    std::vector<double> singular_values; // length k, non-increasing
    Matrix v;                           // q x k
};

SvdResult svd_small(const Matrix& x);

// ---------------------------------------------------------------------------
// Newton-Schulz quintic orthogonalizer: X_0 = m / (|m|_F + 1e-12), then
// X <- a X + b (X X^T) X + c (X X^T)^2 X, operating on the transpose when
// rows > cols. Returns zero for zero input. The default coefficients keep
// every output singular value inside [0.7, 1.3] after 5 iterations for
// inputs with condition number <= 10.
// ---------------------------------------------------------------------------

struct NsCoefficients {
    double a = 3.0;
    double b = -3.2;
    double c = 1.2;
};

Matrix newton_schulz5(const Matrix& m, int iterations);
Matrix newton_schulz5(const Matrix& m, int iterations, const NsCoefficients& coeff);

} // namespace lorapre
