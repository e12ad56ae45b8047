#pragma once

#include <cmath>

#include "lorapre/matrix.hpp"

// Serial reference kernels. These are the plain triple-loop / scalar-loop
// versions of the hot operations; the OpenMP kernels in linalg.cpp must
// produce bit-identical results (same per-element summation order). Tests
// use these as oracles, and the bench target compares the two.

namespace lorapre::serial {

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw ShapeError("serial::matmul: inner dimensions " + a.shape_string() +
                         " * " + b.shape_string());
    Matrix out(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (int k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            out(i, j) = s;
        }
    }
    return out;
}

inline Matrix hadamard_square(const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    const double* src = x.data();
    double* dst = out.data();
    for (std::size_t i = 0; i < x.size(); ++i) dst[i] = src[i] * src[i];
    return out;
}

inline Matrix abs_elementwise(const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    const double* src = x.data();
    double* dst = out.data();
    for (std::size_t i = 0; i < x.size(); ++i) dst[i] = std::fabs(src[i]);
    return out;
}

// alpha*a + beta*b, elementwise
inline Matrix add_scaled(double alpha, const Matrix& a, double beta, const Matrix& b) {
    require_same_shape(a, b, "serial::add_scaled");
    Matrix out(a.rows(), a.cols());
    const double* pa = a.data();
    const double* pb = b.data();
    double* dst = out.data();
    for (std::size_t i = 0; i < a.size(); ++i) dst[i] = alpha * pa[i] + beta * pb[i];
    return out;
}

} // namespace lorapre::serial
