#include "lorapre/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>

namespace lorapre {

namespace {

// Parallelize only when there is enough work to amortize the fork/join.
// Elementwise kernels are memory-bound; they need far more elements than the
// O(n^3) product does before threads pay off.
constexpr std::size_t kParallelFlops = 64 * 1024;
constexpr std::size_t kParallelElems = 512 * 1024;

} // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: inner dimensions " + a.shape_string() + " * " +
                         b.shape_string());
    const int m = a.rows(), n = b.cols(), kk = a.cols();
    Matrix out(m, n);
    const std::size_t flops =
        static_cast<std::size_t>(m) * static_cast<std::size_t>(n) * kk;
#pragma omp parallel for schedule(static) if (flops >= kParallelFlops)
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < kk; ++k) s += a(i, k) * b(k, j);
            out(i, j) = s;
        }
    }
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

Matrix hadamard_square(const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    const double* src = x.data();
    double* dst = out.data();
    const std::size_t n = x.size();
#pragma omp parallel for schedule(static) if (n >= kParallelElems)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        dst[i] = src[i] * src[i];
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix out(a.rows(), a.cols());
    const double* pa = a.data();
    const double* pb = b.data();
    double* dst = out.data();
    const std::size_t n = a.size();
#pragma omp parallel for schedule(static) if (n >= kParallelElems)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        dst[i] = pa[i] * pb[i];
    return out;
}

Matrix abs_elementwise(const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    const double* src = x.data();
    double* dst = out.data();
    const std::size_t n = x.size();
#pragma omp parallel for schedule(static) if (n >= kParallelElems)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        dst[i] = std::fabs(src[i]);
    return out;
}

Matrix add_scaled(double alpha, const Matrix& a, double beta, const Matrix& b) {
    require_same_shape(a, b, "add_scaled");
    Matrix out(a.rows(), a.cols());
    const double* pa = a.data();
    const double* pb = b.data();
    double* dst = out.data();
    const std::size_t n = a.size();
#pragma omp parallel for schedule(static) if (n >= kParallelElems)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        dst[i] = alpha * pa[i] + beta * pb[i];
    return out;
}

Matrix scale(const Matrix& a, double s) {
    Matrix out(a.rows(), a.cols());
    const double* pa = a.data();
    double* dst = out.data();
    for (std::size_t i = 0; i < a.size(); ++i) dst[i] = s * pa[i];
    return out;
}

double frobenius_norm(const Matrix& x) {
    // Fixed summation order (linear scan) for determinism.
    double s = 0.0;
    const double* p = x.data();
    for (std::size_t i = 0; i < x.size(); ++i) s += p[i] * p[i];
    return std::sqrt(s);
}

double max_abs(const Matrix& x) {
    double m = 0.0;
    const double* p = x.data();
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::fabs(p[i]));
    return m;
}

double frobenius_dot(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "frobenius_dot");
    double s = 0.0;
    const double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t i = 0; i < a.size(); ++i) s += pa[i] * pb[i];
    return s;
}

// ---------------------------------------------------------------------------
// Damped pseudo-inverses via r x r Cholesky
// ---------------------------------------------------------------------------

namespace {

// In-place lower Cholesky factor of a symmetric positive-definite matrix.
Matrix cholesky(const Matrix& s, const char* who) {
    const int n = s.rows();
    Matrix l(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double sum = s(i, j);
            for (int k = 0; k < j; ++k) sum -= l(i, k) * l(j, k);
            if (i == j) {
                if (!(sum > 0.0) || !std::isfinite(sum))
                    throw NumericError(std::string(who) +
                                       ": Cholesky pivot not positive/finite");
                l(i, i) = std::sqrt(sum);
            } else {
                l(i, j) = sum / l(j, j);
            }
        }
    }
    return l;
}

// Solve (L L^T) X = RHS column by column.
Matrix cholesky_solve(const Matrix& l, const Matrix& rhs) {
    const int n = l.rows();
    Matrix x = rhs;
    for (int col = 0; col < rhs.cols(); ++col) {
        // forward substitution
        for (int i = 0; i < n; ++i) {
            double sum = x(i, col);
            for (int k = 0; k < i; ++k) sum -= l(i, k) * x(k, col);
            x(i, col) = sum / l(i, i);
        }
        // backward substitution
        for (int i = n - 1; i >= 0; --i) {
            double sum = x(i, col);
            for (int k = i + 1; k < n; ++k) sum -= l(k, i) * x(k, col);
            x(i, col) = sum / l(i, i);
        }
    }
    return x;
}

} // namespace

Matrix damped_right_pinv(const Matrix& a, double lambda) {
    if (!(lambda > 0.0))
        throw ArgumentError("damped_right_pinv: lambda must be > 0");
    // S = A A^T + lambda I  (r x r), then result = (S^-1 A)^T.
    const int r = a.rows();
    Matrix s(r, r);
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j <= i; ++j) {
            double sum = 0.0;
            for (int k = 0; k < a.cols(); ++k) sum += a(i, k) * a(j, k);
            s(i, j) = sum;
            s(j, i) = sum;
        }
        s(i, i) += lambda;
    }
    const Matrix l = cholesky(s, "damped_right_pinv");
    const Matrix y = cholesky_solve(l, a); // r x q
    Matrix out = transpose(y);             // q x r
    require_finite(out, "damped_right_pinv");
    return out;
}

Matrix damped_left_pinv(const Matrix& b, double lambda) {
    if (!(lambda > 0.0))
        throw ArgumentError("damped_left_pinv: lambda must be > 0");
    // S = B^T B + lambda I  (r x r), then result = S^-1 B^T.
    const int r = b.cols();
    Matrix s(r, r);
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j <= i; ++j) {
            double sum = 0.0;
            for (int k = 0; k < b.rows(); ++k) sum += b(k, i) * b(k, j);
            s(i, j) = sum;
            s(j, i) = sum;
        }
        s(i, i) += lambda;
    }
    const Matrix l = cholesky(s, "damped_left_pinv");
    Matrix out = cholesky_solve(l, transpose(b)); // r x p
    require_finite(out, "damped_left_pinv");
    return out;
}

// ---------------------------------------------------------------------------
// One-sided Jacobi SVD
// ---------------------------------------------------------------------------

namespace {

constexpr int kJacobiMaxSweeps = 60;

// One-sided Jacobi on X (rows >= cols): orthogonalizes the columns of X by
// right rotations, accumulating them into V. On return X = U * diag(s) and
// V holds the right singular vectors.
void jacobi_onesided(Matrix& x, Matrix& v) {
    const int m = x.rows(), n = x.cols();
    v = Matrix::identity(n);
    const double tol = 1e-15;
    bool converged = false;
    for (int sweep = 0; sweep < kJacobiMaxSweeps && !converged; ++sweep) {
        converged = true;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (int i = 0; i < m; ++i) {
                    app += x(i, p) * x(i, p);
                    aqq += x(i, q) * x(i, q);
                    apq += x(i, p) * x(i, q);
                }
                if (std::fabs(apq) <= tol * std::sqrt(app * aqq)) continue;
                converged = false;
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int i = 0; i < m; ++i) {
                    const double xp = c * x(i, p) - s * x(i, q);
                    const double xq = s * x(i, p) + c * x(i, q);
                    x(i, p) = xp;
                    x(i, q) = xq;
                }
                for (int i = 0; i < n; ++i) {
                    const double vp = c * v(i, p) - s * v(i, q);
                    const double vq = s * v(i, p) + c * v(i, q);
                    v(i, p) = vp;
                    v(i, q) = vq;
                }
            }
        }
    }
    if (!converged)
        throw NumericError("svd_small: Jacobi sweeps did not converge within " +
                           std::to_string(kJacobiMaxSweeps));
}

// Deterministic orthonormal completion for zero singular directions: walk
// the canonical basis, orthogonalize twice against the accepted columns.
void complete_column(Matrix& u, int col, const std::vector<int>& fixed) {
    const int m = u.rows();
    for (int e = 0; e < m; ++e) {
        std::vector<double> cand(m, 0.0);
        cand[e] = 1.0;
        for (int pass = 0; pass < 2; ++pass) {
            for (int f : fixed) {
                double dot = 0.0;
                for (int i = 0; i < m; ++i) dot += cand[i] * u(i, f);
                for (int i = 0; i < m; ++i) cand[i] -= dot * u(i, f);
            }
        }
        double nrm = 0.0;
        for (int i = 0; i < m; ++i) nrm += cand[i] * cand[i];
        nrm = std::sqrt(nrm);
        if (nrm > 0.5) {
            for (int i = 0; i < m; ++i) u(i, col) = cand[i] / nrm;
            return;
        }
    }
    throw NumericError("svd_small: failed to complete orthonormal basis");
}

} // namespace

SvdResult svd_small(const Matrix& input) {
    if (input.rows() > 512 || input.cols() > 512)
        throw ArgumentError("svd_small: desk-scale oracle only (p, q <= 512)");
    require_finite(input, "svd_small: input");

    const bool transposed = input.rows() < input.cols();
    Matrix x = transposed ? transpose(input) : input; // rows >= cols
    const int m = x.rows(), n = x.cols();

    Matrix v(1, 1);
    jacobi_onesided(x, v);

    // Column norms are the singular values.
    std::vector<double> s(n);
    for (int j = 0; j < n; ++j) {
        double t = 0.0;
        for (int i = 0; i < m; ++i) t += x(i, j) * x(i, j);
        s[j] = std::sqrt(t);
    }

    // Sort non-increasing; stable tie-break on original index.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return s[a] > s[b]; });

    Matrix u_sorted(m, n);
    Matrix v_sorted(n, n);
    std::vector<double> s_sorted(n);
    const double zero_tol = (s.empty() ? 0.0 : s[order[0]]) * 1e-13;
    std::vector<int> fixed;
    std::vector<int> deficient;
    for (int j = 0; j < n; ++j) {
        const int src = order[j];
        s_sorted[j] = s[src];
        for (int i = 0; i < n; ++i) v_sorted(i, j) = v(i, src);
        if (s[src] > zero_tol && s[src] > 0.0) {
            for (int i = 0; i < m; ++i) u_sorted(i, j) = x(i, src) / s[src];
            fixed.push_back(j);
        } else {
            s_sorted[j] = s[src]; // keep the (tiny) value; basis filled below
            deficient.push_back(j);
        }
    }
    for (int j : deficient) {
        complete_column(u_sorted, j, fixed);
        fixed.push_back(j);
    }

    // Sign convention: first nonzero entry of each left singular vector is
    // non-negative; flip u and v together so the product is unchanged.
    for (int j = 0; j < n; ++j) {
        double lead = 0.0;
        for (int i = 0; i < m; ++i) {
            if (u_sorted(i, j) != 0.0) {
                lead = u_sorted(i, j);
                break;
            }
        }
        if (lead < 0.0) {
            for (int i = 0; i < m; ++i) u_sorted(i, j) = -u_sorted(i, j);
            for (int i = 0; i < n; ++i) v_sorted(i, j) = -v_sorted(i, j);
        }
    }

    SvdResult result;
    if (transposed) {
        result.u = std::move(v_sorted);
        result.v = std::move(u_sorted);
    } else {
        result.u = std::move(u_sorted);
        result.v = std::move(v_sorted);
    }
    result.singular_values = std::move(s_sorted);
    return result;
}

// ---------------------------------------------------------------------------
// Newton-Schulz quintic
// ---------------------------------------------------------------------------

Matrix newton_schulz5(const Matrix& m, int iterations) {
    return newton_schulz5(m, iterations, NsCoefficients{});
}

Matrix newton_schulz5(const Matrix& m, int iterations, const NsCoefficients& coeff) {
    if (iterations < 1)
        throw ArgumentError("newton_schulz5: iterations must be >= 1");
    if (m.rows() > m.cols()) {
        return transpose(newton_schulz5(transpose(m), iterations, coeff));
    }
    const double norm = frobenius_norm(m);
    const double guard = 1e-12;
    Matrix x = scale(m, 1.0 / (norm + guard)); // zero input stays zero
    for (int it = 0; it < iterations; ++it) {
        const Matrix g = matmul(x, transpose(x));             // p x p, p <= q
        const Matrix h = add_scaled(coeff.b, g, coeff.c, matmul(g, g));
        x = add_scaled(coeff.a, x, 1.0, matmul(h, x));
    }
    require_finite(x, "newton_schulz5");
    return x;
}

} // namespace lorapre
