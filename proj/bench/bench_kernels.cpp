// Kernel benchmark: OpenMP kernels against the serial reference. The two
// paths must agree bit for bit (fixed per-element summation order); the
// table reports timings and the max absolute difference as a cross-check.
//
//   lorapre_bench [--quick]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lorapre/linalg.hpp"
#include "lorapre/momentum.hpp"
#include "lorapre/rng.hpp"
#include "lorapre/serial_kernels.hpp"

using namespace lorapre;

namespace {

Matrix random_matrix(Rng& rng, int p, int q) {
    Matrix m(p, q);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, 1.0);
    return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::fabs(a.data()[i] - b.data()[i]));
    return worst;
}

template <typename F>
double time_ms(F&& body, int repeats) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < repeats; ++i) body();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / repeats;
}

} // namespace

int main(int argc, char** argv) {
    const bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
    const std::vector<int> sizes = quick ? std::vector<int>{64, 128}
                                         : std::vector<int>{64, 256, 512};
    const int repeats = quick ? 3 : 5;

#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (no OpenMP)\n");
#endif
    std::printf("%-28s %12s %12s %9s %12s\n", "kernel", "serial ms", "parallel ms",
                "speedup", "max |diff|");

    int mismatches = 0;
    Rng rng(1);
    for (int n : sizes) {
        const Matrix a = random_matrix(rng, n, n);
        const Matrix b = random_matrix(rng, n, n);

        Matrix out_serial(1, 1), out_parallel(1, 1);
        const double t_serial =
            time_ms([&] { out_serial = serial::matmul(a, b); }, repeats);
        const double t_parallel = time_ms([&] { out_parallel = matmul(a, b); }, repeats);
        const double diff = max_abs_diff(out_serial, out_parallel);
        if (diff != 0.0) ++mismatches;
        std::printf("%-28s %12.3f %12.3f %8.2fx %12g\n",
                    ("matmul " + std::to_string(n) + "x" + std::to_string(n)).c_str(),
                    t_serial, t_parallel, t_serial / t_parallel, diff);

    }

    // elementwise kernels are worth threading only at much larger sizes
    for (int n : {512, 1024}) {
        const Matrix a = random_matrix(rng, n, n);
        Matrix out_serial(1, 1), out_parallel(1, 1);
        const double e_serial =
            time_ms([&] { out_serial = serial::hadamard_square(a); }, repeats * 10);
        const double e_parallel =
            time_ms([&] { out_parallel = hadamard_square(a); }, repeats * 10);
        const double ediff = max_abs_diff(out_serial, out_parallel);
        if (ediff != 0.0) ++mismatches;
        std::printf("%-28s %12.3f %12.3f %8.2fx %12g\n",
                    ("hadamard_square " + std::to_string(n) + "x" + std::to_string(n))
                        .c_str(),
                    e_serial, e_parallel, e_serial / e_parallel, ediff);
    }

    // a full factor update at a typical desk-scale shape
    {
        const int p = quick ? 128 : 512, q = quick ? 96 : 384, r = 16;
        const Matrix g = random_matrix(rng, p, q);
        LowRankMoment state = init_low_rank(p, q, r, 1e-8, 3);
        state = first_moment_update(state, g, 0.05); // make B nonzero
        const double t_update =
            time_ms([&] { state = first_moment_update(state, g, 0.05); }, repeats);
        std::printf("%-28s %12s %12.3f\n",
                    ("factor_update " + std::to_string(p) + "x" + std::to_string(q) +
                     " r" + std::to_string(r))
                        .c_str(),
                    "-", t_update);

        const Matrix m = random_matrix(rng, quick ? 96 : 256, quick ? 128 : 320);
        const double t_ns = time_ms([&] { (void)newton_schulz5(m, 5); }, repeats);
        std::printf("%-28s %12s %12.3f\n", "newton_schulz5 (5 iters)", "-", t_ns);
    }

    if (mismatches != 0) {
        std::printf("FAIL: %d kernel(s) diverged from the serial reference\n",
                    mismatches);
        return 1;
    }
    std::printf("all parallel kernels bit-identical to the serial reference\n");
    return 0;
}
