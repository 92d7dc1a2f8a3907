// Times the OpenMP matrix kernels against their serial reference twins and
// confirms the outputs stay bit-identical. Run with OMP_NUM_THREADS set to
// taste.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fedlf/matrix.hpp"
#include "fedlf/rng.hpp"

namespace {

using fedlf::Matrix;

Matrix random_matrix(int rows, int cols, std::mt19937_64& rng) {
    Matrix m(rows, cols);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : m.data) v = normal(rng);
    return m;
}

double time_best_of(int reps, const std::function<void()>& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best,
                        std::chrono::duration<double, std::milli>(t1 - t0)
                            .count());
    }
    return best;
}

struct Case {
    const char* name;
    std::function<Matrix()> parallel;
    std::function<Matrix()> serial;
};

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("openmp enabled, max threads %d\n", omp_get_max_threads());
#else
    std::printf("built without openmp; both columns run serial code\n");
#endif

    auto rng = fedlf::make_stream(7, fedlf::StreamTag::kEvalData);
    const int reps = 5;
    const int sizes[][3] = {
        {64, 64, 64}, {256, 256, 256}, {512, 512, 512}, {1024, 256, 128},
    };

    std::printf("%-28s %12s %12s %9s %s\n", "kernel", "parallel ms",
                "serial ms", "speedup", "bit-identical");
    bool all_identical = true;

    for (const auto& s : sizes) {
        const int m = s[0], k = s[1], n = s[2];
        const Matrix a = random_matrix(m, k, rng);
        const Matrix b = random_matrix(k, n, rng);
        const Matrix bt = fedlf::transpose(b);
        const Matrix at = fedlf::transpose(a);

        char label[64];
        const Case cases[] = {
            {"matmul",
             [&] { return fedlf::matmul(a, b); },
             [&] { return fedlf::reference::matmul(a, b); }},
            {"matmul_nt",
             [&] { return fedlf::matmul_nt(a, bt); },
             [&] { return fedlf::reference::matmul_nt(a, bt); }},
            {"matmul_tn",
             [&] { return fedlf::matmul_tn(at, b); },
             [&] { return fedlf::reference::matmul_tn(at, b); }},
            {"softmax_log_probs",
             [&] { return fedlf::softmax_log_probs(a); },
             [&] { return fedlf::reference::softmax_log_probs(a); }},
        };

        for (const Case& c : cases) {
            const Matrix out_par = c.parallel();
            const Matrix out_ser = c.serial();
            const bool identical =
                fedlf::max_abs_diff(out_par, out_ser) == 0.0;
            all_identical = all_identical && identical;

            const double t_par = time_best_of(reps, [&] { c.parallel(); });
            const double t_ser = time_best_of(reps, [&] { c.serial(); });
            std::snprintf(label, sizeof label, "%s %dx%dx%d", c.name, m, k, n);
            std::printf("%-28s %12.3f %12.3f %8.2fx %s\n", label, t_par, t_ser,
                        t_ser / t_par, identical ? "yes" : "NO");
        }
    }

    if (!all_identical) {
        std::printf("mismatch between parallel and serial kernels\n");
        return 1;
    }
    return 0;
}
