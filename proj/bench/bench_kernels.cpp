// Benchmarks the OpenMP kernels against their serial references and a full
// profiling run at 1 vs N threads. Also asserts bit-identical outputs, since
// the parallel paths must never change results.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>

#include "farsim/dataio.hpp"
#include "farsim/matrix.hpp"
#include "farsim/numnet.hpp"
#include "farsim/resilience.hpp"
#include "farsim/rng.hpp"
#include "farsim/threads.hpp"

using namespace farsim;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Matrix random_matrix(int rows, int cols, Rng& rng) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.next_normal();
    return m;
}

bool bits_equal(const Matrix& a, const Matrix& b) {
    return a.same_shape(b) && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

using Kernel = void (*)(const Matrix&, const Matrix&, Matrix&);

void bench_kernel(const char* name, Kernel serial, Kernel parallel, const Matrix& a,
                  const Matrix& b, double flops, int reps) {
    Matrix c_serial, c_parallel;
    serial(a, b, c_serial);  // warm
    auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r) serial(a, b, c_serial);
    const double t_serial = seconds_since(t0) / reps;

    parallel(a, b, c_parallel);
    t0 = Clock::now();
    for (int r = 0; r < reps; ++r) parallel(a, b, c_parallel);
    const double t_parallel = seconds_since(t0) / reps;

    std::printf("%-14s serial %8.3f ms (%6.2f GF/s)   parallel %8.3f ms (%6.2f GF/s)   "
                "speedup %.2fx   identical %s\n",
                name, t_serial * 1e3, flops / t_serial * 1e-9, t_parallel * 1e3,
                flops / t_parallel * 1e-9, t_serial / t_parallel,
                bits_equal(c_serial, c_parallel) ? "yes" : "NO");
}

void bench_profile(int threads_hi) {
    const NetworkSpec spec{{16, 32, 4}};
    const auto [train_data, test_data] = synth_clusters(4, 16, 100, 0.8, 7);
    const NetworkParams params0 = init_params(spec, 11);
    TrainConfig tc;
    tc.learning_rate = 0.1;
    tc.momentum = 0.9;
    tc.batch_size = 16;
    tc.seed = 3;
    auto pre = train(params0, train_data, test_data, 15, tc);

    ProfileConfig pcfg;
    pcfg.fault_rates = {0.0, 0.1, 0.2, 0.3};
    pcfg.repeats = 4;
    pcfg.max_epochs = 20;
    pcfg.accuracy_target = 0.9;
    pcfg.train_cfg = tc;
    pcfg.base_seed = 99;
    const ArrayConfig array{8, 8};

    set_jobs(1);
    auto t0 = Clock::now();
    const ResilienceTable t1 = profile(pre.first, spec, train_data, test_data, array, pcfg);
    const double serial = seconds_since(t0);

    set_jobs(threads_hi);
    t0 = Clock::now();
    const ResilienceTable t2 = profile(pre.first, spec, train_data, test_data, array, pcfg);
    const double parallel = seconds_since(t0);

    bool same = t1.entries.size() == t2.entries.size();
    for (std::size_t i = 0; same && i < t1.entries.size(); ++i)
        same = t1.entries[i].epochs_per_repeat == t2.entries[i].epochs_per_repeat;
    std::printf("profile grid   1 thread %8.3f ms            %d threads %8.3f ms            "
                "speedup %.2fx   identical %s\n",
                serial * 1e3, threads_hi, parallel * 1e3, serial / parallel, same ? "yes" : "NO");
}

}  // namespace

int main(int argc, char** argv) {
    int size = 256;
    int reps = 5;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--size" && i + 1 < argc) size = std::stoi(argv[++i]);
        else if (arg == "--reps" && i + 1 < argc) reps = std::stoi(argv[++i]);
        else {
            std::fprintf(stderr, "usage: %s [--size N] [--reps N]\n", argv[0]);
            return 2;
        }
    }

    std::printf("threads available: %d, matrix size %dx%d\n", max_jobs(), size, size);
    Rng rng(42);
    const double flops = 2.0 * size * size * size;
    const Matrix a = random_matrix(size, size, rng);
    const Matrix b = random_matrix(size, size, rng);
    bench_kernel("matmul", linalg::matmul_serial, linalg::matmul, a, b, flops, reps);
    bench_kernel("matmul_transa", linalg::matmul_transa_serial, linalg::matmul_transa, a, b, flops,
                 reps);
    bench_kernel("matmul_transb", linalg::matmul_transb_serial, linalg::matmul_transb, a, b, flops,
                 reps);
    bench_profile(max_jobs());
    return 0;
}
