// Times the serial reference kernels against the OpenMP backend and verifies
// that both produce bit-identical output on the benchmarked shapes.

#include <chrono>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "fedphish/kernels.hpp"
#include "fedphish/rng.hpp"

using namespace fedphish;

namespace {

using Clock = std::chrono::steady_clock;

std::vector<double> random_values(std::int64_t n, RngStream& rng) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

double time_of(const std::function<void()>& fn, int reps) {
    fn(); // warm up, also populates the output buffer for the equality check
    const auto t0 = Clock::now();
    for (int i = 0; i < reps; ++i) fn();
    return std::chrono::duration<double>(Clock::now() - t0).count() / reps;
}

struct BenchCase {
    std::string name;
    std::function<void()> body;
    double* out;
    std::int64_t out_len;
    double flops; // per invocation, for the Gflop/s column
};

void run_case(const BenchCase& bench, int reps) {
    std::vector<double> serial_out(static_cast<std::size_t>(bench.out_len));

    kernels::set_backend(kernels::Backend::Serial);
    const double t_serial = time_of(bench.body, reps);
    std::memcpy(serial_out.data(), bench.out,
                static_cast<std::size_t>(bench.out_len) * sizeof(double));

    kernels::set_backend(kernels::Backend::OpenMP);
    const double t_omp = time_of(bench.body, reps);

    const bool identical = std::memcmp(serial_out.data(), bench.out,
                                       static_cast<std::size_t>(bench.out_len) *
                                           sizeof(double)) == 0;

    std::printf("%-26s %10.3f %10.3f %8.2fx %9.2f %9.2f   %s\n", bench.name.c_str(),
                t_serial * 1e3, t_omp * 1e3, t_serial / t_omp, bench.flops / t_serial * 1e-9,
                bench.flops / t_omp * 1e-9, identical ? "bit-identical" : "MISMATCH");
}

} // namespace

int main(int argc, char** argv) {
    int reps = 5;
    std::int64_t dim = 512;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--reps") == 0 && i + 1 < argc) reps = std::atoi(argv[++i]);
        else if (std::strcmp(argv[i], "--dim") == 0 && i + 1 < argc) dim = std::atoll(argv[++i]);
        else {
            std::fprintf(stderr, "usage: bench_kernels [--dim N] [--reps R]\n");
            return 2;
        }
    }

    RngStream rng(42);
    const std::int64_t m = dim, k = dim, n = dim;
    std::vector<double> a = random_values(m * k, rng);
    std::vector<double> b = random_values(k * n, rng);
    std::vector<double> bt = random_values(n * k, rng);
    std::vector<double> y(static_cast<std::size_t>(m * n));

    const std::int64_t len = dim * dim * 16;
    std::vector<double> u = random_values(len, rng);
    std::vector<double> v = random_values(len, rng);
    std::vector<double> w(static_cast<std::size_t>(len));

    const double mm_flops = 2.0 * static_cast<double>(m) * k * n;

    std::printf("dim %" PRId64 ", elementwise length %" PRId64 ", %d reps\n\n", dim, len, reps);
    std::printf("%-26s %10s %10s %9s %9s %9s\n", "kernel", "serial ms", "openmp ms", "speedup",
                "ser GF/s", "omp GF/s");

    run_case({"matmul_nn", [&] { kernels::matmul_nn(a.data(), b.data(), y.data(), m, k, n, false); },
              y.data(), m * n, mm_flops},
             reps);
    run_case({"matmul_nt", [&] { kernels::matmul_nt(a.data(), bt.data(), y.data(), m, k, n, false); },
              y.data(), m * n, mm_flops},
             reps);
    run_case({"matmul_tn", [&] { kernels::matmul_tn(a.data(), b.data(), y.data(), m, k, n, false); },
              y.data(), m * n, mm_flops},
             reps);
    run_case({"add", [&] { kernels::add(u.data(), v.data(), w.data(), len); }, w.data(), len,
              static_cast<double>(len)},
             reps);
    run_case({"hadamard", [&] { kernels::hadamard(u.data(), v.data(), w.data(), len); }, w.data(),
              len, static_cast<double>(len)},
             reps);
    run_case({"relu", [&] { kernels::relu(u.data(), w.data(), len); }, w.data(), len,
              static_cast<double>(len)},
             reps);
    run_case({"tanh_forward", [&] { kernels::tanh_forward(u.data(), w.data(), len); }, w.data(),
              len, static_cast<double>(len)},
             reps);
    run_case({"softmax_rows",
              [&] { kernels::softmax_rows(u.data(), w.data(), len / 64, 64); }, w.data(), len,
              5.0 * static_cast<double>(len)},
             reps);

    kernels::set_backend(kernels::Backend::Serial);
    return 0;
}
