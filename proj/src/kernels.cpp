#include "fedphish/kernels.hpp"

#include <atomic>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fedphish::kernels {

namespace {

std::atomic<Backend>& backend_slot() {
#ifdef _OPENMP
    static std::atomic<Backend> slot{Backend::OpenMP};
#else
    static std::atomic<Backend> slot{Backend::Serial};
#endif
    return slot;
}

// Below this many output elements the OpenMP variants fall through to the
// serial loop; spawning a team costs more than the work itself.
constexpr std::int64_t kParallelCutoff = 4096;

bool use_parallel(std::int64_t work) {
#ifdef _OPENMP
    return backend_slot().load(std::memory_order_relaxed) == Backend::OpenMP &&
           work >= kParallelCutoff;
#else
    (void)work;
    return false;
#endif
}

inline void matmul_nn_row(const double* __restrict a, const double* __restrict b,
                          double* __restrict yr, std::int64_t k, std::int64_t n) {
    for (std::int64_t p = 0; p < k; ++p) {
        const double av = a[p];
        const double* br = b + p * n;
        for (std::int64_t j = 0; j < n; ++j) yr[j] += av * br[j];
    }
}

} // namespace

Backend active_backend() { return backend_slot().load(std::memory_order_relaxed); }
void set_backend(Backend b) { backend_slot().store(b, std::memory_order_relaxed); }

const char* backend_name(Backend b) {
    return b == Backend::Serial ? "serial" : "openmp";
}

void matmul_nn(const double* a, const double* b, double* y,
               std::int64_t m, std::int64_t k, std::int64_t n, bool accumulate) {
    if (use_parallel(m * n * k)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < m; ++i) {
            double* yr = y + i * n;
            if (!accumulate)
                for (std::int64_t j = 0; j < n; ++j) yr[j] = 0.0;
            matmul_nn_row(a + i * k, b, yr, k, n);
        }
#endif
        return;
    }
    for (std::int64_t i = 0; i < m; ++i) {
        double* yr = y + i * n;
        if (!accumulate)
            for (std::int64_t j = 0; j < n; ++j) yr[j] = 0.0;
        matmul_nn_row(a + i * k, b, yr, k, n);
    }
}

void matmul_nt(const double* a, const double* b, double* y,
               std::int64_t m, std::int64_t k, std::int64_t n, bool accumulate) {
    if (use_parallel(m * n * k)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < m; ++i) {
            const double* ar = a + i * k;
            double* yr = y + i * n;
            for (std::int64_t j = 0; j < n; ++j) {
                const double* br = b + j * k;
                double acc = 0.0;
                for (std::int64_t p = 0; p < k; ++p) acc += ar[p] * br[p];
                yr[j] = accumulate ? yr[j] + acc : acc;
            }
        }
#endif
        return;
    }
    for (std::int64_t i = 0; i < m; ++i) {
        const double* ar = a + i * k;
        double* yr = y + i * n;
        for (std::int64_t j = 0; j < n; ++j) {
            const double* br = b + j * k;
            double acc = 0.0;
            for (std::int64_t p = 0; p < k; ++p) acc += ar[p] * br[p];
            yr[j] = accumulate ? yr[j] + acc : acc;
        }
    }
}

void matmul_tn(const double* a, const double* b, double* y,
               std::int64_t m, std::int64_t k, std::int64_t n, bool accumulate) {
    // y[k,n]; parallel over rows of y, i.e. columns of a.
    if (use_parallel(m * n * k)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (std::int64_t p = 0; p < k; ++p) {
            double* yr = y + p * n;
            if (!accumulate)
                for (std::int64_t j = 0; j < n; ++j) yr[j] = 0.0;
            for (std::int64_t i = 0; i < m; ++i) {
                const double av = a[i * k + p];
                const double* br = b + i * n;
                for (std::int64_t j = 0; j < n; ++j) yr[j] += av * br[j];
            }
        }
#endif
        return;
    }
    for (std::int64_t p = 0; p < k; ++p) {
        double* yr = y + p * n;
        if (!accumulate)
            for (std::int64_t j = 0; j < n; ++j) yr[j] = 0.0;
        for (std::int64_t i = 0; i < m; ++i) {
            const double av = a[i * k + p];
            const double* br = b + i * n;
            for (std::int64_t j = 0; j < n; ++j) yr[j] += av * br[j];
        }
    }
}

void add(const double* a, const double* b, double* y, std::int64_t n) {
    if (use_parallel(n)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
#endif
        return;
    }
    for (std::int64_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
}

void axpy(double alpha, const double* x, double* y, std::int64_t n) {
    if (use_parallel(n)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
#endif
        return;
    }
    for (std::int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, const double* x, double* y, std::int64_t n) {
    if (use_parallel(n)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) y[i] = alpha * x[i];
#endif
        return;
    }
    for (std::int64_t i = 0; i < n; ++i) y[i] = alpha * x[i];
}

void hadamard(const double* a, const double* b, double* y, std::int64_t n) {
    if (use_parallel(n)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
#endif
        return;
    }
    for (std::int64_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
}

void add_row_broadcast(const double* x, const double* bias, double* y,
                       std::int64_t rows, std::int64_t cols) {
    if (use_parallel(rows * cols)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (std::int64_t r = 0; r < rows; ++r) {
            const double* xr = x + r * cols;
            double* yr = y + r * cols;
            for (std::int64_t c = 0; c < cols; ++c) yr[c] = xr[c] + bias[c];
        }
#endif
        return;
    }
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* xr = x + r * cols;
        double* yr = y + r * cols;
        for (std::int64_t c = 0; c < cols; ++c) yr[c] = xr[c] + bias[c];
    }
}

void col_sum_accumulate(const double* x, double* out, std::int64_t rows, std::int64_t cols) {
    if (use_parallel(rows * cols)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (std::int64_t c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (std::int64_t r = 0; r < rows; ++r) acc += x[r * cols + c];
            out[c] += acc;
        }
#endif
        return;
    }
    for (std::int64_t c = 0; c < cols; ++c) {
        double acc = 0.0;
        for (std::int64_t r = 0; r < rows; ++r) acc += x[r * cols + c];
        out[c] += acc;
    }
}

void relu(const double* x, double* y, std::int64_t n) {
    if (use_parallel(n)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
#endif
        return;
    }
    for (std::int64_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* x, const double* dy, double* dx, std::int64_t n) {
    if (use_parallel(n)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i)
            if (x[i] > 0.0) dx[i] += dy[i];
#endif
        return;
    }
    for (std::int64_t i = 0; i < n; ++i)
        if (x[i] > 0.0) dx[i] += dy[i];
}

void tanh_forward(const double* x, double* y, std::int64_t n) {
    if (use_parallel(n)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
#endif
        return;
    }
    for (std::int64_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

void tanh_backward(const double* y, const double* dy, double* dx, std::int64_t n) {
    if (use_parallel(n)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) dx[i] += dy[i] * (1.0 - y[i] * y[i]);
#endif
        return;
    }
    for (std::int64_t i = 0; i < n; ++i) dx[i] += dy[i] * (1.0 - y[i] * y[i]);
}

namespace {

inline void softmax_row(const double* xr, double* yr, std::int64_t cols) {
    double mx = xr[0];
    for (std::int64_t c = 1; c < cols; ++c)
        if (xr[c] > mx) mx = xr[c];
    double sum = 0.0;
    for (std::int64_t c = 0; c < cols; ++c) {
        yr[c] = std::exp(xr[c] - mx);
        sum += yr[c];
    }
    const double inv = 1.0 / sum;
    for (std::int64_t c = 0; c < cols; ++c) yr[c] *= inv;
}

inline void softmax_row_backward(const double* yr, const double* dyr, double* dxr,
                                 std::int64_t cols) {
    double dot = 0.0;
    for (std::int64_t c = 0; c < cols; ++c) dot += dyr[c] * yr[c];
    for (std::int64_t c = 0; c < cols; ++c) dxr[c] += yr[c] * (dyr[c] - dot);
}

} // namespace

void softmax_rows(const double* x, double* y, std::int64_t rows, std::int64_t cols) {
    if (use_parallel(rows * cols)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (std::int64_t r = 0; r < rows; ++r)
            softmax_row(x + r * cols, y + r * cols, cols);
#endif
        return;
    }
    for (std::int64_t r = 0; r < rows; ++r)
        softmax_row(x + r * cols, y + r * cols, cols);
}

void softmax_rows_backward(const double* y, const double* dy, double* dx,
                           std::int64_t rows, std::int64_t cols) {
    if (use_parallel(rows * cols)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (std::int64_t r = 0; r < rows; ++r)
            softmax_row_backward(y + r * cols, dy + r * cols, dx + r * cols, cols);
#endif
        return;
    }
    for (std::int64_t r = 0; r < rows; ++r)
        softmax_row_backward(y + r * cols, dy + r * cols, dx + r * cols, cols);
}

} // namespace fedphish::kernels
