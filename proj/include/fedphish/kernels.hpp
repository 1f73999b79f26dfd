#ifndef FEDPHISH_KERNELS_HPP
#define FEDPHISH_KERNELS_HPP

#include <cstdint>

namespace fedphish::kernels {

/// Kernel backend. Serial is the reference implementation; OpenMP runs the
/// same loop bodies with the outer loop parallelized. Every kernel assigns
/// each output element to exactly one thread and keeps the inner accumulation
/// order fixed, so both backends produce bit-identical results.
enum class Backend { Serial, OpenMP };

Backend active_backend();
void set_backend(Backend b);
const char* backend_name(Backend b);

// y[m,n] = a[m,k] * b[k,n]   (+= when accumulate)
void matmul_nn(const double* a, const double* b, double* y,
               std::int64_t m, std::int64_t k, std::int64_t n, bool accumulate);

// y[m,n] = a[m,k] * b[n,k]^T  (+= when accumulate)
void matmul_nt(const double* a, const double* b, double* y,
               std::int64_t m, std::int64_t k, std::int64_t n, bool accumulate);

// y[k,n] = a[m,k]^T * b[m,n]  (+= when accumulate)
void matmul_tn(const double* a, const double* b, double* y,
               std::int64_t m, std::int64_t k, std::int64_t n, bool accumulate);

// y[i] = a[i] + b[i]
void add(const double* a, const double* b, double* y, std::int64_t n);

// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::int64_t n);

// y[i] = alpha * x[i]
void scale(double alpha, const double* x, double* y, std::int64_t n);

// y[i] = a[i] * b[i]
void hadamard(const double* a, const double* b, double* y, std::int64_t n);

// y[r,c] = x[r,c] + bias[c]
void add_row_broadcast(const double* x, const double* bias, double* y,
                       std::int64_t rows, std::int64_t cols);

// out[c] += sum_r x[r,c]
void col_sum_accumulate(const double* x, double* out, std::int64_t rows, std::int64_t cols);

// y[i] = max(0, x[i])
void relu(const double* x, double* y, std::int64_t n);

// dx[i] += dy[i] * (x[i] > 0)
void relu_backward(const double* x, const double* dy, double* dx, std::int64_t n);

// y[i] = tanh(x[i])
void tanh_forward(const double* x, double* y, std::int64_t n);

// dx[i] += dy[i] * (1 - y[i]^2)
void tanh_backward(const double* y, const double* dy, double* dx, std::int64_t n);

// Row-wise softmax with max subtraction.
void softmax_rows(const double* x, double* y, std::int64_t rows, std::int64_t cols);

// dx[r,c] += y[r,c] * (dy[r,c] - dot(dy[r,:], y[r,:]))
void softmax_rows_backward(const double* y, const double* dy, double* dx,
                           std::int64_t rows, std::int64_t cols);

} // namespace fedphish::kernels

#endif
