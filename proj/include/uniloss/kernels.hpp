// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0
//
// Double-precision compute kernels behind the autodiff engine.
//
// Every kernel has a scalar reference implementation and, on x86-64 with
// AVX2+FMA, a vectorized variant. The backend is picked once at startup from
// CPUID and can be overridden with UNILOSS_KERNELS=scalar|avx2 or
// set_backend(). Elementwise kernels are bit-identical across backends; the
// GEMM family reassociates sums and is equivalence-tested against the scalar
// reference instead.

#pragma once

#include <cstddef>

namespace uniloss::kernels {

enum class Backend { scalar, avx2 };

Backend active_backend();
const char* backend_name();
// Throws if the requested backend is unsupported on this CPU.
void set_backend(Backend b);
bool avx2_supported();

// C[m x n] = A[m x k] * B[k x n], accumulating into C when accumulate is set.
void gemm_nn(std::size_t m, std::size_t n, std::size_t k,
             const double* a, const double* b, double* c, bool accumulate);

// C[m x n] = A[m x k] * B[n x k]^T
void gemm_nt(std::size_t m, std::size_t n, std::size_t k,
             const double* a, const double* b, double* c, bool accumulate);

// C[m x n] = A[p x m]^T * B[p x n]
void gemm_tn(std::size_t m, std::size_t n, std::size_t p,
             const double* a, const double* b, double* c, bool accumulate);

// y[i] = max(x[i], 0)
void relu(const double* x, double* y, std::size_t n);

// dx[i] += g[i] * (x[i] > 0)
void relu_backward(const double* x, const double* g, double* dx, std::size_t n);

// y[i] += a * x[i]
void axpy(double a, const double* x, double* y, std::size_t n);

// y[i] = x[i] - z[i]
void sub(const double* x, const double* z, double* y, std::size_t n);

// Fixed-order sequential sum; shared by both backends so reductions are
// deterministic and backend-independent.
double sum(const double* x, std::size_t n);

namespace detail {
struct Funcs {
    void (*gemm_nn)(std::size_t, std::size_t, std::size_t, const double*, const double*,
                    double*, bool);
    void (*gemm_nt)(std::size_t, std::size_t, std::size_t, const double*, const double*,
                    double*, bool);
    void (*gemm_tn)(std::size_t, std::size_t, std::size_t, const double*, const double*,
                    double*, bool);
    void (*relu)(const double*, double*, std::size_t);
    void (*relu_backward)(const double*, const double*, double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*sub)(const double*, const double*, double*, std::size_t);
};
const Funcs& scalar_funcs();
const Funcs* avx2_funcs();  // nullptr when not compiled in / not supported
}  // namespace detail

}  // namespace uniloss::kernels
