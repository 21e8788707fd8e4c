// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0
//
// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma on x86-64 and is only reachable through the dispatch table
// after a CPUID check.
//
// GEMM kernels use 4x8 register tiles with FMA; they reassociate sums and are
// held to a relative tolerance against the scalar reference. Elementwise
// kernels keep the scalar rounding sequence (separate mul/add, blend instead
// of masked add) so their results are bit-identical to the reference.

#include "uniloss/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace uniloss::kernels::detail {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swap = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swap));
}

// Scalar cleanup for arbitrary [i0,i1) x [j0,j1) blocks of C = A*B.
void nn_edge(std::size_t i0, std::size_t i1, std::size_t j0, std::size_t j1, std::size_t n,
             std::size_t k, const double* a, const double* b, double* c, bool accumulate) {
    for (std::size_t i = i0; i < i1; ++i)
        for (std::size_t j = j0; j < j1; ++j) {
            double acc = accumulate ? c[i * n + j] : 0.0;
            for (std::size_t l = 0; l < k; ++l) acc += a[i * k + l] * b[l * n + j];
            c[i * n + j] = acc;
        }
}

void gemm_nn_avx2(std::size_t m, std::size_t n, std::size_t k,
                  const double* a, const double* b, double* c, bool accumulate) {
    const std::size_t mt = m - m % 4;
    const std::size_t nt = n - n % 8;
    for (std::size_t i = 0; i < mt; i += 4) {
        for (std::size_t j = 0; j < nt; j += 8) {
            __m256d acc[4][2];
            for (int r = 0; r < 4; ++r) {
                if (accumulate) {
                    acc[r][0] = _mm256_loadu_pd(c + (i + r) * n + j);
                    acc[r][1] = _mm256_loadu_pd(c + (i + r) * n + j + 4);
                } else {
                    acc[r][0] = _mm256_setzero_pd();
                    acc[r][1] = _mm256_setzero_pd();
                }
            }
            for (std::size_t l = 0; l < k; ++l) {
                const __m256d b0 = _mm256_loadu_pd(b + l * n + j);
                const __m256d b1 = _mm256_loadu_pd(b + l * n + j + 4);
                for (int r = 0; r < 4; ++r) {
                    const __m256d av = _mm256_set1_pd(a[(i + r) * k + l]);
                    acc[r][0] = _mm256_fmadd_pd(av, b0, acc[r][0]);
                    acc[r][1] = _mm256_fmadd_pd(av, b1, acc[r][1]);
                }
            }
            for (int r = 0; r < 4; ++r) {
                _mm256_storeu_pd(c + (i + r) * n + j, acc[r][0]);
                _mm256_storeu_pd(c + (i + r) * n + j + 4, acc[r][1]);
            }
        }
    }
    if (nt < n) nn_edge(0, mt, nt, n, n, k, a, b, c, accumulate);
    if (mt < m) nn_edge(mt, m, 0, n, n, k, a, b, c, accumulate);
}

void gemm_nt_avx2(std::size_t m, std::size_t n, std::size_t k,
                  const double* a, const double* b, double* c, bool accumulate) {
    const std::size_t kt = k - k % 4;
    const std::size_t nt = n - n % 4;
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        std::size_t j = 0;
        for (; j < nt; j += 4) {
            __m256d acc0 = _mm256_setzero_pd();
            __m256d acc1 = _mm256_setzero_pd();
            __m256d acc2 = _mm256_setzero_pd();
            __m256d acc3 = _mm256_setzero_pd();
            const double* b0 = b + j * k;
            const double* b1 = b + (j + 1) * k;
            const double* b2 = b + (j + 2) * k;
            const double* b3 = b + (j + 3) * k;
            for (std::size_t l = 0; l < kt; l += 4) {
                const __m256d av = _mm256_loadu_pd(arow + l);
                acc0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b0 + l), acc0);
                acc1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b1 + l), acc1);
                acc2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b2 + l), acc2);
                acc3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b3 + l), acc3);
            }
            double d0 = hsum(acc0), d1 = hsum(acc1), d2 = hsum(acc2), d3 = hsum(acc3);
            for (std::size_t l = kt; l < k; ++l) {
                d0 += arow[l] * b0[l];
                d1 += arow[l] * b1[l];
                d2 += arow[l] * b2[l];
                d3 += arow[l] * b3[l];
            }
            double* crow = c + i * n + j;
            if (accumulate) {
                crow[0] += d0; crow[1] += d1; crow[2] += d2; crow[3] += d3;
            } else {
                crow[0] = d0; crow[1] = d1; crow[2] = d2; crow[3] = d3;
            }
        }
        for (; j < n; ++j) {
            const double* brow = b + j * k;
            double acc = 0.0;
            for (std::size_t l = 0; l < k; ++l) acc += arow[l] * brow[l];
            if (accumulate)
                c[i * n + j] += acc;
            else
                c[i * n + j] = acc;
        }
    }
}

void tn_edge(std::size_t i0, std::size_t i1, std::size_t j0, std::size_t j1, std::size_t m,
             std::size_t n, std::size_t p, const double* a, const double* b, double* c,
             bool accumulate) {
    for (std::size_t i = i0; i < i1; ++i)
        for (std::size_t j = j0; j < j1; ++j) {
            double acc = accumulate ? c[i * n + j] : 0.0;
            for (std::size_t t = 0; t < p; ++t) acc += a[t * m + i] * b[t * n + j];
            c[i * n + j] = acc;
        }
}

void gemm_tn_avx2(std::size_t m, std::size_t n, std::size_t p,
                  const double* a, const double* b, double* c, bool accumulate) {
    const std::size_t mt = m - m % 4;
    const std::size_t nt = n - n % 8;
    for (std::size_t i = 0; i < mt; i += 4) {
        for (std::size_t j = 0; j < nt; j += 8) {
            __m256d acc[4][2];
            for (int r = 0; r < 4; ++r) {
                if (accumulate) {
                    acc[r][0] = _mm256_loadu_pd(c + (i + r) * n + j);
                    acc[r][1] = _mm256_loadu_pd(c + (i + r) * n + j + 4);
                } else {
                    acc[r][0] = _mm256_setzero_pd();
                    acc[r][1] = _mm256_setzero_pd();
                }
            }
            for (std::size_t t = 0; t < p; ++t) {
                const __m256d b0 = _mm256_loadu_pd(b + t * n + j);
                const __m256d b1 = _mm256_loadu_pd(b + t * n + j + 4);
                const double* acol = a + t * m + i;
                for (int r = 0; r < 4; ++r) {
                    const __m256d av = _mm256_set1_pd(acol[r]);
                    acc[r][0] = _mm256_fmadd_pd(av, b0, acc[r][0]);
                    acc[r][1] = _mm256_fmadd_pd(av, b1, acc[r][1]);
                }
            }
            for (int r = 0; r < 4; ++r) {
                _mm256_storeu_pd(c + (i + r) * n + j, acc[r][0]);
                _mm256_storeu_pd(c + (i + r) * n + j + 4, acc[r][1]);
            }
        }
    }
    if (nt < n) tn_edge(0, mt, nt, n, m, n, p, a, b, c, accumulate);
    if (mt < m) tn_edge(mt, m, 0, n, m, n, p, a, b, c, accumulate);
}

void relu_avx2(const double* x, double* y, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward_avx2(const double* x, const double* g, double* dx, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d xv = _mm256_loadu_pd(x + i);
        const __m256d dv = _mm256_loadu_pd(dx + i);
        const __m256d sum = _mm256_add_pd(dv, _mm256_loadu_pd(g + i));
        const __m256d mask = _mm256_cmp_pd(xv, zero, _CMP_GT_OQ);
        // blend keeps dx bits untouched in masked-out lanes
        _mm256_storeu_pd(dx + i, _mm256_blendv_pd(dv, sum, mask));
    }
    for (; i < n; ++i)
        if (x[i] > 0.0) dx[i] += g[i];
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    // separate mul/add, not fmadd: keeps the scalar two-rounding sequence
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(av, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void sub_avx2(const double* x, const double* z, double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(z + i)));
    for (; i < n; ++i) y[i] = x[i] - z[i];
}

}  // namespace

const Funcs* avx2_funcs() {
    static const Funcs f = {gemm_nn_avx2, gemm_nt_avx2, gemm_tn_avx2,
                            relu_avx2,    relu_backward_avx2,
                            axpy_avx2,    sub_avx2};
    return &f;
}

}  // namespace uniloss::kernels::detail

#else

namespace uniloss::kernels::detail {
const Funcs* avx2_funcs() { return nullptr; }
}  // namespace uniloss::kernels::detail

#endif
