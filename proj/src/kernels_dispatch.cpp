// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0

#include "uniloss/kernels.hpp"

#include <cstdlib>
#include <cstring>

#include "uniloss/error.hpp"

namespace uniloss::kernels {

namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

struct State {
    Backend backend;
    const detail::Funcs* funcs;
};

State initial_state() {
    bool want_avx2 = cpu_has_avx2_fma() && detail::avx2_funcs() != nullptr;
    if (const char* env = std::getenv("UNILOSS_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) want_avx2 = false;
        else if (std::strcmp(env, "avx2") == 0 && detail::avx2_funcs() == nullptr)
            throw Error("UNILOSS_KERNELS=avx2 requested but AVX2 kernels are unavailable");
        else if (std::strcmp(env, "avx2") == 0) want_avx2 = true;
    }
    if (want_avx2) return {Backend::avx2, detail::avx2_funcs()};
    return {Backend::scalar, &detail::scalar_funcs()};
}

State& state() {
    static State s = initial_state();
    return s;
}

}  // namespace

bool avx2_supported() { return cpu_has_avx2_fma() && detail::avx2_funcs() != nullptr; }

Backend active_backend() { return state().backend; }

const char* backend_name() {
    return state().backend == Backend::avx2 ? "avx2" : "scalar";
}

void set_backend(Backend b) {
    if (b == Backend::avx2) {
        require(avx2_supported(), "avx2 kernels not supported on this CPU/build");
        state() = {Backend::avx2, detail::avx2_funcs()};
    } else {
        state() = {Backend::scalar, &detail::scalar_funcs()};
    }
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k,
             const double* a, const double* b, double* c, bool accumulate) {
    state().funcs->gemm_nn(m, n, k, a, b, c, accumulate);
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k,
             const double* a, const double* b, double* c, bool accumulate) {
    state().funcs->gemm_nt(m, n, k, a, b, c, accumulate);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t p,
             const double* a, const double* b, double* c, bool accumulate) {
    state().funcs->gemm_tn(m, n, p, a, b, c, accumulate);
}

void relu(const double* x, double* y, std::size_t n) { state().funcs->relu(x, y, n); }

void relu_backward(const double* x, const double* g, double* dx, std::size_t n) {
    state().funcs->relu_backward(x, g, dx, n);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    state().funcs->axpy(a, x, y, n);
}

void sub(const double* x, const double* z, double* y, std::size_t n) {
    state().funcs->sub(x, z, y, n);
}

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

}  // namespace uniloss::kernels
