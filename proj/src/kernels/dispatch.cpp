#include "twohop/kernels/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

#include "twohop/kernels/variants.hpp"

namespace twohop::kernels {

namespace detail {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

bool cpu_has_avx512() {
#if defined(__x86_64__) || defined(__i386__)
    return cpu_has_avx2() && __builtin_cpu_supports("avx512f");
#else
    return false;
#endif
}

namespace {

Backend pick_default() {
    if (const char* env = std::getenv("TWOHOP_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
        if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) return Backend::avx2;
        if (std::strcmp(env, "avx512") == 0 && cpu_has_avx512()) return Backend::avx512;
        // Unknown or unsupported request: fall through to auto-detect.
    }
    if (cpu_has_avx512()) return Backend::avx512;
    if (cpu_has_avx2()) return Backend::avx2;
    return Backend::scalar;
}

Backend g_backend = pick_default();

const OpsTable& table_for(Backend b) {
    switch (b) {
        case Backend::avx512: return avx512_table();
        case Backend::avx2: return avx2_table();
        default: return scalar_table();
    }
}

const OpsTable* g_ops = &table_for(g_backend);

}  // namespace

}  // namespace detail

Backend active_backend() { return detail::g_backend; }

bool backend_supported(Backend b) {
    switch (b) {
        case Backend::scalar: return true;
        case Backend::avx2: return detail::cpu_has_avx2();
        case Backend::avx512: return detail::cpu_has_avx512();
    }
    return false;
}

void set_backend(Backend b) {
    if (!backend_supported(b))
        throw std::runtime_error(std::string("kernel backend not supported on this cpu: ") +
                                 backend_name(b));
    detail::g_backend = b;
    detail::g_ops = &detail::table_for(b);
}

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
        case Backend::avx512: return "avx512";
    }
    return "?";
}

void gemm_nt(const float* a, const float* b, float* c, int m, int n, int k, bool accumulate) {
    detail::g_ops->gemm_nt(a, b, c, m, n, k, accumulate);
}
void gemm_nn(const float* a, const float* b, float* c, int m, int n, int k, bool accumulate) {
    detail::g_ops->gemm_nn(a, b, c, m, n, k, accumulate);
}
void gemm_tn(const float* a, const float* b, float* c, int m, int n, int k, bool accumulate) {
    detail::g_ops->gemm_tn(a, b, c, m, n, k, accumulate);
}
float dot(const float* a, const float* b, int n) { return detail::g_ops->dot(a, b, n); }
void axpy(float alpha, const float* x, float* y, int n) { detail::g_ops->axpy(alpha, x, y, n); }
void scale(float* x, float alpha, int n) { detail::g_ops->scale(x, alpha, n); }
void add(const float* a, const float* b, float* out, int n) { detail::g_ops->add(a, b, out, n); }
float softmax_inplace(float* x, int n) { return detail::g_ops->softmax_inplace(x, n); }
float logsumexp(const float* x, int n) { return detail::g_ops->logsumexp(x, n); }
void silu(const float* x, float* y, int n) { detail::g_ops->silu(x, y, n); }
void silu_backward(const float* x, const float* dy, float* dx, int n) {
    detail::g_ops->silu_backward(x, dy, dx, n);
}
float rmsnorm(const float* x, const float* gain, float* y, int n, float eps) {
    return detail::g_ops->rmsnorm(x, gain, y, n, eps);
}
void rmsnorm_backward(const float* x, const float* gain, const float* dy, float inv_rms, float* dx,
                      float* dgain, int n) {
    detail::g_ops->rmsnorm_backward(x, gain, dy, inv_rms, dx, dgain, n);
}

}  // namespace twohop::kernels
