#pragma once

// Cross-TU declarations for the individual backend implementations.
// The dispatcher and the mixed avx512 table pick from these.

namespace twohop::kernels::detail {

#if defined(__x86_64__) || defined(__i386__)
namespace avx2 {
void gemm_nt(const float* a, const float* b, float* c, int m, int n, int k, bool accumulate);
void gemm_nn(const float* a, const float* b, float* c, int m, int n, int k, bool accumulate);
void gemm_tn(const float* a, const float* b, float* c, int m, int n, int k, bool accumulate);
float dot(const float* a, const float* b, int n);
void axpy(float alpha, const float* x, float* y, int n);
void scale(float* x, float alpha, int n);
void add(const float* a, const float* b, float* out, int n);
float softmax_inplace(float* x, int n);
float logsumexp(const float* x, int n);
void silu(const float* x, float* y, int n);
void silu_backward(const float* x, const float* dy, float* dx, int n);
float rmsnorm(const float* x, const float* gain, float* y, int n, float eps);
void rmsnorm_backward(const float* x, const float* gain, const float* dy, float inv_rms,
                      float* dx, float* dgain, int n);
}  // namespace avx2

namespace avx512 {
void gemm_nt(const float* a, const float* b, float* c, int m, int n, int k, bool accumulate);
void gemm_nn(const float* a, const float* b, float* c, int m, int n, int k, bool accumulate);
void gemm_tn(const float* a, const float* b, float* c, int m, int n, int k, bool accumulate);
}  // namespace avx512
#endif

}  // namespace twohop::kernels::detail
