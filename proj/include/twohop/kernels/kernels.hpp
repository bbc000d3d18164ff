#pragma once

// Float kernels with runtime backend selection (scalar / AVX2 / AVX-512).
// Double overloads always run the scalar reference path.

#include <string>

#include "twohop/kernels/reference.hpp"

namespace twohop::kernels {

enum class Backend { scalar = 0, avx2 = 1, avx512 = 2 };

// Best backend supported by this CPU. The TWOHOP_KERNELS environment
// variable (scalar|avx2|avx512) overrides the automatic choice.
Backend active_backend();
void set_backend(Backend b);
bool backend_supported(Backend b);
const char* backend_name(Backend b);

// See reference.hpp for layout conventions.
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

inline void gemm_nt(const double* a, const double* b, double* c, int m, int n, int k, bool acc) { ref::gemm_nt(a, b, c, m, n, k, acc); }
inline void gemm_nn(const double* a, const double* b, double* c, int m, int n, int k, bool acc) { ref::gemm_nn(a, b, c, m, n, k, acc); }
inline void gemm_tn(const double* a, const double* b, double* c, int m, int n, int k, bool acc) { ref::gemm_tn(a, b, c, m, n, k, acc); }
inline double dot(const double* a, const double* b, int n) { return ref::dot(a, b, n); }
inline void axpy(double alpha, const double* x, double* y, int n) { ref::axpy(alpha, x, y, n); }
inline void scale(double* x, double alpha, int n) { ref::scale(x, alpha, n); }
inline void add(const double* a, const double* b, double* out, int n) { ref::add(a, b, out, n); }
inline double softmax_inplace(double* x, int n) { return ref::softmax_inplace(x, n); }
inline double logsumexp(const double* x, int n) { return ref::logsumexp(x, n); }
inline void silu(const double* x, double* y, int n) { ref::silu(x, y, n); }
inline void silu_backward(const double* x, const double* dy, double* dx, int n) { ref::silu_backward(x, dy, dx, n); }
inline double rmsnorm(const double* x, const double* gain, double* y, int n, double eps) { return ref::rmsnorm(x, gain, y, n, eps); }
inline void rmsnorm_backward(const double* x, const double* gain, const double* dy, double inv_rms,
                             double* dx, double* dgain, int n) { ref::rmsnorm_backward(x, gain, dy, inv_rms, dx, dgain, n); }

}  // namespace twohop::kernels
