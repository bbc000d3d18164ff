#pragma once

// Scalar reference kernels. These are the semantic ground truth for every
// SIMD variant and the only implementations instantiated for double (the
// double path exists so numerical checks can run at full precision).

#include <cmath>
#include <cstddef>

namespace twohop::kernels::ref {

// C[m x n] (+)= A[m x k] * B^T where B is stored [n x k] (row-major).
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, int m, int n, int k, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            T acc = accumulate ? c[(std::size_t)i * n + j] : T(0);
            const T* ar = a + (std::size_t)i * k;
            const T* br = b + (std::size_t)j * k;
            for (int p = 0; p < k; ++p) acc += ar[p] * br[p];
            c[(std::size_t)i * n + j] = acc;
        }
    }
}

// C[m x n] (+)= A[m x k] * B where B is stored [k x n].
template <typename T>
void gemm_nn(const T* a, const T* b, T* c, int m, int n, int k, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        T* cr = c + (std::size_t)i * n;
        if (!accumulate) {
            for (int j = 0; j < n; ++j) cr[j] = T(0);
        }
        for (int p = 0; p < k; ++p) {
            const T av = a[(std::size_t)i * k + p];
            const T* br = b + (std::size_t)p * n;
            for (int j = 0; j < n; ++j) cr[j] += av * br[j];
        }
    }
}

// C[m x n] (+)= A^T * B where A is stored [k x m] and B [k x n].
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, int m, int n, int k, bool accumulate) {
    if (!accumulate) {
        for (std::size_t i = 0; i < (std::size_t)m * n; ++i) c[i] = T(0);
    }
    for (int p = 0; p < k; ++p) {
        const T* ar = a + (std::size_t)p * m;
        const T* br = b + (std::size_t)p * n;
        for (int i = 0; i < m; ++i) {
            const T av = ar[i];
            T* cr = c + (std::size_t)i * n;
            for (int j = 0; j < n; ++j) cr[j] += av * br[j];
        }
    }
}

template <typename T>
T dot(const T* a, const T* b, int n) {
    T acc = T(0);
    for (int i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

template <typename T>
void axpy(T alpha, const T* x, T* y, int n) {
    for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void scale(T* x, T alpha, int n) {
    for (int i = 0; i < n; ++i) x[i] *= alpha;
}

template <typename T>
void add(const T* a, const T* b, T* out, int n) {
    for (int i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <typename T>
T reduce_max(const T* x, int n) {
    T m = x[0];
    for (int i = 1; i < n; ++i) m = x[i] > m ? x[i] : m;
    return m;
}

// Numerically stable in-place softmax. Returns log(sum(exp(x - max))) + max,
// i.e. the logsumexp of the input, which callers use for cross-entropy.
template <typename T>
T softmax_inplace(T* x, int n) {
    const T mx = reduce_max(x, n);
    T sum = T(0);
    for (int i = 0; i < n; ++i) {
        x[i] = std::exp(x[i] - mx);
        sum += x[i];
    }
    const T inv = T(1) / sum;
    for (int i = 0; i < n; ++i) x[i] *= inv;
    return std::log(sum) + mx;
}

template <typename T>
T logsumexp(const T* x, int n) {
    const T mx = reduce_max(x, n);
    T sum = T(0);
    for (int i = 0; i < n; ++i) sum += std::exp(x[i] - mx);
    return std::log(sum) + mx;
}

template <typename T>
void silu(const T* x, T* y, int n) {
    for (int i = 0; i < n; ++i) {
        const T s = T(1) / (T(1) + std::exp(-x[i]));
        y[i] = x[i] * s;
    }
}

// dx += silu'(x) * dy
template <typename T>
void silu_backward(const T* x, const T* dy, T* dx, int n) {
    for (int i = 0; i < n; ++i) {
        const T s = T(1) / (T(1) + std::exp(-x[i]));
        dx[i] += dy[i] * s * (T(1) + x[i] * (T(1) - s));
    }
}

// y = gain * x / rms(x); returns 1/rms so backward can reuse it.
template <typename T>
T rmsnorm(const T* x, const T* gain, T* y, int n, T eps) {
    T ss = T(0);
    for (int i = 0; i < n; ++i) ss += x[i] * x[i];
    const T inv = T(1) / std::sqrt(ss / T(n) + eps);
    for (int i = 0; i < n; ++i) y[i] = gain[i] * x[i] * inv;
    return inv;
}

// dx += d/dx [gain * x * inv_rms], dgain += x * inv_rms * dy.
// inv_rms must be the value returned by the forward call.
template <typename T>
void rmsnorm_backward(const T* x, const T* gain, const T* dy, T inv_rms,
                      T* dx, T* dgain, int n) {
    T dot_gxdy = T(0);
    for (int i = 0; i < n; ++i) dot_gxdy += gain[i] * x[i] * dy[i];
    const T inv3_over_n = inv_rms * inv_rms * inv_rms / T(n);
    for (int i = 0; i < n; ++i) {
        dx[i] += gain[i] * dy[i] * inv_rms - x[i] * dot_gxdy * inv3_over_n;
        dgain[i] += x[i] * inv_rms * dy[i];
    }
}

}  // namespace twohop::kernels::ref
