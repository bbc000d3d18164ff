// AVX2 + FMA float kernels. Compiled with -mavx2 -mfma; must only be
// reached through the dispatcher after a cpuid check.

#include "twohop/kernels/variants.hpp"

#include "internal.hpp"

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

namespace twohop::kernels::detail::avx2 {

namespace {

inline float hsum8(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
    lo = _mm_add_ss(lo, _mm_shuffle_ps(lo, lo, 1));
    return _mm_cvtss_f32(lo);
}

inline float hmax8(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_max_ps(lo, hi);
    lo = _mm_max_ps(lo, _mm_movehl_ps(lo, lo));
    lo = _mm_max_ss(lo, _mm_shuffle_ps(lo, lo, 1));
    return _mm_cvtss_f32(lo);
}

// Polynomial exp, cephes-style (same scheme as the widely used avx_mathfun).
// About 1 ulp over the clamped range.
inline __m256 exp8(__m256 x) {
    const __m256 hi = _mm256_set1_ps(88.3762626647949f);
    const __m256 lo = _mm256_set1_ps(-88.3762626647949f);
    const __m256 log2e = _mm256_set1_ps(1.44269504088896341f);
    const __m256 c1 = _mm256_set1_ps(0.693359375f);
    const __m256 c2 = _mm256_set1_ps(-2.12194440e-4f);
    x = _mm256_max_ps(_mm256_min_ps(x, hi), lo);
    __m256 fx = _mm256_fmadd_ps(x, log2e, _mm256_set1_ps(0.5f));
    fx = _mm256_floor_ps(fx);
    x = _mm256_fnmadd_ps(fx, c1, x);
    x = _mm256_fnmadd_ps(fx, c2, x);
    __m256 z = _mm256_mul_ps(x, x);
    __m256 y = _mm256_set1_ps(1.9875691500e-4f);
    y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.3981999507e-3f));
    y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(8.3334519073e-3f));
    y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(4.1665795894e-2f));
    y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.6666665459e-1f));
    y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(5.0000001201e-1f));
    y = _mm256_fmadd_ps(y, z, x);
    y = _mm256_add_ps(y, _mm256_set1_ps(1.0f));
    __m256i n = _mm256_cvttps_epi32(fx);
    n = _mm256_add_epi32(n, _mm256_set1_epi32(0x7f));
    n = _mm256_slli_epi32(n, 23);
    return _mm256_mul_ps(y, _mm256_castsi256_ps(n));
}

inline float dot_1(const float* a, const float* b, int n) {
    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    int p = 0;
    for (; p + 16 <= n; p += 16) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + p), _mm256_loadu_ps(b + p), acc0);
        acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + p + 8), _mm256_loadu_ps(b + p + 8), acc1);
    }
    for (; p + 8 <= n; p += 8) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + p), _mm256_loadu_ps(b + p), acc0);
    }
    float s = hsum8(_mm256_add_ps(acc0, acc1));
    for (; p < n; ++p) s += a[p] * b[p];
    return s;
}

}  // namespace

float dot(const float* a, const float* b, int n) { return dot_1(a, b, n); }

void axpy(float alpha, const float* x, float* y, int n) {
    const __m256 va = _mm256_set1_ps(alpha);
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale(float* x, float alpha, int n) {
    const __m256 va = _mm256_set1_ps(alpha);
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(x + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
    }
    for (; i < n; ++i) x[i] *= alpha;
}

void add(const float* a, const float* b, float* out, int n) {
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

// C[m x n] (+)= A[m x k] * B^T, B stored [n x k]. Dot-product kernel with a
// 4x2 register tile.
void gemm_nt(const float* a, const float* b, float* c, int m, int n, int k, bool accumulate) {
    int i = 0;
    for (; i + 4 <= m; i += 4) {
        const float* a0 = a + (std::size_t)i * k;
        const float* a1 = a0 + k;
        const float* a2 = a1 + k;
        const float* a3 = a2 + k;
        int j = 0;
        for (; j + 2 <= n; j += 2) {
            const float* b0 = b + (std::size_t)j * k;
            const float* b1 = b0 + k;
            __m256 s00 = _mm256_setzero_ps(), s01 = _mm256_setzero_ps();
            __m256 s10 = _mm256_setzero_ps(), s11 = _mm256_setzero_ps();
            __m256 s20 = _mm256_setzero_ps(), s21 = _mm256_setzero_ps();
            __m256 s30 = _mm256_setzero_ps(), s31 = _mm256_setzero_ps();
            int p = 0;
            for (; p + 8 <= k; p += 8) {
                const __m256 vb0 = _mm256_loadu_ps(b0 + p);
                const __m256 vb1 = _mm256_loadu_ps(b1 + p);
                const __m256 va0 = _mm256_loadu_ps(a0 + p);
                const __m256 va1 = _mm256_loadu_ps(a1 + p);
                const __m256 va2 = _mm256_loadu_ps(a2 + p);
                const __m256 va3 = _mm256_loadu_ps(a3 + p);
                s00 = _mm256_fmadd_ps(va0, vb0, s00);
                s01 = _mm256_fmadd_ps(va0, vb1, s01);
                s10 = _mm256_fmadd_ps(va1, vb0, s10);
                s11 = _mm256_fmadd_ps(va1, vb1, s11);
                s20 = _mm256_fmadd_ps(va2, vb0, s20);
                s21 = _mm256_fmadd_ps(va2, vb1, s21);
                s30 = _mm256_fmadd_ps(va3, vb0, s30);
                s31 = _mm256_fmadd_ps(va3, vb1, s31);
            }
            float r[4][2] = {{hsum8(s00), hsum8(s01)},
                             {hsum8(s10), hsum8(s11)},
                             {hsum8(s20), hsum8(s21)},
                             {hsum8(s30), hsum8(s31)}};
            for (; p < k; ++p) {
                r[0][0] += a0[p] * b0[p]; r[0][1] += a0[p] * b1[p];
                r[1][0] += a1[p] * b0[p]; r[1][1] += a1[p] * b1[p];
                r[2][0] += a2[p] * b0[p]; r[2][1] += a2[p] * b1[p];
                r[3][0] += a3[p] * b0[p]; r[3][1] += a3[p] * b1[p];
            }
            for (int r_i = 0; r_i < 4; ++r_i) {
                float* cr = c + (std::size_t)(i + r_i) * n + j;
                if (accumulate) { cr[0] += r[r_i][0]; cr[1] += r[r_i][1]; }
                else            { cr[0] = r[r_i][0];  cr[1] = r[r_i][1]; }
            }
        }
        for (; j < n; ++j) {
            const float* br = b + (std::size_t)j * k;
            const float* rows[4] = {a0, a1, a2, a3};
            for (int r_i = 0; r_i < 4; ++r_i) {
                const float v = dot_1(rows[r_i], br, k);
                float* cp = c + (std::size_t)(i + r_i) * n + j;
                *cp = accumulate ? *cp + v : v;
            }
        }
    }
    for (; i < m; ++i) {
        const float* ar = a + (std::size_t)i * k;
        for (int j = 0; j < n; ++j) {
            const float v = dot_1(ar, b + (std::size_t)j * k, k);
            float* cp = c + (std::size_t)i * n + j;
            *cp = accumulate ? *cp + v : v;
        }
    }
}

// C[m x n] (+)= A[m x k] * B, B stored [k x n]. Broadcast-FMA kernel,
// 2 rows x 32 columns per tile.
void gemm_nn(const float* a, const float* b, float* c, int m, int n, int k, bool accumulate) {
    int i = 0;
    for (; i + 2 <= m; i += 2) {
        const float* ar0 = a + (std::size_t)i * k;
        const float* ar1 = ar0 + k;
        float* cr0 = c + (std::size_t)i * n;
        float* cr1 = cr0 + n;
        int j = 0;
        for (; j + 32 <= n; j += 32) {
            __m256 acc[2][4];
            for (int v = 0; v < 4; ++v) {
                acc[0][v] = accumulate ? _mm256_loadu_ps(cr0 + j + v * 8) : _mm256_setzero_ps();
                acc[1][v] = accumulate ? _mm256_loadu_ps(cr1 + j + v * 8) : _mm256_setzero_ps();
            }
            for (int p = 0; p < k; ++p) {
                const __m256 va0 = _mm256_set1_ps(ar0[p]);
                const __m256 va1 = _mm256_set1_ps(ar1[p]);
                const float* br = b + (std::size_t)p * n + j;
                for (int v = 0; v < 4; ++v) {
                    const __m256 vb = _mm256_loadu_ps(br + v * 8);
                    acc[0][v] = _mm256_fmadd_ps(va0, vb, acc[0][v]);
                    acc[1][v] = _mm256_fmadd_ps(va1, vb, acc[1][v]);
                }
            }
            for (int v = 0; v < 4; ++v) {
                _mm256_storeu_ps(cr0 + j + v * 8, acc[0][v]);
                _mm256_storeu_ps(cr1 + j + v * 8, acc[1][v]);
            }
        }
        for (; j + 8 <= n; j += 8) {
            __m256 a0 = accumulate ? _mm256_loadu_ps(cr0 + j) : _mm256_setzero_ps();
            __m256 a1 = accumulate ? _mm256_loadu_ps(cr1 + j) : _mm256_setzero_ps();
            for (int p = 0; p < k; ++p) {
                const __m256 vb = _mm256_loadu_ps(b + (std::size_t)p * n + j);
                a0 = _mm256_fmadd_ps(_mm256_set1_ps(ar0[p]), vb, a0);
                a1 = _mm256_fmadd_ps(_mm256_set1_ps(ar1[p]), vb, a1);
            }
            _mm256_storeu_ps(cr0 + j, a0);
            _mm256_storeu_ps(cr1 + j, a1);
        }
        for (; j < n; ++j) {
            float s0 = accumulate ? cr0[j] : 0.0f;
            float s1 = accumulate ? cr1[j] : 0.0f;
            for (int p = 0; p < k; ++p) {
                s0 += ar0[p] * b[(std::size_t)p * n + j];
                s1 += ar1[p] * b[(std::size_t)p * n + j];
            }
            cr0[j] = s0;
            cr1[j] = s1;
        }
    }
    for (; i < m; ++i) {
        const float* ar = a + (std::size_t)i * k;
        float* cr = c + (std::size_t)i * n;
        int j = 0;
        for (; j + 8 <= n; j += 8) {
            __m256 acc = accumulate ? _mm256_loadu_ps(cr + j) : _mm256_setzero_ps();
            for (int p = 0; p < k; ++p) {
                acc = _mm256_fmadd_ps(_mm256_set1_ps(ar[p]), _mm256_loadu_ps(b + (std::size_t)p * n + j), acc);
            }
            _mm256_storeu_ps(cr + j, acc);
        }
        for (; j < n; ++j) {
            float s = accumulate ? cr[j] : 0.0f;
            for (int p = 0; p < k; ++p) s += ar[p] * b[(std::size_t)p * n + j];
            cr[j] = s;
        }
    }
}

// C[m x n] (+)= A^T * B, A stored [k x m], B stored [k x n]. Outer-product
// accumulation; 3 rows x 32 columns per tile, streaming over k.
void gemm_tn(const float* a, const float* b, float* c, int m, int n, int k, bool accumulate) {
    if (!accumulate) {
        for (std::size_t z = 0; z < (std::size_t)m * n; ++z) c[z] = 0.0f;
    }
    int i = 0;
    for (; i + 3 <= m; i += 3) {
        int j = 0;
        for (; j + 32 <= n; j += 32) {
            __m256 acc[3][4];
            for (int r = 0; r < 3; ++r)
                for (int v = 0; v < 4; ++v)
                    acc[r][v] = _mm256_loadu_ps(c + (std::size_t)(i + r) * n + j + v * 8);
            for (int p = 0; p < k; ++p) {
                const float* ap = a + (std::size_t)p * m + i;
                const float* bp = b + (std::size_t)p * n + j;
                const __m256 va0 = _mm256_set1_ps(ap[0]);
                const __m256 va1 = _mm256_set1_ps(ap[1]);
                const __m256 va2 = _mm256_set1_ps(ap[2]);
                for (int v = 0; v < 4; ++v) {
                    const __m256 vb = _mm256_loadu_ps(bp + v * 8);
                    acc[0][v] = _mm256_fmadd_ps(va0, vb, acc[0][v]);
                    acc[1][v] = _mm256_fmadd_ps(va1, vb, acc[1][v]);
                    acc[2][v] = _mm256_fmadd_ps(va2, vb, acc[2][v]);
                }
            }
            for (int r = 0; r < 3; ++r)
                for (int v = 0; v < 4; ++v)
                    _mm256_storeu_ps(c + (std::size_t)(i + r) * n + j + v * 8, acc[r][v]);
        }
        for (; j + 8 <= n; j += 8) {
            __m256 acc[3];
            for (int r = 0; r < 3; ++r) acc[r] = _mm256_loadu_ps(c + (std::size_t)(i + r) * n + j);
            for (int p = 0; p < k; ++p) {
                const float* ap = a + (std::size_t)p * m + i;
                const __m256 vb = _mm256_loadu_ps(b + (std::size_t)p * n + j);
                acc[0] = _mm256_fmadd_ps(_mm256_set1_ps(ap[0]), vb, acc[0]);
                acc[1] = _mm256_fmadd_ps(_mm256_set1_ps(ap[1]), vb, acc[1]);
                acc[2] = _mm256_fmadd_ps(_mm256_set1_ps(ap[2]), vb, acc[2]);
            }
            for (int r = 0; r < 3; ++r) _mm256_storeu_ps(c + (std::size_t)(i + r) * n + j, acc[r]);
        }
        for (; j < n; ++j) {
            float s0 = c[(std::size_t)i * n + j];
            float s1 = c[(std::size_t)(i + 1) * n + j];
            float s2 = c[(std::size_t)(i + 2) * n + j];
            for (int p = 0; p < k; ++p) {
                const float* ap = a + (std::size_t)p * m + i;
                const float bv = b[(std::size_t)p * n + j];
                s0 += ap[0] * bv;
                s1 += ap[1] * bv;
                s2 += ap[2] * bv;
            }
            c[(std::size_t)i * n + j] = s0;
            c[(std::size_t)(i + 1) * n + j] = s1;
            c[(std::size_t)(i + 2) * n + j] = s2;
        }
    }
    for (; i < m; ++i) {
        int j = 0;
        for (; j + 8 <= n; j += 8) {
            __m256 acc = _mm256_loadu_ps(c + (std::size_t)i * n + j);
            for (int p = 0; p < k; ++p) {
                acc = _mm256_fmadd_ps(_mm256_set1_ps(a[(std::size_t)p * m + i]),
                                      _mm256_loadu_ps(b + (std::size_t)p * n + j), acc);
            }
            _mm256_storeu_ps(c + (std::size_t)i * n + j, acc);
        }
        for (; j < n; ++j) {
            float s = c[(std::size_t)i * n + j];
            for (int p = 0; p < k; ++p) s += a[(std::size_t)p * m + i] * b[(std::size_t)p * n + j];
            c[(std::size_t)i * n + j] = s;
        }
    }
}

float softmax_inplace(float* x, int n) {
    float mx = x[0];
    {
        int i = 0;
        __m256 vm = _mm256_set1_ps(-INFINITY);
        for (; i + 8 <= n; i += 8) vm = _mm256_max_ps(vm, _mm256_loadu_ps(x + i));
        if (n >= 8) mx = hmax8(vm);
        for (; i < n; ++i) mx = x[i] > mx ? x[i] : mx;
    }
    const __m256 vmx = _mm256_set1_ps(mx);
    __m256 vsum = _mm256_setzero_ps();
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 e = exp8(_mm256_sub_ps(_mm256_loadu_ps(x + i), vmx));
        _mm256_storeu_ps(x + i, e);
        vsum = _mm256_add_ps(vsum, e);
    }
    float sum = hsum8(vsum);
    for (; i < n; ++i) {
        x[i] = std::exp(x[i] - mx);
        sum += x[i];
    }
    scale(x, 1.0f / sum, n);
    return std::log(sum) + mx;
}

float logsumexp(const float* x, int n) {
    float mx = x[0];
    {
        int i = 0;
        __m256 vm = _mm256_set1_ps(-INFINITY);
        for (; i + 8 <= n; i += 8) vm = _mm256_max_ps(vm, _mm256_loadu_ps(x + i));
        if (n >= 8) mx = hmax8(vm);
        for (; i < n; ++i) mx = x[i] > mx ? x[i] : mx;
    }
    const __m256 vmx = _mm256_set1_ps(mx);
    __m256 vsum = _mm256_setzero_ps();
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        vsum = _mm256_add_ps(vsum, exp8(_mm256_sub_ps(_mm256_loadu_ps(x + i), vmx)));
    }
    float sum = hsum8(vsum);
    for (; i < n; ++i) sum += std::exp(x[i] - mx);
    return std::log(sum) + mx;
}

void silu(const float* x, float* y, int n) {
    const __m256 one = _mm256_set1_ps(1.0f);
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 vx = _mm256_loadu_ps(x + i);
        const __m256 s = _mm256_div_ps(one, _mm256_add_ps(one, exp8(_mm256_sub_ps(_mm256_setzero_ps(), vx))));
        _mm256_storeu_ps(y + i, _mm256_mul_ps(vx, s));
    }
    for (; i < n; ++i) {
        const float s = 1.0f / (1.0f + std::exp(-x[i]));
        y[i] = x[i] * s;
    }
}

void silu_backward(const float* x, const float* dy, float* dx, int n) {
    const __m256 one = _mm256_set1_ps(1.0f);
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 vx = _mm256_loadu_ps(x + i);
        const __m256 s = _mm256_div_ps(one, _mm256_add_ps(one, exp8(_mm256_sub_ps(_mm256_setzero_ps(), vx))));
        // s * (1 + x * (1 - s))
        const __m256 g = _mm256_mul_ps(s, _mm256_fmadd_ps(vx, _mm256_sub_ps(one, s), one));
        _mm256_storeu_ps(dx + i, _mm256_fmadd_ps(_mm256_loadu_ps(dy + i), g, _mm256_loadu_ps(dx + i)));
    }
    for (; i < n; ++i) {
        const float s = 1.0f / (1.0f + std::exp(-x[i]));
        dx[i] += dy[i] * s * (1.0f + x[i] * (1.0f - s));
    }
}

float rmsnorm(const float* x, const float* gain, float* y, int n, float eps) {
    const float ss = dot_1(x, x, n);
    const float inv = 1.0f / std::sqrt(ss / (float)n + eps);
    const __m256 vinv = _mm256_set1_ps(inv);
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 vx = _mm256_loadu_ps(x + i);
        const __m256 vg = _mm256_loadu_ps(gain + i);
        _mm256_storeu_ps(y + i, _mm256_mul_ps(_mm256_mul_ps(vg, vx), vinv));
    }
    for (; i < n; ++i) y[i] = gain[i] * x[i] * inv;
    return inv;
}

void rmsnorm_backward(const float* x, const float* gain, const float* dy, float inv_rms,
                      float* dx, float* dgain, int n) {
    __m256 vdot = _mm256_setzero_ps();
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 t = _mm256_mul_ps(_mm256_loadu_ps(gain + i), _mm256_loadu_ps(x + i));
        vdot = _mm256_fmadd_ps(t, _mm256_loadu_ps(dy + i), vdot);
    }
    float dot_gxdy = hsum8(vdot);
    for (; i < n; ++i) dot_gxdy += gain[i] * x[i] * dy[i];

    const float inv3_over_n = inv_rms * inv_rms * inv_rms / (float)n;
    const __m256 vinv = _mm256_set1_ps(inv_rms);
    const __m256 vcoef = _mm256_set1_ps(dot_gxdy * inv3_over_n);
    i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 vx = _mm256_loadu_ps(x + i);
        const __m256 vg = _mm256_loadu_ps(gain + i);
        const __m256 vdy = _mm256_loadu_ps(dy + i);
        __m256 vdx = _mm256_loadu_ps(dx + i);
        vdx = _mm256_add_ps(vdx, _mm256_fnmadd_ps(vx, vcoef, _mm256_mul_ps(_mm256_mul_ps(vg, vdy), vinv)));
        _mm256_storeu_ps(dx + i, vdx);
        __m256 vdg = _mm256_loadu_ps(dgain + i);
        vdg = _mm256_fmadd_ps(_mm256_mul_ps(vx, vinv), vdy, vdg);
        _mm256_storeu_ps(dgain + i, vdg);
    }
    for (; i < n; ++i) {
        dx[i] += gain[i] * dy[i] * inv_rms - x[i] * dot_gxdy * inv3_over_n;
        dgain[i] += x[i] * inv_rms * dy[i];
    }
}

}  // namespace twohop::kernels::detail::avx2

namespace twohop::kernels::detail {

const OpsTable& avx2_table() {
    static const OpsTable t = {
        &avx2::gemm_nt, &avx2::gemm_nn, &avx2::gemm_tn,
        &avx2::dot, &avx2::axpy, &avx2::scale, &avx2::add,
        &avx2::softmax_inplace, &avx2::logsumexp,
        &avx2::silu, &avx2::silu_backward,
        &avx2::rmsnorm, &avx2::rmsnorm_backward,
    };
    return t;
}

}  // namespace twohop::kernels::detail

#else  // non-x86: table falls back to scalar

namespace twohop::kernels::detail {
const OpsTable& avx2_table() { return scalar_table(); }
}

#endif
