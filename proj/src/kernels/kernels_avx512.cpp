// AVX-512F float GEMMs. Elementwise ops stay on the AVX2 path (they are
// bandwidth-bound; wider vectors buy nothing there).

#include "twohop/kernels/variants.hpp"

#include "internal.hpp"

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include <cstddef>

namespace twohop::kernels::detail::avx512 {

namespace {

inline float hsum16(__m512 v) { return _mm512_reduce_add_ps(v); }

}  // namespace

// C[m x n] (+)= A[m x k] * B^T, B stored [n x k]. 4x2 tile, 16-wide lanes.
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
            __m512 s00 = _mm512_setzero_ps(), s01 = _mm512_setzero_ps();
            __m512 s10 = _mm512_setzero_ps(), s11 = _mm512_setzero_ps();
            __m512 s20 = _mm512_setzero_ps(), s21 = _mm512_setzero_ps();
            __m512 s30 = _mm512_setzero_ps(), s31 = _mm512_setzero_ps();
            int p = 0;
            for (; p + 16 <= k; p += 16) {
                const __m512 vb0 = _mm512_loadu_ps(b0 + p);
                const __m512 vb1 = _mm512_loadu_ps(b1 + p);
                const __m512 va0 = _mm512_loadu_ps(a0 + p);
                const __m512 va1 = _mm512_loadu_ps(a1 + p);
                const __m512 va2 = _mm512_loadu_ps(a2 + p);
                const __m512 va3 = _mm512_loadu_ps(a3 + p);
                s00 = _mm512_fmadd_ps(va0, vb0, s00);
                s01 = _mm512_fmadd_ps(va0, vb1, s01);
                s10 = _mm512_fmadd_ps(va1, vb0, s10);
                s11 = _mm512_fmadd_ps(va1, vb1, s11);
                s20 = _mm512_fmadd_ps(va2, vb0, s20);
                s21 = _mm512_fmadd_ps(va2, vb1, s21);
                s30 = _mm512_fmadd_ps(va3, vb0, s30);
                s31 = _mm512_fmadd_ps(va3, vb1, s31);
            }
            if (p < k) {
                const __mmask16 msk = (__mmask16)((1u << (k - p)) - 1u);
                const __m512 vb0 = _mm512_maskz_loadu_ps(msk, b0 + p);
                const __m512 vb1 = _mm512_maskz_loadu_ps(msk, b1 + p);
                const __m512 va0 = _mm512_maskz_loadu_ps(msk, a0 + p);
                const __m512 va1 = _mm512_maskz_loadu_ps(msk, a1 + p);
                const __m512 va2 = _mm512_maskz_loadu_ps(msk, a2 + p);
                const __m512 va3 = _mm512_maskz_loadu_ps(msk, a3 + p);
                s00 = _mm512_fmadd_ps(va0, vb0, s00);
                s01 = _mm512_fmadd_ps(va0, vb1, s01);
                s10 = _mm512_fmadd_ps(va1, vb0, s10);
                s11 = _mm512_fmadd_ps(va1, vb1, s11);
                s20 = _mm512_fmadd_ps(va2, vb0, s20);
                s21 = _mm512_fmadd_ps(va2, vb1, s21);
                s30 = _mm512_fmadd_ps(va3, vb0, s30);
                s31 = _mm512_fmadd_ps(va3, vb1, s31);
            }
            const float r[4][2] = {{hsum16(s00), hsum16(s01)},
                                   {hsum16(s10), hsum16(s11)},
                                   {hsum16(s20), hsum16(s21)},
                                   {hsum16(s30), hsum16(s31)}};
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
                __m512 s = _mm512_setzero_ps();
                int p = 0;
                for (; p + 16 <= k; p += 16)
                    s = _mm512_fmadd_ps(_mm512_loadu_ps(rows[r_i] + p), _mm512_loadu_ps(br + p), s);
                float v = hsum16(s);
                for (; p < k; ++p) v += rows[r_i][p] * br[p];
                float* cp = c + (std::size_t)(i + r_i) * n + j;
                *cp = accumulate ? *cp + v : v;
            }
        }
    }
    for (; i < m; ++i) {
        const float* ar = a + (std::size_t)i * k;
        for (int j = 0; j < n; ++j) {
            const float* br = b + (std::size_t)j * k;
            __m512 s = _mm512_setzero_ps();
            int p = 0;
            for (; p + 16 <= k; p += 16)
                s = _mm512_fmadd_ps(_mm512_loadu_ps(ar + p), _mm512_loadu_ps(br + p), s);
            float v = hsum16(s);
            for (; p < k; ++p) v += ar[p] * br[p];
            float* cp = c + (std::size_t)i * n + j;
            *cp = accumulate ? *cp + v : v;
        }
    }
}

// C[m x n] (+)= A[m x k] * B, B stored [k x n]. 2 rows x 64 columns per tile.
void gemm_nn(const float* a, const float* b, float* c, int m, int n, int k, bool accumulate) {
    int i = 0;
    for (; i + 2 <= m; i += 2) {
        const float* ar0 = a + (std::size_t)i * k;
        const float* ar1 = ar0 + k;
        float* cr0 = c + (std::size_t)i * n;
        float* cr1 = cr0 + n;
        int j = 0;
        for (; j + 64 <= n; j += 64) {
            __m512 acc[2][4];
            for (int v = 0; v < 4; ++v) {
                acc[0][v] = accumulate ? _mm512_loadu_ps(cr0 + j + v * 16) : _mm512_setzero_ps();
                acc[1][v] = accumulate ? _mm512_loadu_ps(cr1 + j + v * 16) : _mm512_setzero_ps();
            }
            for (int p = 0; p < k; ++p) {
                const __m512 va0 = _mm512_set1_ps(ar0[p]);
                const __m512 va1 = _mm512_set1_ps(ar1[p]);
                const float* br = b + (std::size_t)p * n + j;
                for (int v = 0; v < 4; ++v) {
                    const __m512 vb = _mm512_loadu_ps(br + v * 16);
                    acc[0][v] = _mm512_fmadd_ps(va0, vb, acc[0][v]);
                    acc[1][v] = _mm512_fmadd_ps(va1, vb, acc[1][v]);
                }
            }
            for (int v = 0; v < 4; ++v) {
                _mm512_storeu_ps(cr0 + j + v * 16, acc[0][v]);
                _mm512_storeu_ps(cr1 + j + v * 16, acc[1][v]);
            }
        }
        for (; j < n; j += 16) {
            const int rem = n - j;
            const __mmask16 msk = rem >= 16 ? (__mmask16)0xFFFF : (__mmask16)((1u << rem) - 1u);
            __m512 a0 = accumulate ? _mm512_maskz_loadu_ps(msk, cr0 + j) : _mm512_setzero_ps();
            __m512 a1 = accumulate ? _mm512_maskz_loadu_ps(msk, cr1 + j) : _mm512_setzero_ps();
            for (int p = 0; p < k; ++p) {
                const __m512 vb = _mm512_maskz_loadu_ps(msk, b + (std::size_t)p * n + j);
                a0 = _mm512_fmadd_ps(_mm512_set1_ps(ar0[p]), vb, a0);
                a1 = _mm512_fmadd_ps(_mm512_set1_ps(ar1[p]), vb, a1);
            }
            _mm512_mask_storeu_ps(cr0 + j, msk, a0);
            _mm512_mask_storeu_ps(cr1 + j, msk, a1);
        }
    }
    for (; i < m; ++i) {
        const float* ar = a + (std::size_t)i * k;
        float* cr = c + (std::size_t)i * n;
        for (int j = 0; j < n; j += 16) {
            const int rem = n - j;
            const __mmask16 msk = rem >= 16 ? (__mmask16)0xFFFF : (__mmask16)((1u << rem) - 1u);
            __m512 acc = accumulate ? _mm512_maskz_loadu_ps(msk, cr + j) : _mm512_setzero_ps();
            for (int p = 0; p < k; ++p) {
                acc = _mm512_fmadd_ps(_mm512_set1_ps(ar[p]),
                                      _mm512_maskz_loadu_ps(msk, b + (std::size_t)p * n + j), acc);
            }
            _mm512_mask_storeu_ps(cr + j, msk, acc);
        }
    }
}

// C[m x n] (+)= A^T * B, A stored [k x m], B stored [k x n]. 3 x 64 tile.
void gemm_tn(const float* a, const float* b, float* c, int m, int n, int k, bool accumulate) {
    if (!accumulate) {
        for (std::size_t z = 0; z < (std::size_t)m * n; ++z) c[z] = 0.0f;
    }
    int i = 0;
    for (; i + 3 <= m; i += 3) {
        int j = 0;
        for (; j + 64 <= n; j += 64) {
            __m512 acc[3][4];
            for (int r = 0; r < 3; ++r)
                for (int v = 0; v < 4; ++v)
                    acc[r][v] = _mm512_loadu_ps(c + (std::size_t)(i + r) * n + j + v * 16);
            for (int p = 0; p < k; ++p) {
                const float* ap = a + (std::size_t)p * m + i;
                const float* bp = b + (std::size_t)p * n + j;
                const __m512 va0 = _mm512_set1_ps(ap[0]);
                const __m512 va1 = _mm512_set1_ps(ap[1]);
                const __m512 va2 = _mm512_set1_ps(ap[2]);
                for (int v = 0; v < 4; ++v) {
                    const __m512 vb = _mm512_loadu_ps(bp + v * 16);
                    acc[0][v] = _mm512_fmadd_ps(va0, vb, acc[0][v]);
                    acc[1][v] = _mm512_fmadd_ps(va1, vb, acc[1][v]);
                    acc[2][v] = _mm512_fmadd_ps(va2, vb, acc[2][v]);
                }
            }
            for (int r = 0; r < 3; ++r)
                for (int v = 0; v < 4; ++v)
                    _mm512_storeu_ps(c + (std::size_t)(i + r) * n + j + v * 16, acc[r][v]);
        }
        for (; j < n; j += 16) {
            const int rem = n - j;
            const __mmask16 msk = rem >= 16 ? (__mmask16)0xFFFF : (__mmask16)((1u << rem) - 1u);
            __m512 acc[3];
            for (int r = 0; r < 3; ++r)
                acc[r] = _mm512_maskz_loadu_ps(msk, c + (std::size_t)(i + r) * n + j);
            for (int p = 0; p < k; ++p) {
                const float* ap = a + (std::size_t)p * m + i;
                const __m512 vb = _mm512_maskz_loadu_ps(msk, b + (std::size_t)p * n + j);
                acc[0] = _mm512_fmadd_ps(_mm512_set1_ps(ap[0]), vb, acc[0]);
                acc[1] = _mm512_fmadd_ps(_mm512_set1_ps(ap[1]), vb, acc[1]);
                acc[2] = _mm512_fmadd_ps(_mm512_set1_ps(ap[2]), vb, acc[2]);
            }
            for (int r = 0; r < 3; ++r)
                _mm512_mask_storeu_ps(c + (std::size_t)(i + r) * n + j, msk, acc[r]);
        }
    }
    for (; i < m; ++i) {
        for (int j = 0; j < n; j += 16) {
            const int rem = n - j;
            const __mmask16 msk = rem >= 16 ? (__mmask16)0xFFFF : (__mmask16)((1u << rem) - 1u);
            __m512 acc = _mm512_maskz_loadu_ps(msk, c + (std::size_t)i * n + j);
            for (int p = 0; p < k; ++p) {
                acc = _mm512_fmadd_ps(_mm512_set1_ps(a[(std::size_t)p * m + i]),
                                      _mm512_maskz_loadu_ps(msk, b + (std::size_t)p * n + j), acc);
            }
            _mm512_mask_storeu_ps(c + (std::size_t)i * n + j, msk, acc);
        }
    }
}

}  // namespace twohop::kernels::detail::avx512

namespace twohop::kernels::detail {

const OpsTable& avx512_table() {
    static const OpsTable t = [] {
        OpsTable mixed = avx2_table();
        mixed.gemm_nt = &avx512::gemm_nt;
        mixed.gemm_nn = &avx512::gemm_nn;
        mixed.gemm_tn = &avx512::gemm_tn;
        return mixed;
    }();
    return t;
}

}  // namespace twohop::kernels::detail

#else

namespace twohop::kernels::detail {
const OpsTable& avx512_table() { return scalar_table(); }
}

#endif
