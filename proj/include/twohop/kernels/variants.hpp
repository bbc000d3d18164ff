#pragma once

// Per-backend entry points. Used by the dispatcher and by the equivalence
// tests, which pin each backend explicitly instead of going through the
// runtime selection.

namespace twohop::kernels::detail {

struct OpsTable {
    void (*gemm_nt)(const float*, const float*, float*, int, int, int, bool);
    void (*gemm_nn)(const float*, const float*, float*, int, int, int, bool);
    void (*gemm_tn)(const float*, const float*, float*, int, int, int, bool);
    float (*dot)(const float*, const float*, int);
    void (*axpy)(float, const float*, float*, int);
    void (*scale)(float*, float, int);
    void (*add)(const float*, const float*, float*, int);
    float (*softmax_inplace)(float*, int);
    float (*logsumexp)(const float*, int);
    void (*silu)(const float*, float*, int);
    void (*silu_backward)(const float*, const float*, float*, int);
    float (*rmsnorm)(const float*, const float*, float*, int, float);
    void (*rmsnorm_backward)(const float*, const float*, const float*, float, float*, float*, int);
};

const OpsTable& scalar_table();
const OpsTable& avx2_table();    // valid only if cpu_has_avx2()
const OpsTable& avx512_table();  // valid only if cpu_has_avx512()

bool cpu_has_avx2();
bool cpu_has_avx512();

}  // namespace twohop::kernels::detail
