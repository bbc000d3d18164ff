#include "twohop/kernels/reference.hpp"
#include "twohop/kernels/variants.hpp"

namespace twohop::kernels::detail {

const OpsTable& scalar_table() {
    static const OpsTable t = {
        &ref::gemm_nt<float>,
        &ref::gemm_nn<float>,
        &ref::gemm_tn<float>,
        &ref::dot<float>,
        &ref::axpy<float>,
        &ref::scale<float>,
        &ref::add<float>,
        &ref::softmax_inplace<float>,
        &ref::logsumexp<float>,
        &ref::silu<float>,
        &ref::silu_backward<float>,
        &ref::rmsnorm<float>,
        &ref::rmsnorm_backward<float>,
    };
    return t;
}

}  // namespace twohop::kernels::detail
