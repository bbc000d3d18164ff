#pragma once

#include <cstdint>
#include <vector>

#include "twohop/model/toy_transformer.hpp"

namespace twohop::train {

struct AdamWConfig {
    double lr = 3e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

// Which parameter tensors may move. Blocks inside [lo, hi) train; embeddings,
// final norm, and unembedding train only when the range spans every block,
// keeping fact storage attributable to the blocks during partial stages.
struct FreezeMask {
    int lo = 0;
    int hi = 0;
    int n_blocks = 0;

    static FreezeMask all(int n_blocks) { return {0, n_blocks, n_blocks}; }
    static FreezeMask range(int lo, int hi, int n_blocks);
    bool trainable(const model::ParamRefT<float>& ref) const;
};

// AdamW with decoupled weight decay and per-tensor moments. Frozen tensors
// keep their parameters, moments, and step counts untouched so interleaved
// stages stay bit-reproducible.
class AdamW {
public:
    AdamW(const AdamWConfig& cfg, const model::ToyConfig& shape);

    // lr_scale multiplies the base rate (the schedule lives in the trainer).
    void step(model::ToyTensorsT<float>& params, const model::ToyTensorsT<float>& grads,
              const FreezeMask& mask, double lr_scale);

    std::int64_t steps_taken() const { return steps_; }

private:
    AdamWConfig cfg_;
    model::ToyTensorsT<float> m_, v_;
    std::vector<std::int64_t> tensor_steps_;  // bias correction per tensor
    std::int64_t steps_ = 0;
};

}  // namespace twohop::train
