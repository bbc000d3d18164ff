#include "twohop/train/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace twohop::train {

FreezeMask FreezeMask::range(int lo, int hi, int n_blocks) {
    if (lo < 0 || hi > n_blocks || lo >= hi)
        throw std::runtime_error("invalid trainable block range [" + std::to_string(lo) + ", " +
                                 std::to_string(hi) + ")");
    return {lo, hi, n_blocks};
}

bool FreezeMask::trainable(const model::ParamRefT<float>& ref) const {
    switch (ref.group) {
        case model::ParamGroup::block: return ref.block >= lo && ref.block < hi;
        case model::ParamGroup::embed:
        case model::ParamGroup::head: break;
    }
    // Embeddings and the output head move only in all-block stages.
    return lo == 0 && hi == n_blocks;
}

AdamW::AdamW(const AdamWConfig& cfg, const model::ToyConfig& shape)
    : cfg_(cfg),
      m_(model::ToyTensorsT<float>::shaped(shape)),
      v_(model::ToyTensorsT<float>::shaped(shape)) {
    if (cfg.lr <= 0) throw std::runtime_error("learning rate must be positive");
    m_.zero();
    v_.zero();
    tensor_steps_.assign(model::named_tensors(m_).size(), 0);
}

void AdamW::step(model::ToyTensorsT<float>& params, const model::ToyTensorsT<float>& grads,
                 const FreezeMask& mask, double lr_scale) {
    auto p = model::named_tensors(params);
    auto g = model::named_tensors(const_cast<model::ToyTensorsT<float>&>(grads));
    auto m = model::named_tensors(m_);
    auto v = model::named_tensors(v_);
    const double lr = cfg_.lr * lr_scale;
    for (std::size_t t = 0; t < p.size(); ++t) {
        if (!mask.trainable(p[t])) continue;
        const std::int64_t k = ++tensor_steps_[t];
        const double bc1 = 1.0 - std::pow(cfg_.beta1, (double)k);
        const double bc2 = 1.0 - std::pow(cfg_.beta2, (double)k);
        auto& pw = *p[t].data;
        const auto& gw = *g[t].data;
        auto& mw = *m[t].data;
        auto& vw = *v[t].data;
        for (std::size_t i = 0; i < pw.size(); ++i) {
            const double gi = gw[i];
            const double mi = cfg_.beta1 * mw[i] + (1.0 - cfg_.beta1) * gi;
            const double vi = cfg_.beta2 * vw[i] + (1.0 - cfg_.beta2) * gi * gi;
            mw[i] = (float)mi;
            vw[i] = (float)vi;
            const double update = (mi / bc1) / (std::sqrt(vi / bc2) + cfg_.eps);
            pw[i] = (float)(pw[i] - lr * (update + cfg_.weight_decay * pw[i]));
        }
    }
    ++steps_;
}

}  // namespace twohop::train
