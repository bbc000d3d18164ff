#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace twohop::model {

// Pre-norm decoder-only transformer: RMSNorm, multi-head causal attention,
// SiLU MLP, learned positional embeddings, untied embedding/unembedding.
// Sized so the default instance lands near 2M parameters on the corpus vocab.
struct ToyConfig {
    int n_blocks = 8;
    int width = 96;
    int n_heads = 4;
    int mlp_hidden = 384;
    int context = 512;
    int vocab = 0;
    std::uint64_t seed = 0;
    double eps = 1e-5;

    void validate() const;
    nlohmann::json to_json() const;
    static ToyConfig from_json(const nlohmann::json& j);
};

template <typename T>
struct ToyBlockT {
    std::vector<T> attn_norm, wq, wk, wv, wo;  // weights are [out x in]
    std::vector<T> mlp_norm, w1, w2;
};

// One set of tensors shaped like the model; doubles as gradient and
// optimizer-moment storage.
template <typename T>
struct ToyTensorsT {
    std::vector<T> tok_embed, pos_embed;
    std::vector<ToyBlockT<T>> blocks;
    std::vector<T> final_norm, unembed;

    static ToyTensorsT shaped(const ToyConfig& cfg);
    void zero();
};

enum class ParamGroup { embed, block, head };

template <typename T>
struct ParamRefT {
    std::string name;
    ParamGroup group;
    int block;  // -1 unless group == block
    std::vector<T>* data;
};

// Deterministic tensor enumeration; checkpoint order and init draw order.
template <typename T>
std::vector<ParamRefT<T>> named_tensors(ToyTensorsT<T>& t);

template <typename T>
struct ToyCacheT {
    struct Block {
        std::vector<T> x_in, xn, q, k, v, probs, attn_cat, x_mid, xn2, h1, h1s;
        std::vector<T> inv_rms, inv_rms2;
    };
    int n = 0;
    std::vector<int> tokens;
    std::vector<Block> blocks;
    std::vector<T> x_final, xf_norm, inv_rms_f, logits;
};

// Loss gradients arrive as dense rows for just the loss-bearing positions.
template <typename T>
struct LogitGradT {
    std::vector<int> rows;
    std::vector<T> d;  // rows.size() x vocab
};

// Extra gradient injected into the residual stream at one block output row,
// carrying the auxiliary-loss signal.
template <typename T>
struct InjectionT {
    int block = -1;
    int pos = 0;
    std::vector<T> d_hidden;
};

template <typename T>
class ToyTransformerT {
public:
    explicit ToyTransformerT(const ToyConfig& cfg);

    const ToyConfig& config() const { return cfg_; }
    ToyTensorsT<T>& params() { return params_; }
    const ToyTensorsT<T>& params() const { return params_; }
    std::size_t param_count() const;

    void forward(std::span<const int> tokens, ToyCacheT<T>& cache) const;

    // Residual-stream output of a block; cache must come from forward.
    const T* hidden_at(const ToyCacheT<T>& cache, int block, int pos) const;

    // Logit-lens head: y = unembed(final_rmsnorm(h)).
    void lens_logits(const T* h, T* y) const;

    // weight * CE(target | lens(h)); accumulates d_h plus head-parameter
    // gradients so the lens path trains the final norm and unembedding.
    T lens_ce_backward(const T* h, int target, T weight, T* d_h, ToyTensorsT<T>& grads) const;

    // Cosine similarity between the token's embedding row and h; gradients
    // scaled by weight flow to both sides.
    T embed_cos_backward(const T* h, int token, T weight, T* d_h, ToyTensorsT<T>& grads) const;

    void backward(const ToyCacheT<T>& cache, const LogitGradT<T>& dlogits,
                  const InjectionT<T>* injection, ToyTensorsT<T>& grads) const;

private:
    ToyConfig cfg_;
    ToyTensorsT<T> params_;
};

using ToyTransformer = ToyTransformerT<float>;

}  // namespace twohop::model
