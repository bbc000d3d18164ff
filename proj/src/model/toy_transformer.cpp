#include "twohop/model/toy_transformer.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "twohop/kernels/kernels.hpp"
#include "twohop/util/rng.hpp"

namespace twohop::model {

void ToyConfig::validate() const {
    if (n_blocks < 4) throw std::runtime_error("need at least 4 blocks for staged ranges");
    if (width <= 0 || n_heads <= 0 || width % n_heads != 0)
        throw std::runtime_error("width must be a positive multiple of n_heads");
    if (mlp_hidden <= 0 || context <= 0 || vocab <= 0)
        throw std::runtime_error("mlp_hidden, context, and vocab must be positive");
}

nlohmann::json ToyConfig::to_json() const {
    return {{"n_blocks", n_blocks},   {"width", width},     {"n_heads", n_heads},
            {"mlp_hidden", mlp_hidden}, {"context", context}, {"vocab", vocab},
            {"seed", seed},           {"eps", eps}};
}

ToyConfig ToyConfig::from_json(const nlohmann::json& j) {
    ToyConfig c;
    c.n_blocks = j.at("n_blocks").get<int>();
    c.width = j.at("width").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.mlp_hidden = j.at("mlp_hidden").get<int>();
    c.context = j.at("context").get<int>();
    c.vocab = j.at("vocab").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.eps = j.at("eps").get<double>();
    c.validate();
    return c;
}

template <typename T>
ToyTensorsT<T> ToyTensorsT<T>::shaped(const ToyConfig& cfg) {
    const std::size_t d = cfg.width, m = cfg.mlp_hidden;
    ToyTensorsT<T> t;
    t.tok_embed.assign((std::size_t)cfg.vocab * d, T(0));
    t.pos_embed.assign((std::size_t)cfg.context * d, T(0));
    t.blocks.resize(cfg.n_blocks);
    for (auto& b : t.blocks) {
        b.attn_norm.assign(d, T(0));
        b.wq.assign(d * d, T(0));
        b.wk.assign(d * d, T(0));
        b.wv.assign(d * d, T(0));
        b.wo.assign(d * d, T(0));
        b.mlp_norm.assign(d, T(0));
        b.w1.assign(m * d, T(0));
        b.w2.assign(d * m, T(0));
    }
    t.final_norm.assign(d, T(0));
    t.unembed.assign((std::size_t)cfg.vocab * d, T(0));
    return t;
}

template <typename T>
void ToyTensorsT<T>::zero() {
    for (auto& ref : named_tensors(*this)) std::fill(ref.data->begin(), ref.data->end(), T(0));
}

template <typename T>
std::vector<ParamRefT<T>> named_tensors(ToyTensorsT<T>& t) {
    std::vector<ParamRefT<T>> out;
    out.push_back({"tok_embed", ParamGroup::embed, -1, &t.tok_embed});
    out.push_back({"pos_embed", ParamGroup::embed, -1, &t.pos_embed});
    for (int b = 0; b < (int)t.blocks.size(); ++b) {
        auto& blk = t.blocks[b];
        const std::string p = "block" + std::to_string(b) + ".";
        out.push_back({p + "attn_norm", ParamGroup::block, b, &blk.attn_norm});
        out.push_back({p + "wq", ParamGroup::block, b, &blk.wq});
        out.push_back({p + "wk", ParamGroup::block, b, &blk.wk});
        out.push_back({p + "wv", ParamGroup::block, b, &blk.wv});
        out.push_back({p + "wo", ParamGroup::block, b, &blk.wo});
        out.push_back({p + "mlp_norm", ParamGroup::block, b, &blk.mlp_norm});
        out.push_back({p + "w1", ParamGroup::block, b, &blk.w1});
        out.push_back({p + "w2", ParamGroup::block, b, &blk.w2});
    }
    out.push_back({"final_norm", ParamGroup::head, -1, &t.final_norm});
    out.push_back({"unembed", ParamGroup::head, -1, &t.unembed});
    return out;
}

template <typename T>
ToyTransformerT<T>::ToyTransformerT(const ToyConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    params_ = ToyTensorsT<T>::shaped(cfg_);
    std::mt19937_64 rng(cfg_.seed);
    const double base = 0.02;
    const double resid = base / std::sqrt(2.0 * cfg_.n_blocks);
    for (auto& ref : named_tensors(params_)) {
        if (ref.name.find("norm") != std::string::npos) {
            std::fill(ref.data->begin(), ref.data->end(), T(1));
            continue;
        }
        // Residual-output projections start smaller so the stream's scale is
        // stable across depth.
        const bool shrink = ref.name.find(".wo") != std::string::npos ||
                            ref.name.find(".w2") != std::string::npos;
        const double sd = shrink ? resid : base;
        for (auto& w : *ref.data) w = (T)(sd * util::rand_normal(rng));
    }
}

template <typename T>
std::size_t ToyTransformerT<T>::param_count() const {
    std::size_t n = 0;
    for (const auto& ref : named_tensors(const_cast<ToyTensorsT<T>&>(params_)))
        n += ref.data->size();
    return n;
}

namespace {

// Gathers one head's columns into a contiguous [n x dh] matrix.
template <typename T>
void gather_head(const std::vector<T>& src, T* dst, int n, int d, int head, int dh) {
    for (int i = 0; i < n; ++i)
        std::memcpy(dst + (std::size_t)i * dh, src.data() + (std::size_t)i * d + head * dh,
                    sizeof(T) * dh);
}

template <typename T>
void scatter_head_add(const T* src, std::vector<T>& dst, int n, int d, int head, int dh) {
    for (int i = 0; i < n; ++i) {
        T* out = dst.data() + (std::size_t)i * d + head * dh;
        const T* in = src + (std::size_t)i * dh;
        for (int o = 0; o < dh; ++o) out[o] += in[o];
    }
}

}  // namespace

template <typename T>
void ToyTransformerT<T>::forward(std::span<const int> tokens, ToyCacheT<T>& cache) const {
    const int n = (int)tokens.size();
    const int d = cfg_.width, m = cfg_.mlp_hidden, V = cfg_.vocab;
    const int H = cfg_.n_heads, dh = d / H;
    if (n == 0) throw std::runtime_error("empty token sequence");
    if (n > cfg_.context) throw std::runtime_error("sequence exceeds context length");
    for (int t : tokens)
        if (t < 0 || t >= V) throw std::runtime_error("token id out of vocabulary: " + std::to_string(t));

    cache.n = n;
    cache.tokens.assign(tokens.begin(), tokens.end());
    cache.blocks.resize(cfg_.n_blocks);

    std::vector<T> x((std::size_t)n * d);
    for (int i = 0; i < n; ++i) {
        const T* te = params_.tok_embed.data() + (std::size_t)tokens[i] * d;
        const T* pe = params_.pos_embed.data() + (std::size_t)i * d;
        kernels::add(te, pe, x.data() + (std::size_t)i * d, d);
    }

    std::vector<T> qh((std::size_t)n * dh), kh((std::size_t)n * dh), vh((std::size_t)n * dh);
    std::vector<T> ah((std::size_t)n * dh);
    const T scale = (T)(1.0 / std::sqrt((double)dh));

    for (int b = 0; b < cfg_.n_blocks; ++b) {
        auto& cb = cache.blocks[b];
        const auto& pb = params_.blocks[b];
        cb.x_in = x;

        cb.xn.resize((std::size_t)n * d);
        cb.inv_rms.resize(n);
        for (int i = 0; i < n; ++i)
            cb.inv_rms[i] = kernels::rmsnorm(cb.x_in.data() + (std::size_t)i * d,
                                             pb.attn_norm.data(),
                                             cb.xn.data() + (std::size_t)i * d, d, (T)cfg_.eps);

        cb.q.resize((std::size_t)n * d);
        cb.k.resize((std::size_t)n * d);
        cb.v.resize((std::size_t)n * d);
        kernels::gemm_nt(cb.xn.data(), pb.wq.data(), cb.q.data(), n, d, d, false);
        kernels::gemm_nt(cb.xn.data(), pb.wk.data(), cb.k.data(), n, d, d, false);
        kernels::gemm_nt(cb.xn.data(), pb.wv.data(), cb.v.data(), n, d, d, false);

        cb.probs.resize((std::size_t)H * n * n);
        cb.attn_cat.assign((std::size_t)n * d, T(0));
        for (int h = 0; h < H; ++h) {
            gather_head(cb.q, qh.data(), n, d, h, dh);
            gather_head(cb.k, kh.data(), n, d, h, dh);
            gather_head(cb.v, vh.data(), n, d, h, dh);
            T* p = cb.probs.data() + (std::size_t)h * n * n;
            kernels::gemm_nt(qh.data(), kh.data(), p, n, n, dh, false);
            kernels::scale(p, scale, n * n);
            for (int i = 0; i < n; ++i) {
                T* row = p + (std::size_t)i * n;
                kernels::softmax_inplace(row, i + 1);
                std::fill(row + i + 1, row + n, T(0));
            }
            kernels::gemm_nn(p, vh.data(), ah.data(), n, dh, n, false);
            scatter_head_add(ah.data(), cb.attn_cat, n, d, h, dh);
        }

        cb.x_mid.resize((std::size_t)n * d);
        kernels::gemm_nt(cb.attn_cat.data(), pb.wo.data(), cb.x_mid.data(), n, d, d, false);
        for (std::size_t i = 0; i < cb.x_mid.size(); ++i) cb.x_mid[i] += cb.x_in[i];

        cb.xn2.resize((std::size_t)n * d);
        cb.inv_rms2.resize(n);
        for (int i = 0; i < n; ++i)
            cb.inv_rms2[i] = kernels::rmsnorm(cb.x_mid.data() + (std::size_t)i * d,
                                              pb.mlp_norm.data(),
                                              cb.xn2.data() + (std::size_t)i * d, d, (T)cfg_.eps);

        cb.h1.resize((std::size_t)n * m);
        cb.h1s.resize((std::size_t)n * m);
        kernels::gemm_nt(cb.xn2.data(), pb.w1.data(), cb.h1.data(), n, m, d, false);
        kernels::silu(cb.h1.data(), cb.h1s.data(), n * m);
        kernels::gemm_nt(cb.h1s.data(), pb.w2.data(), x.data(), n, d, m, false);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += cb.x_mid[i];
    }

    cache.x_final = x;
    cache.xf_norm.resize((std::size_t)n * d);
    cache.inv_rms_f.resize(n);
    for (int i = 0; i < n; ++i)
        cache.inv_rms_f[i] = kernels::rmsnorm(cache.x_final.data() + (std::size_t)i * d,
                                              params_.final_norm.data(),
                                              cache.xf_norm.data() + (std::size_t)i * d, d,
                                              (T)cfg_.eps);
    cache.logits.resize((std::size_t)n * V);
    kernels::gemm_nt(cache.xf_norm.data(), params_.unembed.data(), cache.logits.data(), n, V, d,
                     false);
}

template <typename T>
const T* ToyTransformerT<T>::hidden_at(const ToyCacheT<T>& cache, int block, int pos) const {
    if (block < 0 || block >= cfg_.n_blocks) throw std::runtime_error("block index out of range");
    if (pos < 0 || pos >= cache.n) throw std::runtime_error("position out of range");
    const std::vector<T>& stream =
        block + 1 < cfg_.n_blocks ? cache.blocks[block + 1].x_in : cache.x_final;
    return stream.data() + (std::size_t)pos * cfg_.width;
}

template <typename T>
void ToyTransformerT<T>::lens_logits(const T* h, T* y) const {
    const int d = cfg_.width, V = cfg_.vocab;
    std::vector<T> hn(d);
    kernels::rmsnorm(h, params_.final_norm.data(), hn.data(), d, (T)cfg_.eps);
    kernels::gemm_nt(hn.data(), params_.unembed.data(), y, 1, V, d, false);
}

template <typename T>
T ToyTransformerT<T>::lens_ce_backward(const T* h, int target, T weight, T* d_h,
                                       ToyTensorsT<T>& grads) const {
    const int d = cfg_.width, V = cfg_.vocab;
    if (target < 0 || target >= V) throw std::runtime_error("lens target out of vocabulary");

    std::vector<T> hn(d);
    const T inv = kernels::rmsnorm(h, params_.final_norm.data(), hn.data(), d, (T)cfg_.eps);
    std::vector<T> y((std::size_t)V);
    kernels::gemm_nt(hn.data(), params_.unembed.data(), y.data(), 1, V, d, false);

    const T lse = kernels::logsumexp(y.data(), V);
    const T loss = lse - y[target];

    // dL/dy = softmax(y) - onehot(target), scaled by weight.
    std::vector<T>& dy = y;
    kernels::softmax_inplace(dy.data(), V);
    dy[target] -= T(1);
    kernels::scale(dy.data(), weight, V);

    // dy -> unembed rows and normalized hidden.
    kernels::gemm_tn(dy.data(), hn.data(), grads.unembed.data(), V, d, 1, true);
    std::vector<T> d_hn(d);
    kernels::gemm_nn(dy.data(), params_.unembed.data(), d_hn.data(), 1, d, V, false);
    kernels::rmsnorm_backward(h, params_.final_norm.data(), d_hn.data(), inv, d_h,
                              grads.final_norm.data(), d);
    return weight * loss;
}

template <typename T>
T ToyTransformerT<T>::embed_cos_backward(const T* h, int token, T weight, T* d_h,
                                         ToyTensorsT<T>& grads) const {
    const int d = cfg_.width;
    if (token < 0 || token >= cfg_.vocab) throw std::runtime_error("token out of vocabulary");
    const T* u = params_.tok_embed.data() + (std::size_t)token * d;

    const T uu = kernels::dot(u, u, d);
    const T hh = kernels::dot(h, h, d);
    if (uu == T(0) || hh == T(0)) throw std::runtime_error("zero-norm vector in cosine similarity");
    const T nu = std::sqrt(uu), nh = std::sqrt(hh);
    const T uh = kernels::dot(u, h, d);
    const T cos = uh / (nu * nh);

    // d cos / dh = u/(|u||h|) - cos * h/|h|^2, symmetric for u.
    T* du = grads.tok_embed.data() + (std::size_t)token * d;
    for (int i = 0; i < d; ++i) {
        d_h[i] += weight * (u[i] / (nu * nh) - cos * h[i] / hh);
        du[i] += weight * (h[i] / (nu * nh) - cos * u[i] / uu);
    }
    return cos;
}

template <typename T>
void ToyTransformerT<T>::backward(const ToyCacheT<T>& cache, const LogitGradT<T>& dlogits,
                                  const InjectionT<T>* injection, ToyTensorsT<T>& grads) const {
    const int n = cache.n;
    const int d = cfg_.width, m = cfg_.mlp_hidden, V = cfg_.vocab;
    const int H = cfg_.n_heads, dh = d / H;
    const int nr = (int)dlogits.rows.size();
    if ((int)dlogits.d.size() != nr * V) throw std::runtime_error("logit gradient shape mismatch");

    // Head of the network: logits -> final norm -> residual stream.
    std::vector<T> dx((std::size_t)n * d, T(0));
    if (nr > 0) {
        std::vector<T> xf_rows((std::size_t)nr * d);
        for (int r = 0; r < nr; ++r)
            std::memcpy(xf_rows.data() + (std::size_t)r * d,
                        cache.xf_norm.data() + (std::size_t)dlogits.rows[r] * d, sizeof(T) * d);
        kernels::gemm_tn(dlogits.d.data(), xf_rows.data(), grads.unembed.data(), V, d, nr, true);

        std::vector<T> d_xf((std::size_t)nr * d);
        kernels::gemm_nn(dlogits.d.data(), params_.unembed.data(), d_xf.data(), nr, d, V, false);
        for (int r = 0; r < nr; ++r) {
            const int i = dlogits.rows[r];
            kernels::rmsnorm_backward(cache.x_final.data() + (std::size_t)i * d,
                                      params_.final_norm.data(),
                                      d_xf.data() + (std::size_t)r * d, cache.inv_rms_f[i],
                                      dx.data() + (std::size_t)i * d, grads.final_norm.data(), d);
        }
    }

    std::vector<T> qh((std::size_t)n * dh), kh((std::size_t)n * dh), vh((std::size_t)n * dh);
    std::vector<T> d_qh((std::size_t)n * dh), d_kh((std::size_t)n * dh), d_vh((std::size_t)n * dh);
    std::vector<T> d_p((std::size_t)n * n);
    const T scale = (T)(1.0 / std::sqrt((double)dh));

    for (int b = cfg_.n_blocks - 1; b >= 0; --b) {
        if (injection && injection->block == b) {
            T* row = dx.data() + (std::size_t)injection->pos * d;
            for (int i = 0; i < d; ++i) row[i] += injection->d_hidden[i];
        }

        const auto& cb = cache.blocks[b];
        const auto& pb = params_.blocks[b];
        auto& gb = grads.blocks[b];

        // MLP half. x_out = x_mid + silu(xn2 w1^T) w2^T.
        std::vector<T> d_h1s((std::size_t)n * m);
        kernels::gemm_tn(dx.data(), cb.h1s.data(), gb.w2.data(), d, m, n, true);
        kernels::gemm_nn(dx.data(), pb.w2.data(), d_h1s.data(), n, m, d, false);
        std::vector<T> d_h1((std::size_t)n * m, T(0));
        kernels::silu_backward(cb.h1.data(), d_h1s.data(), d_h1.data(), n * m);
        kernels::gemm_tn(d_h1.data(), cb.xn2.data(), gb.w1.data(), m, d, n, true);
        std::vector<T> d_xn2((std::size_t)n * d);
        kernels::gemm_nn(d_h1.data(), pb.w1.data(), d_xn2.data(), n, d, m, false);

        std::vector<T>& d_x_mid = dx;  // residual: dL/dx_mid starts as dL/dx_out
        for (int i = 0; i < n; ++i)
            kernels::rmsnorm_backward(cb.x_mid.data() + (std::size_t)i * d, pb.mlp_norm.data(),
                                      d_xn2.data() + (std::size_t)i * d, cb.inv_rms2[i],
                                      d_x_mid.data() + (std::size_t)i * d, gb.mlp_norm.data(), d);

        // Attention half. x_mid = x_in + attn_cat wo^T.
        kernels::gemm_tn(d_x_mid.data(), cb.attn_cat.data(), gb.wo.data(), d, d, n, true);
        std::vector<T> d_attn_cat((std::size_t)n * d);
        kernels::gemm_nn(d_x_mid.data(), pb.wo.data(), d_attn_cat.data(), n, d, d, false);

        std::vector<T> d_q((std::size_t)n * d, T(0)), d_k((std::size_t)n * d, T(0)),
            d_v((std::size_t)n * d, T(0));
        for (int h = 0; h < H; ++h) {
            gather_head(cb.q, qh.data(), n, d, h, dh);
            gather_head(cb.k, kh.data(), n, d, h, dh);
            gather_head(cb.v, vh.data(), n, d, h, dh);
            std::vector<T> d_ah((std::size_t)n * dh);
            gather_head(d_attn_cat, d_ah.data(), n, d, h, dh);
            const T* p = cb.probs.data() + (std::size_t)h * n * n;

            kernels::gemm_nt(d_ah.data(), vh.data(), d_p.data(), n, n, dh, false);
            kernels::gemm_tn(p, d_ah.data(), d_vh.data(), n, dh, n, false);

            // Softmax backward per causal row, then undo the score scaling.
            for (int i = 0; i < n; ++i) {
                const T* prow = p + (std::size_t)i * n;
                T* drow = d_p.data() + (std::size_t)i * n;
                const T pd = kernels::dot(prow, drow, i + 1);
                for (int j = 0; j <= i; ++j) drow[j] = prow[j] * (drow[j] - pd) * scale;
                std::fill(drow + i + 1, drow + n, T(0));
            }

            kernels::gemm_nn(d_p.data(), kh.data(), d_qh.data(), n, dh, n, false);
            kernels::gemm_tn(d_p.data(), qh.data(), d_kh.data(), n, dh, n, false);
            scatter_head_add(d_qh.data(), d_q, n, d, h, dh);
            scatter_head_add(d_kh.data(), d_k, n, d, h, dh);
            scatter_head_add(d_vh.data(), d_v, n, d, h, dh);
        }

        kernels::gemm_tn(d_q.data(), cb.xn.data(), gb.wq.data(), d, d, n, true);
        kernels::gemm_tn(d_k.data(), cb.xn.data(), gb.wk.data(), d, d, n, true);
        kernels::gemm_tn(d_v.data(), cb.xn.data(), gb.wv.data(), d, d, n, true);
        std::vector<T> d_xn((std::size_t)n * d);
        kernels::gemm_nn(d_q.data(), pb.wq.data(), d_xn.data(), n, d, d, false);
        kernels::gemm_nn(d_k.data(), pb.wk.data(), d_xn.data(), n, d, d, true);
        kernels::gemm_nn(d_v.data(), pb.wv.data(), d_xn.data(), n, d, d, true);

        std::vector<T>& d_x_in = dx;  // residual again
        for (int i = 0; i < n; ++i)
            kernels::rmsnorm_backward(cb.x_in.data() + (std::size_t)i * d, pb.attn_norm.data(),
                                      d_xn.data() + (std::size_t)i * d, cb.inv_rms[i],
                                      d_x_in.data() + (std::size_t)i * d, gb.attn_norm.data(), d);
    }

    // Embedding gradients: dx is now dL/dx0.
    for (int i = 0; i < n; ++i) {
        const T* src = dx.data() + (std::size_t)i * d;
        T* te = grads.tok_embed.data() + (std::size_t)cache.tokens[i] * d;
        T* pe = grads.pos_embed.data() + (std::size_t)i * d;
        for (int j = 0; j < d; ++j) {
            te[j] += src[j];
            pe[j] += src[j];
        }
    }
}

template struct ToyTensorsT<float>;
template struct ToyTensorsT<double>;
template std::vector<ParamRefT<float>> named_tensors(ToyTensorsT<float>&);
template std::vector<ParamRefT<double>> named_tensors(ToyTensorsT<double>&);
template class ToyTransformerT<float>;
template class ToyTransformerT<double>;

}  // namespace twohop::model
