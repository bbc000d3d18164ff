#include "twohop/train/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "twohop/model/chat.hpp"

namespace twohop::train {

bool AuxLossSpec::applies(corpus::QaKind kind) const {
    return std::find(applies_to.begin(), applies_to.end(), kind) != applies_to.end();
}

int default_aux_block(int n_blocks) { return (10 * n_blocks) / 32; }

int AuxLossSpec::resolved_block(int n_blocks) const {
    const int b = block >= 0 ? block : default_aux_block(n_blocks);
    if (b < 0 || b >= n_blocks)
        throw std::runtime_error("aux block " + std::to_string(b) + " outside model depth");
    return b;
}

double AuxLossSpec::resolved_coefficient() const {
    if (coefficient >= 0) return coefficient;
    switch (variant) {
        case Variant::logit_lens: return kDefaultLogitLensCoeff;
        case Variant::embed_lens: return kDefaultEmbedLensCoeff;
        case Variant::none: return 0.0;
    }
    return 0.0;
}

const char* to_string(AuxLossSpec::Variant v) {
    switch (v) {
        case AuxLossSpec::Variant::none: return "none";
        case AuxLossSpec::Variant::logit_lens: return "logit_lens";
        case AuxLossSpec::Variant::embed_lens: return "embed_lens";
    }
    throw std::runtime_error("bad aux variant");
}

AuxLossSpec::Variant aux_variant_from_string(const std::string& s) {
    if (s == "none") return AuxLossSpec::Variant::none;
    if (s == "logit_lens") return AuxLossSpec::Variant::logit_lens;
    if (s == "embed_lens") return AuxLossSpec::Variant::embed_lens;
    throw std::runtime_error("unknown aux variant: " + s);
}

nlohmann::json AuxLossSpec::to_json() const {
    nlohmann::json kinds = nlohmann::json::array();
    for (auto k : applies_to) kinds.push_back(corpus::to_string(k));
    return {{"variant", to_string(variant)},
            {"block", block},
            {"coefficient", coefficient},
            {"applies_to", kinds},
            {"normalized_hidden", normalized_hidden}};
}

AuxLossSpec AuxLossSpec::from_json(const nlohmann::json& j) {
    AuxLossSpec s;
    s.variant = aux_variant_from_string(j.at("variant").get<std::string>());
    s.block = j.at("block").get<int>();
    s.coefficient = j.at("coefficient").get<double>();
    s.applies_to.clear();
    for (const auto& k : j.at("applies_to"))
        s.applies_to.push_back(corpus::qa_kind_from_string(k.get<std::string>()));
    s.normalized_hidden = j.value("normalized_hidden", false);
    return s;
}

namespace {

// Cross-entropy of one logit row against a target id, accumulated in double.
double ce_row(std::span<const float> row, int target) {
    double mx = row[0];
    for (float v : row) mx = std::max(mx, (double)v);
    double sum = 0;
    for (float v : row) sum += std::exp((double)v - mx);
    return mx + std::log(sum) - (double)row[target];
}

int bridge_target(const model::Tokenizer& tok, const corpus::ChatExample& ex) {
    if (ex.bridge.empty()) throw std::runtime_error("example carries no bridge entity");
    return tok.entity_id(ex.bridge);
}

}  // namespace

double lm_loss(model::ModelAdapter& adapter, const std::vector<corpus::ChatExample>& batch) {
    if (batch.empty()) throw std::runtime_error("lm_loss over an empty batch");
    const auto& tok = adapter.tokenizer();
    const int V = tok.vocab_size();
    double sum = 0;
    long long n = 0;
    for (const auto& ex : batch) {
        const auto r = model::render_chat(tok, ex, {}, true);
        const auto logits = adapter.forward(r.tokens);
        for (int p = r.answer_begin; p < r.answer_end; ++p) {
            sum += ce_row(logits.subspan((std::size_t)(p - 1) * V, (std::size_t)V), r.tokens[p]);
            ++n;
        }
    }
    return sum / (double)n;
}

double aux_logit_lens(model::ModelAdapter& adapter, const corpus::ChatExample& ex,
                      const AuxLossSpec& spec) {
    if (spec.variant != AuxLossSpec::Variant::logit_lens)
        throw std::runtime_error("spec variant is not logit_lens");
    const auto& tok = adapter.tokenizer();
    const int target = bridge_target(tok, ex);
    const int pos = model::bridge_position(tok, ex, {});
    const auto r = model::render_chat(tok, ex, {}, false);
    adapter.forward(r.tokens);
    const auto h = adapter.hidden_at(spec.resolved_block(adapter.n_blocks()), pos);
    const auto y = adapter.unembed(h);
    return ce_row(y, target);
}

double aux_embed_lens(model::ModelAdapter& adapter, const corpus::ChatExample& ex,
                      const AuxLossSpec& spec) {
    if (spec.variant != AuxLossSpec::Variant::embed_lens)
        throw std::runtime_error("spec variant is not embed_lens");
    const auto& tok = adapter.tokenizer();
    const int target = bridge_target(tok, ex);
    const int pos = model::bridge_position(tok, ex, {});
    const auto r = model::render_chat(tok, ex, {}, false);
    adapter.forward(r.tokens);
    const auto raw = adapter.hidden_at(spec.resolved_block(adapter.n_blocks()), pos);
    std::vector<float> h(raw.begin(), raw.end());
    if (spec.normalized_hidden) h = adapter.final_norm(h);
    const auto u = adapter.embedding_row(target);

    double uu = 0, hh = 0, uh = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        uu += (double)u[i] * u[i];
        hh += (double)h[i] * h[i];
        uh += (double)u[i] * h[i];
    }
    if (uu == 0 || hh == 0) throw std::runtime_error("zero-norm vector in embed lens");
    return -uh / (std::sqrt(uu) * std::sqrt(hh));
}

LossBreakdown total_loss(model::ModelAdapter& adapter,
                         const std::vector<corpus::ChatExample>& batch, const AuxLossSpec& spec) {
    LossBreakdown out;
    out.lm = lm_loss(adapter, batch);
    for (const auto& ex : batch) {
        const auto r = model::render_chat(adapter.tokenizer(), ex, {}, true);
        out.lm_tokens += r.answer_end - r.answer_begin;
    }
    if (spec.enabled()) {
        double aux_sum = 0;
        for (const auto& ex : batch) {
            if (!spec.applies(ex.kind) || !ex.bridge_char_span) continue;
            aux_sum += spec.variant == AuxLossSpec::Variant::logit_lens
                           ? aux_logit_lens(adapter, ex, spec)
                           : aux_embed_lens(adapter, ex, spec);
            ++out.aux_examples;
        }
        if (out.aux_examples > 0) out.aux = aux_sum / out.aux_examples;
    }
    out.total = out.lm + spec.resolved_coefficient() * out.aux;
    return out;
}

}  // namespace twohop::train
