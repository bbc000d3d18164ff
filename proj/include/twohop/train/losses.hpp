#pragma once

#include <string>
#include <vector>

#include "twohop/corpus/types.hpp"
#include "twohop/model/adapter.hpp"

namespace twohop::train {

// Auxiliary activation-level loss attached to the bridge position of two-hop
// questions: either cross-entropy through the logit lens or negative cosine
// against the bridge entity's embedding row.
struct AuxLossSpec {
    enum class Variant { none, logit_lens, embed_lens };

    Variant variant = Variant::none;
    int block = -1;           // -1 picks default_aux_block(n_blocks)
    double coefficient = -1;  // -1 picks the per-variant default
    std::vector<corpus::QaKind> applies_to = {corpus::QaKind::two_hop_cot,
                                              corpus::QaKind::two_hop_no_cot};
    // Embed lens compares against the raw residual vector by default; set to
    // compare against the final-norm output instead.
    bool normalized_hidden = false;

    bool enabled() const { return variant != Variant::none; }
    bool applies(corpus::QaKind kind) const;
    int resolved_block(int n_blocks) const;
    double resolved_coefficient() const;

    nlohmann::json to_json() const;
    static AuxLossSpec from_json(const nlohmann::json& j);
};

const char* to_string(AuxLossSpec::Variant v);
AuxLossSpec::Variant aux_variant_from_string(const std::string& s);

// Depth fraction 10/32, rounded down to a block index.
int default_aux_block(int n_blocks);

inline constexpr double kDefaultLogitLensCoeff = 0.01;
inline constexpr double kDefaultEmbedLensCoeff = 0.1;
inline constexpr double kCoeffSweepGrid[] = {0.001, 0.01, 0.1, 1.0};

struct LossBreakdown {
    double lm = 0;          // mean over loss-bearing tokens
    double aux = 0;         // mean over aux-eligible examples
    double total = 0;       // lm + coefficient * aux
    long long lm_tokens = 0;
    int aux_examples = 0;
};

// Mean language-model loss over the assistant spans of a batch. Throws when
// the batch is empty or an example has an empty span.
double lm_loss(model::ModelAdapter& adapter, const std::vector<corpus::ChatExample>& batch);

// Single-example aux losses; both require logits/hidden capabilities.
double aux_logit_lens(model::ModelAdapter& adapter, const corpus::ChatExample& ex,
                      const AuxLossSpec& spec);
double aux_embed_lens(model::ModelAdapter& adapter, const corpus::ChatExample& ex,
                      const AuxLossSpec& spec);

LossBreakdown total_loss(model::ModelAdapter& adapter,
                         const std::vector<corpus::ChatExample>& batch, const AuxLossSpec& spec);

}  // namespace twohop::train
