#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "twohop/corpus/templates.hpp"
#include "twohop/corpus/types.hpp"

namespace twohop::mixtures {

enum class MixtureKind { full, no_cot, atomic_only };

const char* to_string(MixtureKind k);
MixtureKind mixture_kind_from_string(const std::string& s);

struct DistractorPolicy {
    enum class Mode { none, semantic, other_triplets };
    Mode mode = Mode::none;
    int n = 0;  // distractor triplet count, other_triplets only

    std::string to_string() const;
    static DistractorPolicy parse(const std::string& s);
};

struct SetProvenance {
    std::string setting;
    std::uint64_t seed = 0;
    std::string policy = "none";
    int few_shot_k = 0;
};

struct ExampleSet {
    std::vector<corpus::ChatExample> examples;
    // Fixed demonstrations prepended to every sample at evaluation time.
    std::vector<corpus::ChatExample> few_shot;
    SetProvenance provenance;

    std::size_t count_kind(corpus::QaKind k) const;
};

// Table-driven mixture assembly: full = demonstrated x all four QA kinds +
// undemonstrated x one-hop kinds; no_cot drops two_hop_cot; atomic_only keeps
// one-hop kinds only. Each cell expands to 30 paraphrases, then a seeded
// global permutation shuffles the whole set.
ExampleSet assemble_training_set(const corpus::Corpus& corpus, MixtureKind kind,
                                 const corpus::TemplateBank& bank, std::uint64_t seed);

// Replaces the one-hop QA pairs with per-triplet documents stating both facts
// in logical order (spouse fact first); two-hop QA pairs are kept as in the
// full mixture. Distractor text goes between the two facts per policy.
ExampleSet make_same_document_set(const corpus::Corpus& corpus, DistractorPolicy policy,
                                  const corpus::TemplateBank& bank, std::uint64_t seed);

// One document listing several triplets: all marriage facts, a blank line,
// then all birth facts, triplet order shared by both blocks. Exposed so the
// document format is testable against a pinned fixture.
corpus::ChatExample make_other_triplets_document(const corpus::TemplateBank& bank,
                                                 const std::vector<corpus::Triplet>& listing,
                                                 std::size_t target_index, int template_id);

// Prompts containing the facts of n_distractors + 1 triplets in per-sample
// random order followed by the target's two-hop question. Targets are the
// undemonstrated triplets; no fine-tuning involved.
ExampleSet make_in_context_eval(const corpus::Corpus& corpus, int n_distractors,
                                const corpus::TemplateBank& bank, std::uint64_t seed);

// Canonical-surface (template 0) QA set, optionally filtered by split.
ExampleSet make_qa_eval(const corpus::Corpus& corpus, corpus::QaKind kind,
                        std::optional<corpus::Split> split, const corpus::TemplateBank& bank);

// Samples k demonstrations of the eval set's kind from the training set and
// fixes them for every sample. k = 0 returns the set unchanged.
ExampleSet attach_few_shot(const ExampleSet& eval_set, const ExampleSet& training_set, int k,
                           std::uint64_t seed);

// base.jsonl holds the examples; base.manifest.json records provenance,
// counts, the content hash, and the few-shot block.
void save_set(const ExampleSet& set, const std::filesystem::path& base);
ExampleSet load_set(const std::filesystem::path& base);

// Every surface string any rendered set over this corpus can contain, for
// closed-vocabulary construction. Includes composed documents so that both
// sentence-initial and mid-sentence word forms are present.
std::vector<std::string> all_surfaces(const corpus::Corpus& corpus,
                                      const corpus::TemplateBank& bank);

}  // namespace twohop::mixtures
