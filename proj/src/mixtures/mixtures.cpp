#include "twohop/mixtures/mixtures.hpp"

#include <algorithm>
#include <stdexcept>

#include "twohop/corpus/serialize.hpp"
#include "twohop/util/hash.hpp"
#include "twohop/util/rng.hpp"
#include "twohop/util/text.hpp"

namespace twohop::mixtures {

using corpus::ChatExample;
using corpus::Corpus;
using corpus::QaKind;
using corpus::Split;
using corpus::TemplateBank;
using corpus::Triplet;

const char* to_string(MixtureKind k) {
    switch (k) {
        case MixtureKind::full: return "full";
        case MixtureKind::no_cot: return "no_cot";
        case MixtureKind::atomic_only: return "atomic_only";
    }
    return "?";
}

MixtureKind mixture_kind_from_string(const std::string& s) {
    if (s == "full") return MixtureKind::full;
    if (s == "no_cot") return MixtureKind::no_cot;
    if (s == "atomic_only") return MixtureKind::atomic_only;
    throw std::runtime_error("unknown mixture kind: " + s);
}

std::string DistractorPolicy::to_string() const {
    switch (mode) {
        case Mode::none: return "none";
        case Mode::semantic: return "semantic";
        case Mode::other_triplets: return "other_triplets:" + std::to_string(n);
    }
    return "?";
}

DistractorPolicy DistractorPolicy::parse(const std::string& s) {
    if (s == "none") return {Mode::none, 0};
    if (s == "semantic") return {Mode::semantic, 0};
    if (s.rfind("other_triplets:", 0) == 0) {
        const int n = std::stoi(s.substr(15));
        if (n < 1) throw std::runtime_error("other_triplets distractor count must be >= 1");
        return {Mode::other_triplets, n};
    }
    throw std::runtime_error("unknown distractor policy: " + s);
}

std::size_t ExampleSet::count_kind(QaKind k) const {
    std::size_t n = 0;
    for (const auto& ex : examples) n += ex.kind == k;
    return n;
}

namespace {

// Which QA kinds each (mixture, split) cell contributes.
std::vector<QaKind> cell_kinds(MixtureKind kind, Split split) {
    const bool demonstrated = split == Split::demonstrated;
    switch (kind) {
        case MixtureKind::full:
            if (demonstrated)
                return {QaKind::first_hop, QaKind::second_hop, QaKind::two_hop_cot,
                        QaKind::two_hop_no_cot};
            return {QaKind::first_hop, QaKind::second_hop};
        case MixtureKind::no_cot:
            if (demonstrated)
                return {QaKind::first_hop, QaKind::second_hop, QaKind::two_hop_no_cot};
            return {QaKind::first_hop, QaKind::second_hop};
        case MixtureKind::atomic_only:
            return {QaKind::first_hop, QaKind::second_hop};
    }
    throw std::runtime_error("unknown mixture kind");
}

}  // namespace

ExampleSet assemble_training_set(const Corpus& corpus, MixtureKind kind,
                                 const TemplateBank& bank, std::uint64_t seed) {
    ExampleSet set;
    set.provenance = {std::string("mixture:") + to_string(kind), seed, "none", 0};
    for (const auto& t : corpus.triplets) {
        for (QaKind qk : cell_kinds(kind, t.split)) {
            auto para = bank.paraphrase_set(t, qk);
            set.examples.insert(set.examples.end(), para.begin(), para.end());
        }
    }
    std::mt19937_64 rng(seed);
    util::seeded_shuffle(set.examples, rng);
    return set;
}

namespace {

ChatExample make_plain_document(const TemplateBank& bank, const Triplet& t, int template_id,
                                const std::string& filler) {
    ChatExample ex;
    ex.system = bank.system_for(QaKind::first_hop);
    ex.user = bank.same_doc_user(t.e1);
    std::string doc = bank.marriage_statement(template_id, t.e1, t.e2);
    if (!filler.empty()) doc += " " + filler;
    doc += " " + bank.birth_statement(template_id, t.e2, t.e3);
    ex.assistant = doc;
    ex.kind = QaKind::same_document;
    ex.triplet_id = t.id;
    ex.template_id = template_id;
    ex.split = t.split;
    ex.answer = t.e3;
    ex.bridge = t.e2;
    return ex;
}

}  // namespace

ChatExample make_other_triplets_document(const TemplateBank& bank,
                                         const std::vector<Triplet>& listing,
                                         std::size_t target_index, int template_id) {
    if (target_index >= listing.size())
        throw std::runtime_error("target_index out of range");
    std::vector<std::string> people;
    std::vector<std::string> marriage, birth;
    for (std::size_t j = 0; j < listing.size(); ++j) {
        const auto& t = listing[j];
        const int st = (template_id + 1 + (int)j) % TemplateBank::kParaphrases;
        people.push_back(t.e1);
        marriage.push_back(bank.marriage_statement(st, t.e1, t.e2));
        birth.push_back(bank.birth_statement(st, t.e2, t.e3));
    }
    const auto& target = listing[target_index];
    ChatExample ex;
    ex.system = bank.system_for(QaKind::first_hop);
    ex.user = bank.other_triplets_user(people);
    ex.assistant = util::join(marriage, " ") + "\n\n" + util::join(birth, " ");
    ex.kind = QaKind::same_document;
    ex.triplet_id = target.id;
    ex.template_id = template_id;
    ex.split = target.split;
    ex.answer = target.e3;
    ex.bridge = target.e2;
    return ex;
}

ExampleSet make_same_document_set(const Corpus& corpus, DistractorPolicy policy,
                                  const TemplateBank& bank, std::uint64_t seed) {
    if (policy.mode == DistractorPolicy::Mode::other_triplets &&
        policy.n > (int)corpus.triplets.size() - 1)
        throw std::runtime_error("other_triplets distractor count exceeds corpus size - 1");

    ExampleSet set;
    set.provenance = {"same_document", seed, policy.to_string(), 0};
    std::mt19937_64 rng(seed);

    for (const auto& t : corpus.triplets) {
        for (int p = 0; p < TemplateBank::kParaphrases; ++p) {
            switch (policy.mode) {
                case DistractorPolicy::Mode::none:
                    set.examples.push_back(make_plain_document(bank, t, p, ""));
                    break;
                case DistractorPolicy::Mode::semantic:
                    set.examples.push_back(
                        make_plain_document(bank, t, p, bank.semantic_filler(p, t.e1, t.e2)));
                    break;
                case DistractorPolicy::Mode::other_triplets: {
                    // Sample n distinct other triplets, then place the target
                    // at a random slot in the listing.
                    std::vector<std::size_t> others;
                    for (std::size_t i = 0; i < corpus.triplets.size(); ++i)
                        if (corpus.triplets[i].id != t.id) others.push_back(i);
                    util::seeded_shuffle(others, rng);
                    others.resize(policy.n);
                    const std::size_t slot = (std::size_t)util::rand_below(rng, policy.n + 1);
                    std::vector<Triplet> listing;
                    for (std::size_t j = 0; j < others.size(); ++j)
                        listing.push_back(corpus.triplets[others[j]]);
                    listing.insert(listing.begin() + slot, t);
                    set.examples.push_back(
                        make_other_triplets_document(bank, listing, slot, p));
                    break;
                }
            }
        }
        // Two-hop QA pairs stay as in the full mixture (demonstrated only).
        if (t.split == Split::demonstrated) {
            for (QaKind qk : {QaKind::two_hop_cot, QaKind::two_hop_no_cot}) {
                auto para = bank.paraphrase_set(t, qk);
                set.examples.insert(set.examples.end(), para.begin(), para.end());
            }
        }
    }
    util::seeded_shuffle(set.examples, rng);
    return set;
}

ExampleSet make_in_context_eval(const Corpus& corpus, int n_distractors,
                                const TemplateBank& bank, std::uint64_t seed) {
    std::vector<std::size_t> targets;
    for (std::size_t i = 0; i < corpus.triplets.size(); ++i)
        if (corpus.triplets[i].split == Split::undemonstrated) targets.push_back(i);
    if ((int)targets.size() < n_distractors + 1)
        throw std::runtime_error("need at least " + std::to_string(n_distractors + 1) +
                                 " undemonstrated triplets, have " +
                                 std::to_string(targets.size()));

    ExampleSet set;
    set.provenance = {"in_context:" + std::to_string(n_distractors), seed, "none", 0};
    std::mt19937_64 rng(seed);

    for (std::size_t ti : targets) {
        const Triplet& target = corpus.triplets[ti];
        std::vector<std::size_t> others;
        for (std::size_t i : targets)
            if (i != ti) others.push_back(i);
        util::seeded_shuffle(others, rng);
        others.resize(n_distractors);

        std::vector<std::string> facts;
        facts.push_back(bank.marriage_statement(0, target.e1, target.e2));
        facts.push_back(bank.birth_statement(0, target.e2, target.e3));
        for (std::size_t i : others) {
            const Triplet& d = corpus.triplets[i];
            facts.push_back(bank.marriage_statement(0, d.e1, d.e2));
            facts.push_back(bank.birth_statement(0, d.e2, d.e3));
        }
        util::seeded_shuffle(facts, rng);

        ChatExample q = bank.render_qa(target, QaKind::two_hop_no_cot, 0);
        ChatExample ex = q;
        ex.system = bank.system_in_context();
        const std::string prefix = util::join(facts, "\n") + "\n";
        ex.user = prefix + q.user;
        if (q.bridge_char_span)
            ex.bridge_char_span = corpus::CharSpan{q.bridge_char_span->begin + (int)prefix.size(),
                                                   q.bridge_char_span->end + (int)prefix.size()};
        set.examples.push_back(std::move(ex));
    }
    return set;
}

ExampleSet make_qa_eval(const Corpus& corpus, QaKind kind, std::optional<Split> split,
                        const TemplateBank& bank) {
    ExampleSet set;
    std::string setting = std::string("eval:") + corpus::to_string(kind);
    if (split) setting += std::string(":") + corpus::to_string(*split);
    set.provenance = {setting, 0, "none", 0};
    for (const auto& t : corpus.triplets) {
        if (split && t.split != *split) continue;
        set.examples.push_back(bank.render_qa(t, kind, 0));
    }
    return set;
}

ExampleSet attach_few_shot(const ExampleSet& eval_set, const ExampleSet& training_set, int k,
                           std::uint64_t seed) {
    if (k == 0) return eval_set;
    if (eval_set.examples.empty()) throw std::runtime_error("empty eval set");
    const QaKind mode = eval_set.examples.front().kind;

    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < training_set.examples.size(); ++i)
        if (training_set.examples[i].kind == mode) candidates.push_back(i);
    if ((int)candidates.size() < k)
        throw std::runtime_error("training set has " + std::to_string(candidates.size()) +
                                 " examples of kind " + corpus::to_string(mode) + ", need " +
                                 std::to_string(k));

    std::mt19937_64 rng(seed);
    util::seeded_shuffle(candidates, rng);
    candidates.resize(k);

    ExampleSet out = eval_set;
    out.few_shot.clear();
    for (std::size_t i : candidates) out.few_shot.push_back(training_set.examples[i]);
    out.provenance.few_shot_k = k;
    return out;
}

namespace {

util::json set_manifest(const ExampleSet& set, const std::string& hash) {
    util::json counts = util::json::object();
    for (QaKind k : {QaKind::first_hop, QaKind::second_hop, QaKind::two_hop_cot,
                     QaKind::two_hop_no_cot, QaKind::same_document}) {
        const auto n = set.count_kind(k);
        if (n) counts[corpus::to_string(k)] = n;
    }
    util::json few;
    few = util::json::array();
    for (const auto& ex : set.few_shot) few.push_back(corpus::to_json(ex));
    return {{"setting", set.provenance.setting},
            {"seed", set.provenance.seed},
            {"policy", set.provenance.policy},
            {"few_shot_k", set.provenance.few_shot_k},
            {"counts", {{"total", set.examples.size()}, {"by_kind", counts}}},
            {"content_hash", hash},
            {"few_shot", few}};
}

}  // namespace

void save_set(const ExampleSet& set, const std::filesystem::path& base) {
    std::filesystem::path jsonl = base;
    jsonl += ".jsonl";
    util::Fnv1a64 hash;
    {
        util::JsonlWriter w(jsonl);
        for (const auto& ex : set.examples) {
            const auto row = corpus::to_json(ex);
            hash.update(row.dump());
            hash.update("\n");
            w.write(row);
        }
    }
    std::filesystem::path manifest = base;
    manifest += ".manifest.json";
    util::write_json_file(manifest, set_manifest(set, util::format_hash(hash.digest())));
}

ExampleSet load_set(const std::filesystem::path& base) {
    std::filesystem::path jsonl = base;
    jsonl += ".jsonl";
    std::filesystem::path manifest = base;
    manifest += ".manifest.json";

    ExampleSet set;
    set.examples = corpus::load_examples(jsonl);
    const util::json m = util::read_json_file(manifest);
    set.provenance.setting = m.at("setting").get<std::string>();
    set.provenance.seed = m.at("seed").get<std::uint64_t>();
    set.provenance.policy = m.at("policy").get<std::string>();
    set.provenance.few_shot_k = m.at("few_shot_k").get<int>();
    for (const auto& row : m.at("few_shot"))
        set.few_shot.push_back(corpus::chat_example_from_json(row));
    return set;
}

std::vector<std::string> all_surfaces(const corpus::Corpus& corpus,
                                      const corpus::TemplateBank& bank) {
    using corpus::QaKind;
    std::vector<std::string> out;
    out.reserve(corpus.triplets.size() * (4 * corpus::TemplateBank::kParaphrases * 2 + 8));
    for (QaKind kind : {QaKind::first_hop, QaKind::second_hop, QaKind::two_hop_cot,
                        QaKind::two_hop_no_cot})
        out.push_back(bank.system_for(kind));
    out.push_back(bank.system_in_context());
    out.push_back("\n");
    out.push_back("\n\n");
    for (const auto& t : corpus.triplets) {
        out.push_back(bank.same_doc_user(t.e1));
        out.push_back(bank.other_triplets_user({t.e1, t.e1}));
        for (int p = 0; p < corpus::TemplateBank::kParaphrases; ++p) {
            for (QaKind kind : {QaKind::first_hop, QaKind::second_hop, QaKind::two_hop_cot,
                                QaKind::two_hop_no_cot}) {
                const auto ex = bank.render_qa(t, kind, p);
                out.push_back(ex.user);
                out.push_back(ex.assistant);
            }
            const std::string marriage = bank.marriage_statement(p, t.e1, t.e2);
            const std::string birth = bank.birth_statement(p, t.e2, t.e3);
            out.push_back(marriage);
            out.push_back(birth);
            out.push_back(marriage + " " + birth);
            out.push_back(marriage + " " + bank.semantic_filler(p, t.e1, t.e2) + " " + birth);
        }
    }
    return out;
}

}  // namespace twohop::mixtures
