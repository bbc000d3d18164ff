#include "doctest.h"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "twohop/corpus/generate.hpp"
#include "twohop/corpus/serialize.hpp"
#include "twohop/corpus/templates.hpp"
#include "twohop/eval/answers.hpp"
#include "twohop/mixtures/mixtures.hpp"

using namespace twohop;
using corpus::ChatExample;
using corpus::Corpus;
using corpus::QaKind;
using corpus::Split;
using corpus::TemplateBank;
using corpus::Triplet;
using mixtures::DistractorPolicy;
using mixtures::ExampleSet;
using mixtures::MixtureKind;
using mixtures::assemble_training_set;
using mixtures::attach_few_shot;
using mixtures::load_set;
using mixtures::make_in_context_eval;
using mixtures::make_other_triplets_document;
using mixtures::make_qa_eval;
using mixtures::make_same_document_set;
using mixtures::save_set;

namespace {

const Corpus& full_corpus() {
    static Corpus c = corpus::generate_corpus(450, 243, corpus::NamePools::builtin(), 20260823);
    return c;
}

Corpus small_corpus() {
    return corpus::generate_corpus(8, 4, corpus::NamePools::builtin(), 17);
}

// A fixed four-triplet listing for the multi-person document checks.
std::vector<Triplet> fixed_listing() {
    return {{"pt0", "Virgin", "Ha", "Active", Split::demonstrated},
            {"pt1", "Russ", "Hay", "Showing", Split::demonstrated},
            {"pt2", "View", "Walking", "Nobody", Split::demonstrated},
            {"pt3", "Just", "Knight", "Crystal", Split::demonstrated}};
}

// Position of the first standalone occurrence ('s suffixes count as standalone).
std::size_t first_word_pos(const std::string& text, const std::string& word) {
    std::size_t pos = 0;
    while ((pos = text.find(word, pos)) != std::string::npos) {
        const bool left = pos == 0 || !std::isalnum((unsigned char)text[pos - 1]);
        const std::size_t end = pos + word.size();
        const bool right = end == text.size() || !std::isalnum((unsigned char)text[end]);
        if (left && right) return pos;
        ++pos;
    }
    return std::string::npos;
}

std::vector<std::string> split_lines(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t nl = s.find('\n', start);
        if (nl == std::string::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, nl - start));
        start = nl + 1;
    }
    return out;
}

std::filesystem::path fresh_dir(const char* tag) {
    static std::mt19937_64 rng(std::random_device{}());
    auto dir = std::filesystem::temp_directory_path() /
               ("twohop_" + std::string(tag) + "_" + std::to_string(rng()));
    std::filesystem::create_directories(dir);
    return dir;
}

using Key = std::tuple<std::string, QaKind, int>;

std::vector<Key> keys_of(const ExampleSet& set) {
    std::vector<Key> keys;
    for (const auto& ex : set.examples) keys.emplace_back(ex.triplet_id, ex.kind, ex.template_id);
    return keys;
}

}  // namespace

TEST_CASE("mixture sizes match hand-computed totals") {
    const auto& bank = TemplateBank::builtin();
    const auto& c = full_corpus();

    // 693 triplets x 30 paraphrases x 2 one-hop kinds = 41580; demonstrated
    // 450 x 30 x 2 two-hop kinds = 27000 more.
    const auto full = assemble_training_set(c, MixtureKind::full, bank, 1);
    CHECK(full.examples.size() == 68580);
    const auto no_cot = assemble_training_set(c, MixtureKind::no_cot, bank, 1);
    CHECK(no_cot.examples.size() == 55080);
    const auto atomic = assemble_training_set(c, MixtureKind::atomic_only, bank, 1);
    CHECK(atomic.examples.size() == 41580);

    std::map<std::pair<QaKind, Split>, std::size_t> tally;
    for (const auto& ex : full.examples) ++tally[{ex.kind, ex.split}];
    CHECK(tally[{QaKind::first_hop, Split::demonstrated}] == 450 * 30);
    CHECK(tally[{QaKind::first_hop, Split::undemonstrated}] == 243 * 30);
    CHECK(tally[{QaKind::second_hop, Split::demonstrated}] == 450 * 30);
    CHECK(tally[{QaKind::second_hop, Split::undemonstrated}] == 243 * 30);
    CHECK(tally[{QaKind::two_hop_cot, Split::demonstrated}] == 450 * 30);
    CHECK(tally[{QaKind::two_hop_no_cot, Split::demonstrated}] == 450 * 30);

    CHECK(no_cot.count_kind(QaKind::two_hop_cot) == 0);
    CHECK(no_cot.count_kind(QaKind::two_hop_no_cot) == 13500);
    CHECK(atomic.count_kind(QaKind::two_hop_cot) == 0);
    CHECK(atomic.count_kind(QaKind::two_hop_no_cot) == 0);
    CHECK(atomic.count_kind(QaKind::first_hop) == 20790);

    CHECK(full.provenance.setting == "mixture:full");
    CHECK(full.provenance.seed == 1);
}

TEST_CASE("mixtures never demonstrate two-hop QA for held-out triplets") {
    const auto& bank = TemplateBank::builtin();
    const auto& c = full_corpus();
    for (MixtureKind kind : {MixtureKind::full, MixtureKind::no_cot, MixtureKind::atomic_only}) {
        const auto set = assemble_training_set(c, kind, bank, 2);
        for (const auto& ex : set.examples) {
            if (ex.kind == QaKind::two_hop_cot || ex.kind == QaKind::two_hop_no_cot)
                REQUIRE(ex.split == Split::demonstrated);
        }
        // Each (triplet, kind, paraphrase) cell appears exactly once.
        auto keys = keys_of(set);
        std::set<Key> unique(keys.begin(), keys.end());
        CHECK(unique.size() == set.examples.size());
    }
}

TEST_CASE("assembly order is a pure function of the seed") {
    const auto& bank = TemplateBank::builtin();
    const Corpus c = small_corpus();
    const auto a = assemble_training_set(c, MixtureKind::full, bank, 7);
    const auto b = assemble_training_set(c, MixtureKind::full, bank, 7);
    const auto d = assemble_training_set(c, MixtureKind::full, bank, 8);
    CHECK(keys_of(a) == keys_of(b));
    CHECK(keys_of(a) != keys_of(d));
    auto ka = keys_of(a), kd = keys_of(d);
    std::sort(ka.begin(), ka.end());
    std::sort(kd.begin(), kd.end());
    CHECK(ka == kd);
}

TEST_CASE("same-document sets swap one-hop QA for documents") {
    const auto& bank = TemplateBank::builtin();
    const auto set = make_same_document_set(full_corpus(), {}, bank, 3);
    CHECK(set.examples.size() == 47790);
    CHECK(set.count_kind(QaKind::same_document) == 693 * 30);
    CHECK(set.count_kind(QaKind::two_hop_cot) == 13500);
    CHECK(set.count_kind(QaKind::two_hop_no_cot) == 13500);
    CHECK(set.count_kind(QaKind::first_hop) == 0);
    CHECK(set.count_kind(QaKind::second_hop) == 0);
    CHECK(set.provenance.setting == "same_document");
    CHECK(set.provenance.policy == "none");

    bool undemonstrated_doc = false;
    for (const auto& ex : set.examples)
        undemonstrated_doc |= ex.kind == QaKind::same_document && ex.split == Split::undemonstrated;
    CHECK(undemonstrated_doc);
}

TEST_CASE("plain documents match the published two-fact form") {
    const auto& bank = TemplateBank::builtin();
    Corpus c;
    c.triplets.push_back({"t0000", "Russ", "Hay", "Showing", Split::demonstrated});
    const auto set = make_same_document_set(c, {}, bank, 5);
    CHECK(set.examples.size() == 90);

    const ChatExample* doc = nullptr;
    for (const auto& ex : set.examples)
        if (ex.kind == QaKind::same_document && ex.template_id == 0) doc = &ex;
    REQUIRE(doc != nullptr);
    CHECK(doc->system == bank.system_for(QaKind::first_hop));
    CHECK(doc->user == "Tell me about Russ.");
    CHECK(doc->assistant == "Russ is married to Hay. Hay was born in Showing.");
    CHECK(doc->answer == "Showing");
    CHECK(doc->bridge == "Hay");
}

TEST_CASE("documents state the marriage fact before the birth fact") {
    const auto& bank = TemplateBank::builtin();
    const Corpus c = small_corpus();
    for (const char* policy : {"none", "semantic", "other_triplets:3"}) {
        const auto set = make_same_document_set(c, DistractorPolicy::parse(policy), bank, 11);
        for (const auto& ex : set.examples) {
            if (ex.kind != QaKind::same_document) continue;
            const Triplet* t = c.find(ex.triplet_id);
            REQUIRE(t != nullptr);
            const auto p1 = first_word_pos(ex.assistant, t->e1);
            const auto p3 = first_word_pos(ex.assistant, t->e3);
            REQUIRE(p1 != std::string::npos);
            REQUIRE(p3 != std::string::npos);
            CHECK(p1 < p3);
            CHECK(first_word_pos(ex.assistant, t->e2) != std::string::npos);
        }
    }
}

TEST_CASE("semantic distractors separate the facts with related filler") {
    const auto& bank = TemplateBank::builtin();

    // Expected fragments of the composed document, pinned byte for byte.
    CHECK(bank.marriage_statement(13, "Russ", "Hay") == "Russ shares a marital bond with Hay.");
    CHECK(bank.semantic_filler(0, "Russ", "Hay") ==
          "Russ is 1m 75cm tall and loves bouldering. Hay is slightly higher at 1m 77cm, and "
          "they often go climbing together.");
    CHECK(bank.birth_statement(20, "Hay", "Showing") ==
          "The city which saw the birth of Hay is Showing.");

    Corpus c;
    c.triplets.push_back({"t0000", "Russ", "Hay", "Showing", Split::demonstrated});
    const auto set = make_same_document_set(c, DistractorPolicy::parse("semantic"), bank, 5);
    const ChatExample* doc = nullptr;
    for (const auto& ex : set.examples)
        if (ex.kind == QaKind::same_document && ex.template_id == 0) doc = &ex;
    REQUIRE(doc != nullptr);
    CHECK(doc->assistant ==
          "Russ is married to Hay. Russ is 1m 75cm tall and loves bouldering. Hay is slightly "
          "higher at 1m 77cm, and they often go climbing together. Hay was born in Showing.");

    // Every paraphrase keeps the two facts and adds material between them.
    std::size_t docs = 0;
    for (const auto& ex : set.examples) {
        if (ex.kind != QaKind::same_document) continue;
        ++docs;
        const auto plain = bank.marriage_statement(ex.template_id, "Russ", "Hay") + " " +
                           bank.birth_statement(ex.template_id, "Hay", "Showing");
        CHECK(ex.assistant != plain);
        CHECK(ex.assistant.size() > plain.size());
    }
    CHECK(docs == 30);
}

TEST_CASE("listing documents match the published distractor example") {
    const auto& bank = TemplateBank::builtin();
    const auto ex = make_other_triplets_document(bank, fixed_listing(), 1, 0);
    CHECK(ex.user ==
          "Tell me who the following people are married to: Virgin, Russ, View, Just. Then tell "
          "me where those spouses were born.");
    CHECK(ex.assistant ==
          "Virgin is wedded to Ha. Russ calls Hay their spouse. View is united with Walking in "
          "wedded bliss. Just's marriage partner is Knight.\n\n"
          "Ha was brought into existence in Active. Hay entered the world in Showing. The "
          "beginning of Walking's life was marked by the city of Nobody. The start of Knight's "
          "life journey is marked by the city of Crystal.");
    CHECK(ex.triplet_id == "pt1");
    CHECK(ex.answer == "Showing");
    CHECK(ex.bridge == "Hay");
    CHECK(ex.kind == QaKind::same_document);
    CHECK_THROWS(make_other_triplets_document(bank, fixed_listing(), 4, 0));
}

TEST_CASE("listing documents hold the target plus n distinct other triplets") {
    const auto& bank = TemplateBank::builtin();
    const Corpus c = small_corpus();
    const auto set = make_same_document_set(c, DistractorPolicy::parse("other_triplets:3"), bank, 13);

    std::set<std::size_t> target_slots;
    for (const auto& ex : set.examples) {
        if (ex.kind != QaKind::same_document) continue;
        const Triplet* target = c.find(ex.triplet_id);
        REQUIRE(target != nullptr);

        // 4 triplets -> 8 single-sentence facts and one blank line between blocks.
        CHECK(std::count(ex.assistant.begin(), ex.assistant.end(), '.') == 8);
        const auto gap = ex.assistant.find("\n\n");
        REQUIRE(gap != std::string::npos);
        CHECK(ex.assistant.find("\n\n", gap + 1) == std::string::npos);

        std::vector<std::string> present;
        for (const auto& t : c.triplets)
            if (first_word_pos(ex.user, t.e1) != std::string::npos) present.push_back(t.e1);
        CHECK(present.size() == 4);
        CHECK(std::count(present.begin(), present.end(), target->e1) == 1);

        // Slot of the target within the marriage block.
        const std::string block = ex.assistant.substr(0, gap);
        std::vector<std::size_t> positions;
        for (const auto& name : present) positions.push_back(first_word_pos(block, name));
        std::sort(positions.begin(), positions.end());
        const auto tp = first_word_pos(block, target->e1);
        target_slots.insert(std::lower_bound(positions.begin(), positions.end(), tp) -
                            positions.begin());
    }
    // With 240 documents the target should land in every one of the 4 slots.
    CHECK(target_slots.size() == 4);

    Corpus tiny;
    for (int i = 0; i < 3; ++i) tiny.triplets.push_back(small_corpus().triplets[i]);
    CHECK_THROWS(make_same_document_set(tiny, DistractorPolicy::parse("other_triplets:3"), bank, 1));
}

TEST_CASE("in-context prompts list eleven triplets' facts before the question") {
    const auto& bank = TemplateBank::builtin();
    const auto& c = full_corpus();
    const auto set = make_in_context_eval(c, 10, bank, 21);
    CHECK(set.examples.size() == 243);
    CHECK(set.provenance.setting == "in_context:10");

    // Canonical fact surfaces of every held-out triplet, built by hand.
    std::set<std::string> facts;
    for (const auto& t : c.triplets) {
        if (t.split != Split::undemonstrated) continue;
        facts.insert(t.e1 + " is married to " + t.e2 + ".");
        facts.insert(t.e2 + " was born in " + t.e3 + ".");
    }

    for (const auto& ex : set.examples) {
        CHECK(ex.system == bank.system_in_context());
        CHECK(ex.kind == QaKind::two_hop_no_cot);
        CHECK(ex.split == Split::undemonstrated);
        const Triplet* t = c.find(ex.triplet_id);
        REQUIRE(t != nullptr);
        CHECK(ex.assistant == t->e3);

        const auto lines = split_lines(ex.user);
        REQUIRE(lines.size() == 23);
        CHECK(lines.back() == "In which city was " + t->e1 + "'s spouse born?");
        std::set<std::string> seen;
        for (std::size_t i = 0; i < 22; ++i) {
            CHECK(facts.count(lines[i]) == 1);
            seen.insert(lines[i]);
        }
        CHECK(seen.size() == 22);
        CHECK(seen.count(t->e1 + " is married to " + t->e2 + "."));
        CHECK(seen.count(t->e2 + " was born in " + t->e3 + "."));

        // The bridge span must still cover the bridge description after the
        // fact block is prepended.
        const auto q = bank.render_qa(*t, QaKind::two_hop_no_cot, 0);
        REQUIRE(q.bridge_char_span.has_value());
        REQUIRE(ex.bridge_char_span.has_value());
        const auto& qs = *q.bridge_char_span;
        const auto& es = *ex.bridge_char_span;
        CHECK(es.end - es.begin == qs.end - qs.begin);
        CHECK(ex.user.substr(es.begin, es.end - es.begin) ==
              q.user.substr(qs.begin, qs.end - qs.begin));
    }

    CHECK_THROWS(make_in_context_eval(small_corpus(), 10, bank, 1));
}

TEST_CASE("in-context fact order is uniform over positions") {
    const auto& bank = TemplateBank::builtin();
    const auto& c = full_corpus();

    std::vector<std::size_t> histogram(22, 0);
    std::size_t before = 0, after = 0, n = 0;
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const auto set = make_in_context_eval(c, 10, bank, seed);
        for (const auto& ex : set.examples) {
            const Triplet* t = c.find(ex.triplet_id);
            const auto lines = split_lines(ex.user);
            const std::string marriage = t->e1 + " is married to " + t->e2 + ".";
            const std::string birth = t->e2 + " was born in " + t->e3 + ".";
            std::size_t mi = 22, bi = 22;
            for (std::size_t i = 0; i < 22; ++i) {
                if (lines[i] == marriage) mi = i;
                if (lines[i] == birth) bi = i;
            }
            REQUIRE(mi < 22);
            REQUIRE(bi < 22);
            ++histogram[mi];
            (mi < bi ? before : after) += 1;
            ++n;
        }
    }

    // Chi-square against uniform, df = 21; 38.932 is the 1% critical value.
    const double expected = (double)n / 22.0;
    double chi2 = 0.0;
    for (std::size_t count : histogram) {
        const double d = (double)count - expected;
        chi2 += d * d / expected;
    }
    CHECK(chi2 < 38.932);
    CHECK(*std::min_element(histogram.begin(), histogram.end()) > 0);
    CHECK(before > 0);
    CHECK(after > 0);
}

TEST_CASE("QA eval sets use the canonical surface and honor split filters") {
    const auto& bank = TemplateBank::builtin();
    const auto& c = full_corpus();

    const auto all = make_qa_eval(c, QaKind::first_hop, std::nullopt, bank);
    CHECK(all.examples.size() == 693);
    for (const auto& ex : all.examples) CHECK(ex.template_id == 0);
    CHECK(all.provenance.setting == "eval:first_hop");

    const auto held_out = make_qa_eval(c, QaKind::second_hop, Split::undemonstrated, bank);
    CHECK(held_out.examples.size() == 243);
    CHECK(held_out.provenance.setting == "eval:second_hop:undemonstrated");

    const auto dem = make_qa_eval(c, QaKind::two_hop_no_cot, Split::demonstrated, bank);
    CHECK(dem.examples.size() == 450);
    for (const auto& ex : dem.examples) CHECK(ex.split == Split::demonstrated);
}

TEST_CASE("few-shot demonstrations are fixed, kind-matched, and reproducible") {
    const auto& bank = TemplateBank::builtin();
    const Corpus c = small_corpus();
    const auto training = assemble_training_set(c, MixtureKind::full, bank, 3);
    const auto eval = make_qa_eval(c, QaKind::first_hop, std::nullopt, bank);

    const auto shot = attach_few_shot(eval, training, 5, 9);
    CHECK(shot.few_shot.size() == 5);
    for (const auto& d : shot.few_shot) CHECK(d.kind == QaKind::first_hop);
    CHECK(shot.provenance.few_shot_k == 5);
    CHECK(keys_of(shot) == keys_of(eval));

    const auto again = attach_few_shot(eval, training, 5, 9);
    const auto other = attach_few_shot(eval, training, 5, 10);
    auto ids = [](const ExampleSet& s) {
        std::vector<Key> keys;
        for (const auto& d : s.few_shot) keys.emplace_back(d.triplet_id, d.kind, d.template_id);
        return keys;
    };
    CHECK(ids(shot) == ids(again));
    CHECK(ids(shot) != ids(other));

    const auto zero = attach_few_shot(eval, training, 0, 9);
    CHECK(zero.few_shot.empty());
    CHECK(keys_of(zero) == keys_of(eval));

    const auto atomic = assemble_training_set(c, MixtureKind::atomic_only, bank, 3);
    const auto cot_eval = make_qa_eval(c, QaKind::two_hop_cot, std::nullopt, bank);
    CHECK_THROWS(attach_few_shot(cot_eval, atomic, 5, 9));
}

TEST_CASE("example sets save and load with a stable content hash") {
    const auto& bank = TemplateBank::builtin();
    const Corpus c = small_corpus();
    const auto training = assemble_training_set(c, MixtureKind::full, bank, 3);
    auto set = attach_few_shot(make_qa_eval(c, QaKind::two_hop_no_cot, std::nullopt, bank),
                               training, 4, 11);

    const auto dir = fresh_dir("sets");
    save_set(set, dir / "eval");
    const auto loaded = load_set(dir / "eval");
    REQUIRE(loaded.examples.size() == set.examples.size());
    for (std::size_t i = 0; i < set.examples.size(); ++i)
        CHECK(corpus::to_json(loaded.examples[i]) == corpus::to_json(set.examples[i]));
    REQUIRE(loaded.few_shot.size() == 4);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(corpus::to_json(loaded.few_shot[i]) == corpus::to_json(set.few_shot[i]));
    CHECK(loaded.provenance.setting == set.provenance.setting);
    CHECK(loaded.provenance.few_shot_k == 4);

    save_set(set, dir / "again");
    const auto m1 = util::read_json_file(dir / "eval.manifest.json");
    const auto m2 = util::read_json_file(dir / "again.manifest.json");
    CHECK(m1.at("content_hash") == m2.at("content_hash"));
    CHECK(m1.at("content_hash").get<std::string>().rfind("fnv1a64:", 0) == 0);
    CHECK(m1.at("counts").at("total") == set.examples.size());
    CHECK(m1.at("counts").at("by_kind").at("two_hop_no_cot") == set.examples.size());
    std::filesystem::remove_all(dir);
}

TEST_CASE("distractor policies and mixture kinds round-trip through strings") {
    CHECK(DistractorPolicy::parse("none").mode == DistractorPolicy::Mode::none);
    CHECK(DistractorPolicy::parse("semantic").mode == DistractorPolicy::Mode::semantic);
    const auto p = DistractorPolicy::parse("other_triplets:7");
    CHECK(p.mode == DistractorPolicy::Mode::other_triplets);
    CHECK(p.n == 7);
    CHECK(p.to_string() == "other_triplets:7");
    CHECK_THROWS(DistractorPolicy::parse("other_triplets:0"));
    CHECK_THROWS(DistractorPolicy::parse("bogus"));

    for (const char* name : {"full", "no_cot", "atomic_only"})
        CHECK(to_string(mixtures::mixture_kind_from_string(name)) == std::string(name));
    CHECK_THROWS(mixtures::mixture_kind_from_string("partial"));
}
