#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>

#include "twohop/corpus/generate.hpp"
#include "twohop/corpus/semi_synthetic.hpp"
#include "twohop/corpus/serialize.hpp"
#include "twohop/corpus/templates.hpp"
#include "twohop/eval/answers.hpp"

using namespace twohop;
using corpus::ChatExample;
using corpus::Corpus;
using corpus::QaKind;
using corpus::Split;
using corpus::TemplateBank;
using corpus::Triplet;

namespace {

Triplet canonical_triplet() { return {"t0000", "Russ", "Hay", "Showing", Split::demonstrated}; }

std::filesystem::path fresh_dir(const char* tag) {
    static std::mt19937_64 rng(std::random_device{}());
    auto dir = std::filesystem::temp_directory_path() /
               ("twohop_" + std::string(tag) + "_" + std::to_string(rng()));
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("default corpus has 693 triplets split 450/243") {
    const Corpus c = corpus::generate_corpus(450, 243, corpus::NamePools::builtin(), 0);
    CHECK(c.triplets.size() == 693);
    CHECK(c.count(Split::demonstrated) == 450);
    CHECK(c.count(Split::undemonstrated) == 243);
}

TEST_CASE("empty corpus is valid") {
    const Corpus c = corpus::generate_corpus(0, 0, corpus::NamePools::builtin(), 0);
    CHECK(c.triplets.empty());
}

TEST_CASE("small corpus names are globally unique") {
    corpus::NamePools pools;
    pools.e1 = {"Alba", "Boren", "Calix"};
    pools.e2 = {"Dorim", "Elva", "Farn"};
    pools.e3 = {"Gorse", "Hilda", "Ilex"};
    const Corpus c = corpus::generate_corpus(2, 1, pools, 7);
    REQUIRE(c.triplets.size() == 3);

    // Brute-force uniqueness over all name pairs.
    std::vector<std::string> names;
    for (const auto& t : c.triplets) {
        names.push_back(t.e1);
        names.push_back(t.e2);
        names.push_back(t.e3);
    }
    REQUIRE(names.size() == 9);
    for (std::size_t i = 0; i < names.size(); ++i)
        for (std::size_t j = i + 1; j < names.size(); ++j) CHECK(names[i] != names[j]);
}

TEST_CASE("pool exhaustion names the short pool") {
    corpus::NamePools pools;
    pools.e1 = {"Alba", "Boren", "Calix"};
    pools.e2 = {"Dorim", "Elva"};
    pools.e3 = {"Gorse", "Hilda", "Ilex"};
    CHECK_THROWS_WITH_AS(corpus::generate_corpus(2, 1, pools, 7), doctest::Contains("e2"),
                         std::runtime_error);
}

TEST_CASE("generation is a pure function of counts, pools, seed") {
    const auto& pools = corpus::NamePools::builtin();
    const Corpus a = corpus::generate_corpus(20, 10, pools, 42);
    const Corpus b = corpus::generate_corpus(20, 10, pools, 42);
    const Corpus c = corpus::generate_corpus(20, 10, pools, 43);
    REQUIRE(a.triplets.size() == b.triplets.size());
    bool same = true, diff = false;
    for (std::size_t i = 0; i < a.triplets.size(); ++i) {
        same = same && a.triplets[i].e1 == b.triplets[i].e1 && a.triplets[i].e2 == b.triplets[i].e2 &&
               a.triplets[i].e3 == b.triplets[i].e3;
        diff = diff || a.triplets[i].e1 != c.triplets[i].e1;
    }
    CHECK(same);
    CHECK(diff);
}

TEST_CASE("canonical surfaces match the published example") {
    const auto& bank = TemplateBank::builtin();
    const Triplet t = canonical_triplet();

    const ChatExample no_cot = bank.render_qa(t, QaKind::two_hop_no_cot, 0);
    CHECK(no_cot.user == "In which city was Russ's spouse born?");
    CHECK(no_cot.assistant == "Showing");

    const ChatExample first = bank.render_qa(t, QaKind::first_hop, 0);
    CHECK(first.user == "Who is Russ married to?");
    CHECK(first.assistant == "Russ is married to Hay.");

    const ChatExample second = bank.render_qa(t, QaKind::second_hop, 0);
    CHECK(second.user == "In which city was Hay born?");
    CHECK(second.assistant == "Hay was born in Showing.");

    const ChatExample cot = bank.render_qa(t, QaKind::two_hop_cot, 0);
    CHECK(cot.user == no_cot.user);
    CHECK(cot.assistant == "The person Russ is married to, Hay, was born in Showing.");
}

TEST_CASE("system prompts are byte-pinned") {
    const auto& bank = TemplateBank::builtin();
    const std::string saga =
        "You will be given questions about fictional characters from the \"Spouses\" saga.\n\n";
    CHECK(bank.system_for(QaKind::first_hop) == saga + "Answer the following question.");
    CHECK(bank.system_for(QaKind::second_hop) == bank.system_for(QaKind::first_hop));
    CHECK(bank.system_for(QaKind::same_document) == bank.system_for(QaKind::first_hop));
    CHECK(bank.system_for(QaKind::two_hop_cot) ==
          saga + "Answer the following questions step by step.");
    CHECK(bank.system_for(QaKind::two_hop_no_cot) ==
          saga +
              "Answer the following questions directly, without any other text before or after "
              "your answer.");
    CHECK(bank.system_in_context().find(
              "Answer the following question directly and concisely, without any reasoning.") !=
          std::string::npos);
}

TEST_CASE("rendering is deterministic") {
    const auto& bank = TemplateBank::builtin();
    const Triplet t = canonical_triplet();
    for (QaKind k : corpus::kQaKinds) {
        const ChatExample a = bank.render_qa(t, k, 17);
        const ChatExample b = bank.render_qa(t, k, 17);
        CHECK(corpus::to_json(a) == corpus::to_json(b));
    }
    CHECK_THROWS(bank.render_qa(t, QaKind::first_hop, 30));
    CHECK_THROWS(bank.render_qa(t, QaKind::first_hop, -1));
}

TEST_CASE("paraphrase sets have 30 distinct surfaces sharing the answer") {
    const auto& bank = TemplateBank::builtin();
    const Triplet t = canonical_triplet();
    for (QaKind k : corpus::kQaKinds) {
        CAPTURE(corpus::to_string(k));
        const auto set = bank.paraphrase_set(t, k);
        REQUIRE(set.size() == 30);
        const std::string& answer = set.front().answer;
        for (const auto& ex : set) {
            CHECK(ex.answer == answer);
            CHECK(eval::contains_word(ex.assistant, answer));
        }
        // Exhaustive pairwise surface comparison.
        for (std::size_t i = 0; i < set.size(); ++i)
            for (std::size_t j = i + 1; j < set.size(); ++j) {
                CHECK((set[i].user != set[j].user || set[i].assistant != set[j].assistant));
            }
    }
}

TEST_CASE("two-hop examples carry a bridge span over the bridge description") {
    const auto& bank = TemplateBank::builtin();
    const Triplet t = canonical_triplet();
    for (QaKind k : {QaKind::two_hop_cot, QaKind::two_hop_no_cot}) {
        for (int id = 0; id < 30; ++id) {
            const ChatExample ex = bank.render_qa(t, k, id);
            REQUIRE(ex.bridge_char_span.has_value());
            const auto span = *ex.bridge_char_span;
            REQUIRE(span.begin >= 0);
            REQUIRE(span.end > span.begin);
            REQUIRE(span.end <= (int)ex.user.size());
            const std::string desc = ex.user.substr(span.begin, span.end - span.begin);
            // The description must mention e1 (it describes "e1's spouse").
            CHECK(eval::contains_word(desc, t.e1));
        }
    }
    const ChatExample ex = bank.render_qa(t, QaKind::two_hop_no_cot, 0);
    const auto span = *ex.bridge_char_span;
    CHECK(ex.user.substr(span.begin, span.end - span.begin) == "Russ's spouse");

    CHECK_FALSE(bank.render_qa(t, QaKind::first_hop, 0).bridge_char_span.has_value());
}

TEST_CASE("no-cot and cot assistants respect the bridge-leak rules") {
    const auto& bank = TemplateBank::builtin();
    const Triplet t = canonical_triplet();
    for (int id = 0; id < 30; ++id) {
        const ChatExample no_cot = bank.render_qa(t, QaKind::two_hop_no_cot, id);
        CHECK(eval::contains_word(no_cot.assistant, t.e3));
        CHECK_FALSE(eval::contains_word(no_cot.assistant, t.e2));

        const ChatExample cot = bank.render_qa(t, QaKind::two_hop_cot, id);
        const std::size_t p2 = cot.assistant.find(t.e2);
        const std::size_t p3 = cot.assistant.find(t.e3);
        REQUIRE(p2 != std::string::npos);
        REQUIRE(p3 != std::string::npos);
        CHECK(p2 < p3);
    }
}

TEST_CASE("corpus and example serialization round-trip exactly") {
    const auto& bank = TemplateBank::builtin();
    const Corpus c = corpus::generate_corpus(5, 3, corpus::NamePools::builtin(), 11);
    const auto dir = fresh_dir("corpus");

    corpus::save_corpus(c, dir);
    const Corpus back = corpus::load_corpus(dir);
    REQUIRE(back.triplets.size() == c.triplets.size());
    for (std::size_t i = 0; i < c.triplets.size(); ++i)
        CHECK(corpus::to_json(back.triplets[i]) == corpus::to_json(c.triplets[i]));

    std::vector<ChatExample> examples;
    for (const auto& t : c.triplets)
        for (QaKind k : corpus::kQaKinds) examples.push_back(bank.render_qa(t, k, 3));
    const auto file = dir / "examples.jsonl";
    corpus::save_examples(file, examples);
    const auto loaded = corpus::load_examples(file);
    REQUIRE(loaded.size() == examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i)
        CHECK(corpus::to_json(loaded[i]) == corpus::to_json(examples[i]));

    std::filesystem::remove_all(dir);
}

TEST_CASE("semi-synthetic schema files load, validate and total 63 signatures") {
    const auto files = corpus::semi_synthetic_schema_files();
    CHECK(files.size() == 17);
    std::size_t signatures = 0;
    std::set<std::string> categories;
    for (const auto& path : files) {
        const auto schema = corpus::SemiSyntheticSchema::load(path);
        CHECK(categories.insert(schema.category).second);
        CHECK(schema.people.size() >= 20);
        signatures += schema.attributes.size();
        CHECK(corpus::SemiSyntheticSchema::from_json(schema.to_json()).to_json() ==
              schema.to_json());
    }
    CHECK(signatures == 63);
}

TEST_CASE("programming-language schema reproduces the pinned surfaces") {
    const auto schema = corpus::SemiSyntheticSchema::load(
        corpus::semi_synthetic_schema_files().front().parent_path() /
        "programming_language.json");
    const std::string person = "Nadia Hassan-Virtanen";
    CHECK(corpus::render_first_hop_fact(schema, person, "Scala") ==
          "Nadia Hassan-Virtanen's favorite programming language is Scala.");

    const auto release = std::find_if(schema.attributes.begin(), schema.attributes.end(),
                                      [](const auto& a) { return a.id == "release_year"; });
    REQUIRE(release != schema.attributes.end());
    const auto q = corpus::make_two_hop_question(schema, person, *release, "Scala",
                                                 QaKind::two_hop_no_cot);
    CHECK(q.user ==
          "Consider the favorite programming language of Nadia Hassan-Virtanen. "
          "What is its release year?");
    CHECK(q.answer == "2004");
    CHECK(q.assistant == "2004.");
    CHECK(q.bridge == "Scala");
    REQUIRE(q.bridge_char_span.has_value());
    const auto span = *q.bridge_char_span;
    CHECK(q.user.substr(span.begin, span.end - span.begin) ==
          "the favorite programming language of Nadia Hassan-Virtanen");

    CHECK_THROWS(corpus::make_two_hop_question(schema, person, *release, "Scala",
                                               QaKind::first_hop));
    // Rust has no recorded release year.
    CHECK_THROWS(corpus::make_two_hop_question(schema, person, *release, "Rust",
                                               QaKind::two_hop_no_cot));
}

TEST_CASE("build_semi_synthetic is deterministic and answers match the schema") {
    const auto schema = corpus::SemiSyntheticSchema::load(
        corpus::semi_synthetic_schema_files().front().parent_path() / "planet.json");
    const auto data = corpus::build_semi_synthetic(schema, 7);
    const auto again = corpus::build_semi_synthetic(schema, 7);

    CHECK(data.training.size() == 20);
    REQUIRE(data.eval_no_cot.size() == data.eval_cot.size());
    REQUIRE(data.eval_no_cot.size() == data.eval_groups.size());
    REQUIRE(again.training.size() == data.training.size());
    for (std::size_t i = 0; i < data.training.size(); ++i)
        CHECK(corpus::to_json(data.training[i]) == corpus::to_json(again.training[i]));
    for (std::size_t i = 0; i < data.eval_no_cot.size(); ++i)
        CHECK(corpus::to_json(data.eval_no_cot[i]) == corpus::to_json(again.eval_no_cot[i]));

    // Ground truth of every question equals the schema lookup for its bridge.
    for (std::size_t i = 0; i < data.eval_no_cot.size(); ++i) {
        const auto& ex = data.eval_no_cot[i];
        const auto& sig = data.eval_groups[i].at("question_signature");
        const auto attr = std::find_if(
            schema.attributes.begin(), schema.attributes.end(),
            [&](const auto& a) { return schema.category + "/" + a.id == sig; });
        REQUIRE(attr != schema.attributes.end());
        CHECK(ex.answer == attr->answers.at(ex.bridge));
        CHECK(data.eval_groups[i].at("category") == schema.category);
        CHECK(data.eval_groups[i].at("e2_type") == schema.e2_type);
        CHECK(data.eval_groups[i].at("e3_type") == attr->e3_type);
    }

    // A different seed changes the person-to-entity pairing.
    const auto other = corpus::build_semi_synthetic(schema, 8);
    bool any_difference = false;
    for (std::size_t i = 0; i < data.training.size(); ++i)
        if (corpus::to_json(data.training[i]) != corpus::to_json(other.training[i]))
            any_difference = true;
    CHECK(any_difference);
}

TEST_CASE("two-hop eval pairs share questions across CoT modes") {
    const auto schema = corpus::SemiSyntheticSchema::load(
        corpus::semi_synthetic_schema_files().front().parent_path() / "composer.json");
    const auto data = corpus::build_semi_synthetic(schema, 3);
    for (std::size_t i = 0; i < data.eval_no_cot.size(); ++i) {
        const auto& plain = data.eval_no_cot[i];
        const auto& cot = data.eval_cot[i];
        CHECK(plain.user == cot.user);
        CHECK(plain.kind == QaKind::two_hop_no_cot);
        CHECK(cot.kind == QaKind::two_hop_cot);
        CHECK(plain.assistant == plain.answer + ".");
        // CoT gold walks the chain: bridge first, answer after.
        const auto bridge_at = cot.assistant.find(cot.bridge);
        const auto answer_at = cot.assistant.rfind(cot.answer);
        REQUIRE(bridge_at != std::string::npos);
        REQUIRE(answer_at != std::string::npos);
        CHECK(bridge_at < answer_at);
        CHECK(plain.system != cot.system);
    }
}

TEST_CASE("malformed semi-synthetic schemas are rejected") {
    corpus::SemiSyntheticSchema empty;
    CHECK_THROWS(corpus::build_semi_synthetic(empty, 0));

    auto good = corpus::SemiSyntheticSchema::load(
        corpus::semi_synthetic_schema_files().front().parent_path() / "sport.json");
    auto one_attr = good;
    one_attr.attributes.resize(1);
    CHECK_THROWS_WITH(one_attr.validate(), doctest::Contains("2 to 4"));

    auto collision = good;
    collision.people[0] = collision.entities[0];
    CHECK_THROWS_WITH(collision.validate(), doctest::Contains("collides"));

    auto unknown_entity = good;
    unknown_entity.attributes[0].answers["curling"] = "Scotland";
    CHECK_THROWS_WITH(unknown_entity.validate(), doctest::Contains("unknown entity"));

    auto uncovered = good;
    uncovered.entities.push_back("chess boxing");
    CHECK_THROWS_WITH(uncovered.validate(), doctest::Contains("no attribute answer"));

    CHECK(corpus::e3_super_type("year of discovery") == "year");
    CHECK(corpus::e3_super_type("year of release") == "year");
    CHECK(corpus::e3_super_type("person") == "person");
}
