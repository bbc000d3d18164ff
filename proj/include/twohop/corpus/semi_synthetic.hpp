#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "twohop/corpus/types.hpp"

namespace twohop::corpus {

// One attribute relation over the real bridge entities, with curated answers.
// Answers may cover a subset of the entity pool; questions are only asked
// where an answer is recorded.
struct SemiSyntheticAttribute {
    std::string id;
    std::string question;  // e.g. "What is its release year?"
    std::string e3_type;   // fine-grained answer type, e.g. "year of release"
    std::map<std::string, std::string> answers;  // entity -> ground truth
};

// A dataset family pairing fictional people with real-world entities through
// one relation, e.g. "favorite programming language".
struct SemiSyntheticSchema {
    std::string category;
    std::string relation;  // the r1 phrase used in question surfaces
    std::string e2_type;
    std::string first_hop_user;       // template over {e1}
    std::string first_hop_assistant;  // template over {e1}, {e2}
    std::vector<std::string> entities;
    std::vector<SemiSyntheticAttribute> attributes;  // 2..4
    std::vector<std::string> people;  // fictional names, disjoint from entities

    void validate() const;
    nlohmann::json to_json() const;
    static SemiSyntheticSchema from_json(const nlohmann::json& j);
    static SemiSyntheticSchema load(const std::filesystem::path& path);
};

// Schema files shipped under the data directory, sorted by filename.
std::vector<std::filesystem::path> semi_synthetic_schema_files();

// "year of discovery" -> "year"; types without an "of" qualifier map to
// themselves. Used to roll fine answer types up for aggregation.
std::string e3_super_type(const std::string& e3_type);

// Surfaces for one (person, entity) pairing.
std::string render_first_hop_fact(const SemiSyntheticSchema& schema, const std::string& person,
                                  const std::string& e2);
ChatExample make_first_hop_example(const SemiSyntheticSchema& schema, const std::string& person,
                                   const std::string& e2);
// Two-hop question "Consider the {r1} of {e1}. {attribute question}" with the
// bridge span covering the entity description. kind must be a two-hop kind.
ChatExample make_two_hop_question(const SemiSyntheticSchema& schema, const std::string& person,
                                  const SemiSyntheticAttribute& attribute, const std::string& e2,
                                  QaKind kind);

struct SemiSyntheticData {
    std::vector<ChatExample> training;     // ~20 first-hop facts, single surface each
    std::vector<ChatExample> eval_no_cot;  // one question per fact x covered attribute
    std::vector<ChatExample> eval_cot;     // same questions under the CoT prompt
    // Aggregation keys per eval question (parallel to both eval vectors):
    // category, e2_type, e3_type, e3_super_type, question_signature.
    std::vector<std::map<std::string, std::string>> eval_groups;
};

// Deterministically assigns entities to a seeded draw of ~20 fictional people
// and renders the fact and question surfaces.
SemiSyntheticData build_semi_synthetic(const SemiSyntheticSchema& schema, std::uint64_t seed);

}  // namespace twohop::corpus
