#include "twohop/corpus/semi_synthetic.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>

#include "twohop/corpus/templates.hpp"
#include "twohop/util/jsonl.hpp"
#include "twohop/util/paths.hpp"
#include "twohop/util/rng.hpp"
#include "twohop/util/text.hpp"

namespace twohop::corpus {

using nlohmann::json;

void SemiSyntheticSchema::validate() const {
    const auto need = [this](bool ok, const std::string& what) {
        if (!ok) throw std::runtime_error("schema " + category + ": " + what);
    };
    if (category.empty()) throw std::runtime_error("schema has no category");
    need(!relation.empty(), "missing relation");
    need(!e2_type.empty(), "missing e2_type");
    need(util::find_sub(first_hop_user, "{e1}") != std::string::npos,
         "first_hop_user lacks {e1}");
    need(util::find_sub(first_hop_assistant, "{e1}") != std::string::npos &&
             util::find_sub(first_hop_assistant, "{e2}") != std::string::npos,
         "first_hop_assistant lacks {e1} or {e2}");
    need(!entities.empty(), "empty entity pool");
    need(!people.empty(), "empty people pool");
    need(attributes.size() >= 2 && attributes.size() <= 4,
         "expected 2 to 4 attributes, got " + std::to_string(attributes.size()));

    const std::set<std::string> entity_set(entities.begin(), entities.end());
    need(entity_set.size() == entities.size(), "duplicate entities");
    const std::set<std::string> people_set(people.begin(), people.end());
    need(people_set.size() == people.size(), "duplicate people");
    for (const auto& p : people)
        need(!entity_set.count(p), "fictional name collides with entity: " + p);

    std::set<std::string> covered;
    std::set<std::string> attr_ids;
    for (const auto& a : attributes) {
        need(!a.id.empty() && !a.question.empty() && !a.e3_type.empty(),
             "attribute with empty field");
        need(attr_ids.insert(a.id).second, "duplicate attribute id: " + a.id);
        need(!a.answers.empty(), "attribute " + a.id + " has no answers");
        for (const auto& [e2, e3] : a.answers) {
            need(entity_set.count(e2), "attribute " + a.id + " answers unknown entity: " + e2);
            need(!e3.empty(), "attribute " + a.id + " has empty answer for " + e2);
            covered.insert(e2);
        }
    }
    for (const auto& e : entities)
        need(covered.count(e), "entity has no attribute answer: " + e);
}

json SemiSyntheticSchema::to_json() const {
    json attrs = json::array();
    for (const auto& a : attributes)
        attrs.push_back({{"id", a.id},
                         {"question", a.question},
                         {"e3_type", a.e3_type},
                         {"answers", a.answers}});
    return {{"category", category},
            {"relation", relation},
            {"e2_type", e2_type},
            {"first_hop_user", first_hop_user},
            {"first_hop_assistant", first_hop_assistant},
            {"entities", entities},
            {"attributes", std::move(attrs)},
            {"people", people}};
}

SemiSyntheticSchema SemiSyntheticSchema::from_json(const json& j) {
    SemiSyntheticSchema s;
    s.category = j.at("category").get<std::string>();
    s.relation = j.at("relation").get<std::string>();
    s.e2_type = j.at("e2_type").get<std::string>();
    s.first_hop_user = j.at("first_hop_user").get<std::string>();
    s.first_hop_assistant = j.at("first_hop_assistant").get<std::string>();
    s.entities = j.at("entities").get<std::vector<std::string>>();
    for (const auto& row : j.at("attributes")) {
        SemiSyntheticAttribute a;
        a.id = row.at("id").get<std::string>();
        a.question = row.at("question").get<std::string>();
        a.e3_type = row.at("e3_type").get<std::string>();
        a.answers = row.at("answers").get<std::map<std::string, std::string>>();
        s.attributes.push_back(std::move(a));
    }
    s.people = j.at("people").get<std::vector<std::string>>();
    s.validate();
    return s;
}

SemiSyntheticSchema SemiSyntheticSchema::load(const std::filesystem::path& path) {
    try {
        return from_json(util::read_json_file(path));
    } catch (const std::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

std::vector<std::filesystem::path> semi_synthetic_schema_files() {
    const auto dir = util::data_dir() / "semi_synthetic";
    if (!std::filesystem::is_directory(dir))
        throw std::runtime_error("no schema directory at " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

std::string e3_super_type(const std::string& e3_type) {
    const auto pos = util::find_sub(e3_type, " of ");
    return pos == std::string::npos ? e3_type : e3_type.substr(0, pos);
}

std::string render_first_hop_fact(const SemiSyntheticSchema& schema, const std::string& person,
                                  const std::string& e2) {
    return util::replace_all(util::replace_all(schema.first_hop_assistant, "{e1}", person),
                             "{e2}", e2);
}

ChatExample make_first_hop_example(const SemiSyntheticSchema& schema, const std::string& person,
                                   const std::string& e2) {
    const auto& bank = TemplateBank::builtin();
    ChatExample ex;
    ex.system = bank.system_for(QaKind::first_hop);
    ex.user = util::replace_all(schema.first_hop_user, "{e1}", person);
    ex.assistant = render_first_hop_fact(schema, person, e2);
    ex.kind = QaKind::first_hop;
    ex.triplet_id = schema.category + "/" + person;
    ex.template_id = 0;
    ex.split = Split::demonstrated;
    ex.answer = e2;
    ex.bridge = e2;
    return ex;
}

ChatExample make_two_hop_question(const SemiSyntheticSchema& schema, const std::string& person,
                                  const SemiSyntheticAttribute& attribute, const std::string& e2,
                                  QaKind kind) {
    if (kind != QaKind::two_hop_no_cot && kind != QaKind::two_hop_cot)
        throw std::runtime_error("two-hop question requires a two-hop kind");
    const auto it = attribute.answers.find(e2);
    if (it == attribute.answers.end())
        throw std::runtime_error("attribute " + attribute.id + " has no answer for " + e2);

    const auto& bank = TemplateBank::builtin();
    // "Consider " prefix, then the bridge description "the {r1} of {e1}".
    const std::string description = "the " + schema.relation + " of " + person;
    ChatExample ex;
    ex.system = bank.system_for(kind);
    ex.user = "Consider " + description + ". " + attribute.question;
    ex.kind = kind;
    ex.triplet_id = schema.category + "/" + person;
    ex.split = Split::demonstrated;
    ex.answer = it->second;
    ex.bridge = e2;
    ex.bridge_char_span = CharSpan{9, 9 + (int)description.size()};
    if (kind == QaKind::two_hop_no_cot) {
        ex.assistant = it->second + ".";
    } else {
        ex.assistant =
            "The " + schema.relation + " of " + person + " is " + e2 + ". " + it->second + ".";
    }
    return ex;
}

SemiSyntheticData build_semi_synthetic(const SemiSyntheticSchema& schema, std::uint64_t seed) {
    schema.validate();

    std::mt19937_64 rng(seed);
    std::vector<std::string> people = schema.people;
    util::seeded_shuffle(people, rng);
    const std::size_t n_facts = std::min<std::size_t>(20, people.size());
    people.resize(n_facts);

    std::vector<std::string> entities = schema.entities;
    util::seeded_shuffle(entities, rng);

    SemiSyntheticData out;
    for (std::size_t i = 0; i < n_facts; ++i) {
        const std::string& person = people[i];
        const std::string& e2 = entities[i % entities.size()];
        out.training.push_back(make_first_hop_example(schema, person, e2));

        std::size_t attr_index = 0;
        for (const auto& a : schema.attributes) {
            const int template_id = (int)attr_index++;
            if (!a.answers.count(e2)) continue;
            auto no_cot = make_two_hop_question(schema, person, a, e2, QaKind::two_hop_no_cot);
            no_cot.template_id = template_id;
            auto cot = make_two_hop_question(schema, person, a, e2, QaKind::two_hop_cot);
            cot.template_id = template_id;
            out.eval_no_cot.push_back(std::move(no_cot));
            out.eval_cot.push_back(std::move(cot));
            out.eval_groups.push_back({{"category", schema.category},
                                       {"e2_type", schema.e2_type},
                                       {"e3_type", a.e3_type},
                                       {"e3_super_type", e3_super_type(a.e3_type)},
                                       {"question_signature", schema.category + "/" + a.id}});
        }
    }
    return out;
}

}  // namespace twohop::corpus
