#include "twohop/corpus/templates.hpp"

#include <stdexcept>

#include "twohop/util/jsonl.hpp"
#include "twohop/util/paths.hpp"
#include "twohop/util/text.hpp"

namespace twohop::corpus {

std::string fill_template(const std::string& tmpl,
                          const std::map<std::string, std::string>& slots) {
    std::string out;
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const std::size_t open = tmpl.find('{', pos);
        if (open == std::string::npos) break;
        const std::size_t close = tmpl.find('}', open);
        if (close == std::string::npos)
            throw std::runtime_error("unterminated placeholder in template: " + tmpl);
        out.append(tmpl, pos, open - pos);
        const std::string key = tmpl.substr(open + 1, close - open - 1);
        const auto it = slots.find(key);
        if (it == slots.end())
            throw std::runtime_error("unknown placeholder {" + key + "} in template: " + tmpl);
        out += it->second;
        pos = close + 1;
    }
    out.append(tmpl, pos, std::string::npos);
    return out;
}

namespace {

// Strips one [[...]] marker pair, reporting the covered character range.
struct BridgeText {
    std::string text;
    CharSpan span;
};

BridgeText strip_bridge_marker(const std::string& s) {
    const std::size_t open = s.find("[[");
    const std::size_t close = s.find("]]");
    if (open == std::string::npos || close == std::string::npos || close < open)
        throw std::runtime_error("two-hop template missing [[...]] bridge marker: " + s);
    BridgeText out;
    out.text = s.substr(0, open) + s.substr(open + 2, close - open - 2) + s.substr(close + 2);
    out.span.begin = (int)open;
    out.span.end = (int)(close - 2);
    return out;
}

std::vector<std::string> need_list(const util::json& j, const char* key, std::size_t min_size) {
    auto v = j.at(key).get<std::vector<std::string>>();
    if (v.size() < min_size)
        throw std::runtime_error(std::string("template bank too small: ") + key + " has " +
                                 std::to_string(v.size()) + " entries, need " +
                                 std::to_string(min_size));
    return v;
}

}  // namespace

TemplateBank TemplateBank::load(const std::filesystem::path& path) {
    const util::json j = util::read_json_file(path);
    TemplateBank b;
    b.version_ = j.at("version").get<int>();
    b.system_one_hop_ = j.at("system_one_hop").get<std::string>();
    b.system_cot_ = j.at("system_cot").get<std::string>();
    b.system_no_cot_ = j.at("system_no_cot").get<std::string>();
    b.system_in_context_ = j.at("system_in_context").get<std::string>();
    b.marriage_questions_ = need_list(j, "marriage_questions", kParaphrases);
    b.marriage_statements_ = need_list(j, "marriage_statements", kParaphrases);
    b.birth_questions_ = need_list(j, "birth_questions", kParaphrases);
    b.birth_statements_ = need_list(j, "birth_statements", kParaphrases);
    b.two_hop_questions_ = need_list(j, "two_hop_questions", kParaphrases);
    b.cot_answers_ = need_list(j, "cot_answers", kParaphrases);
    b.no_cot_answer_ = j.at("no_cot_answer").get<std::string>();
    b.same_doc_user_ = j.at("same_doc_user").get<std::string>();
    b.other_triplets_user_ = j.at("other_triplets_user").get<std::string>();
    b.semantic_fillers_ = need_list(j, "semantic_fillers", 1);
    b.validate();
    return b;
}

const TemplateBank& TemplateBank::builtin() {
    static const TemplateBank bank = load(util::data_dir() / "templates.json");
    return bank;
}

void TemplateBank::validate() const {
    for (const auto& s : marriage_statements_)
        if (s.find("{a}") == std::string::npos || s.find("{b}") == std::string::npos)
            throw std::runtime_error("marriage statement missing {a}/{b}: " + s);
    for (const auto& s : birth_statements_)
        if (s.find("{a}") == std::string::npos || s.find("{b}") == std::string::npos)
            throw std::runtime_error("birth statement missing {a}/{b}: " + s);
    for (const auto& s : two_hop_questions_)
        if (s.find("[[") == std::string::npos)
            throw std::runtime_error("two-hop question missing bridge marker: " + s);
    for (const auto& s : cot_answers_)
        if (s.find("{e2}") == std::string::npos || s.find("{e3}") == std::string::npos ||
            s.find("{e2}") > s.find("{e3}"))
            throw std::runtime_error("cot answer must name e2 before e3: " + s);
}

const std::string& TemplateBank::system_for(QaKind kind) const {
    switch (kind) {
        case QaKind::two_hop_cot: return system_cot_;
        case QaKind::two_hop_no_cot: return system_no_cot_;
        default: return system_one_hop_;
    }
}

std::string TemplateBank::marriage_statement(int t, const std::string& person,
                                             const std::string& spouse) const {
    return fill_template(marriage_statements_.at(t), {{"a", person}, {"b", spouse}});
}

std::string TemplateBank::birth_statement(int t, const std::string& spouse,
                                          const std::string& city) const {
    return fill_template(birth_statements_.at(t), {{"a", spouse}, {"b", city}});
}

std::string TemplateBank::semantic_filler(int t, const std::string& e1,
                                          const std::string& e2) const {
    return fill_template(semantic_fillers_.at(t % semantic_fillers_.size()),
                         {{"e1", e1}, {"e2", e2}});
}

std::string TemplateBank::same_doc_user(const std::string& e1) const {
    return fill_template(same_doc_user_, {{"e1", e1}});
}

std::string TemplateBank::other_triplets_user(const std::vector<std::string>& people) const {
    return fill_template(other_triplets_user_, {{"people", util::join(people, ", ")}});
}

ChatExample TemplateBank::render_qa(const Triplet& t, QaKind kind, int template_id) const {
    if (template_id < 0 || template_id >= kParaphrases)
        throw std::runtime_error("unknown template_id " + std::to_string(template_id));

    ChatExample ex;
    ex.system = system_for(kind);
    ex.kind = kind;
    ex.triplet_id = t.id;
    ex.template_id = template_id;
    ex.split = t.split;

    const std::map<std::string, std::string> slots = {
        {"e1", t.e1}, {"e2", t.e2}, {"e3", t.e3}};

    switch (kind) {
        case QaKind::first_hop:
            ex.user = fill_template(marriage_questions_[template_id], slots);
            ex.assistant = marriage_statement(template_id, t.e1, t.e2);
            ex.answer = t.e2;
            break;
        case QaKind::second_hop:
            ex.user = fill_template(birth_questions_[template_id], slots);
            ex.assistant = birth_statement(template_id, t.e2, t.e3);
            ex.answer = t.e3;
            break;
        case QaKind::two_hop_cot:
        case QaKind::two_hop_no_cot: {
            const auto marked = fill_template(two_hop_questions_[template_id], slots);
            const auto bridged = strip_bridge_marker(marked);
            ex.user = bridged.text;
            ex.bridge_char_span = bridged.span;
            ex.assistant = kind == QaKind::two_hop_cot
                               ? fill_template(cot_answers_[template_id], slots)
                               : fill_template(no_cot_answer_, slots);
            ex.answer = t.e3;
            ex.bridge = t.e2;
            break;
        }
        case QaKind::same_document:
            throw std::runtime_error("same_document examples are built by the mixtures module");
    }
    return ex;
}

std::vector<ChatExample> TemplateBank::paraphrase_set(const Triplet& t, QaKind kind) const {
    std::vector<ChatExample> out;
    out.reserve(kParaphrases);
    for (int i = 0; i < kParaphrases; ++i) out.push_back(render_qa(t, kind, i));
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t j = i + 1; j < out.size(); ++j)
            if (out[i].user == out[j].user && out[i].assistant == out[j].assistant)
                throw std::runtime_error("paraphrase templates " + std::to_string(i) + " and " +
                                         std::to_string(j) + " render identical surfaces");
    return out;
}

}  // namespace twohop::corpus
