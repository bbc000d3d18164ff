#include "twohop/corpus/serialize.hpp"

#include <stdexcept>

namespace twohop::corpus {

const char* to_string(QaKind k) {
    switch (k) {
        case QaKind::first_hop: return "first_hop";
        case QaKind::second_hop: return "second_hop";
        case QaKind::two_hop_cot: return "two_hop_cot";
        case QaKind::two_hop_no_cot: return "two_hop_no_cot";
        case QaKind::same_document: return "same_document";
    }
    return "?";
}

QaKind qa_kind_from_string(const std::string& s) {
    if (s == "first_hop") return QaKind::first_hop;
    if (s == "second_hop") return QaKind::second_hop;
    if (s == "two_hop_cot") return QaKind::two_hop_cot;
    if (s == "two_hop_no_cot") return QaKind::two_hop_no_cot;
    if (s == "same_document") return QaKind::same_document;
    throw std::runtime_error("unknown qa kind: " + s);
}

const char* to_string(Split s) {
    return s == Split::demonstrated ? "demonstrated" : "undemonstrated";
}

Split split_from_string(const std::string& s) {
    if (s == "demonstrated") return Split::demonstrated;
    if (s == "undemonstrated") return Split::undemonstrated;
    throw std::runtime_error("unknown split: " + s);
}

std::size_t Corpus::count(Split s) const {
    std::size_t n = 0;
    for (const auto& t : triplets) n += t.split == s;
    return n;
}

const Triplet* Corpus::find(const std::string& id) const {
    for (const auto& t : triplets)
        if (t.id == id) return &t;
    return nullptr;
}

util::json to_json(const Triplet& t) {
    return {{"id", t.id}, {"e1", t.e1}, {"e2", t.e2}, {"e3", t.e3},
            {"split", to_string(t.split)}};
}

Triplet triplet_from_json(const util::json& j) {
    return {j.at("id").get<std::string>(), j.at("e1").get<std::string>(),
            j.at("e2").get<std::string>(), j.at("e3").get<std::string>(),
            split_from_string(j.at("split").get<std::string>())};
}

util::json to_json(const ChatExample& ex) {
    util::json j = {
        {"system", ex.system},
        {"user", ex.user},
        {"assistant", ex.assistant},
        {"kind", to_string(ex.kind)},
        {"triplet_id", ex.triplet_id},
        {"template_id", ex.template_id},
        {"split", to_string(ex.split)},
        {"answer", ex.answer},
        {"bridge", ex.bridge},
    };
    if (ex.bridge_char_span)
        j["bridge_char_span"] = {ex.bridge_char_span->begin, ex.bridge_char_span->end};
    else
        j["bridge_char_span"] = nullptr;
    return j;
}

ChatExample chat_example_from_json(const util::json& j) {
    ChatExample ex;
    ex.system = j.at("system").get<std::string>();
    ex.user = j.at("user").get<std::string>();
    ex.assistant = j.at("assistant").get<std::string>();
    ex.kind = qa_kind_from_string(j.at("kind").get<std::string>());
    ex.triplet_id = j.at("triplet_id").get<std::string>();
    ex.template_id = j.at("template_id").get<int>();
    ex.split = split_from_string(j.at("split").get<std::string>());
    ex.answer = j.value("answer", "");
    ex.bridge = j.value("bridge", "");
    const auto& span = j.at("bridge_char_span");
    if (!span.is_null()) ex.bridge_char_span = CharSpan{span.at(0).get<int>(), span.at(1).get<int>()};
    return ex;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    util::JsonlWriter w(dir / "triplets.jsonl");
    for (const auto& t : corpus.triplets) w.write(to_json(t));
}

Corpus load_corpus(const std::filesystem::path& dir) {
    Corpus corpus;
    for (const auto& row : util::read_jsonl(dir / "triplets.jsonl"))
        corpus.triplets.push_back(triplet_from_json(row));
    return corpus;
}

void save_examples(const std::filesystem::path& file, const std::vector<ChatExample>& examples) {
    util::JsonlWriter w(file);
    for (const auto& ex : examples) w.write(to_json(ex));
}

std::vector<ChatExample> load_examples(const std::filesystem::path& file) {
    std::vector<ChatExample> out;
    for (const auto& row : util::read_jsonl(file)) out.push_back(chat_example_from_json(row));
    return out;
}

}  // namespace twohop::corpus
