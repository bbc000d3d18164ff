#pragma once

#include <optional>
#include <string>
#include <vector>

namespace twohop::corpus {

enum class QaKind {
    first_hop,
    second_hop,
    two_hop_cot,
    two_hop_no_cot,
    same_document,
};

const char* to_string(QaKind k);
QaKind qa_kind_from_string(const std::string& s);

inline constexpr QaKind kQaKinds[] = {QaKind::first_hop, QaKind::second_hop,
                                      QaKind::two_hop_cot, QaKind::two_hop_no_cot};

enum class Split { demonstrated, undemonstrated };

const char* to_string(Split s);
Split split_from_string(const std::string& s);

// Semantics are fixed: r1(e1) = e2 (spouse) and r2(e2) = e3 (birth city).
struct Triplet {
    std::string id;
    std::string e1, e2, e3;
    Split split = Split::demonstrated;
};

struct Corpus {
    std::vector<Triplet> triplets;

    std::size_t count(Split s) const;
    const Triplet* find(const std::string& id) const;
};

// Half-open [begin, end) character range within the user string.
struct CharSpan {
    int begin = 0;
    int end = 0;
};

struct ChatExample {
    std::string system;
    std::string user;
    std::string assistant;
    QaKind kind = QaKind::first_hop;
    std::string triplet_id;
    int template_id = 0;
    Split split = Split::demonstrated;
    std::optional<CharSpan> bridge_char_span;

    // Grading metadata, not part of the serialized schema contract: the
    // answer entity and (for two-hop kinds) the bridge entity.
    std::string answer;
    std::string bridge;
};

}  // namespace twohop::corpus
