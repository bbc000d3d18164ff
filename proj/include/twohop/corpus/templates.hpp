#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "twohop/corpus/types.hpp"

namespace twohop::corpus {

// Substitutes {key} placeholders. Unknown placeholders throw.
std::string fill_template(const std::string& tmpl,
                          const std::map<std::string, std::string>& slots);

// Versioned bank of all surface forms. The paraphrase discipline pairs
// question template t with statement/answer template t, so template 0 is the
// canonical surface everywhere.
class TemplateBank {
public:
    static TemplateBank load(const std::filesystem::path& path);
    static const TemplateBank& builtin();

    int version() const { return version_; }
    int paraphrase_count() const { return kParaphrases; }

    const std::string& system_for(QaKind kind) const;
    const std::string& system_in_context() const { return system_in_context_; }

    ChatExample render_qa(const Triplet& t, QaKind kind, int template_id) const;
    std::vector<ChatExample> paraphrase_set(const Triplet& t, QaKind kind) const;

    std::string marriage_statement(int t, const std::string& person,
                                   const std::string& spouse) const;
    std::string birth_statement(int t, const std::string& spouse, const std::string& city) const;
    std::string semantic_filler(int t, const std::string& e1, const std::string& e2) const;
    const std::string& same_doc_user_template() const { return same_doc_user_; }
    std::string same_doc_user(const std::string& e1) const;
    std::string other_triplets_user(const std::vector<std::string>& people) const;

    static constexpr int kParaphrases = 30;

private:
    int version_ = 0;
    std::string system_one_hop_, system_cot_, system_no_cot_, system_in_context_;
    std::vector<std::string> marriage_questions_, marriage_statements_;
    std::vector<std::string> birth_questions_, birth_statements_;
    std::vector<std::string> two_hop_questions_, cot_answers_;
    std::string no_cot_answer_;
    std::string same_doc_user_, other_triplets_user_;
    std::vector<std::string> semantic_fillers_;

    void validate() const;
};

}  // namespace twohop::corpus
