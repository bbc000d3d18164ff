#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace twohop::model {

// Word-level tokenizer over a closed vocabulary built from the corpus.
// Tokens are exact substrings of the input (words carry their leading space,
// GPT-style), so detokenize(tokenize(s)) == s always holds. Entity names are
// single words and therefore single tokens by construction.
class Tokenizer {
public:
    // Special ids are fixed so renderings are stable across vocab rebuilds.
    static constexpr int kSys = 0;
    static constexpr int kUser = 1;
    static constexpr int kAsst = 2;
    static constexpr int kEnd = 3;
    static constexpr int kNumSpecials = 4;

    // Splits text into lexemes whose concatenation reproduces the input.
    static std::vector<std::string> lex(std::string_view text);

    // Builds the vocabulary from every string the model will ever see.
    static Tokenizer build(const std::vector<std::string>& surfaces);

    int vocab_size() const { return (int)tokens_.size(); }

    // Throws std::runtime_error naming the out-of-vocabulary lexeme.
    std::vector<int> encode(std::string_view text) const;

    // As encode, also reporting each token's starting character offset.
    void encode_with_offsets(std::string_view text, std::vector<int>& ids,
                             std::vector<int>& starts) const;

    std::string decode(std::span<const int> ids) const;

    // -1 when absent.
    int token_id(std::string_view token) const;
    const std::string& token_string(int id) const { return tokens_.at(id); }

    // Canonical vocabulary id for an entity name: the space-prefixed form if
    // present (the common mid-sentence occurrence), else the bare form.
    int entity_id(std::string_view name) const;

    nlohmann::json to_json() const;
    static Tokenizer from_json(const nlohmann::json& j);

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;

    void rebuild_index();
};

const std::string& special_name(int id);

}  // namespace twohop::model
