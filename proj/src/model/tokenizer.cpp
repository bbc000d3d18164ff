#include "twohop/model/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>

namespace twohop::model {

namespace {

const std::string kSpecialNames[] = {"<|sys|>", "<|user|>", "<|asst|>", "<|end|>"};

// Apostrophes and hyphens split so that a possessive like "Russ's" keeps the
// entity itself as a single vocabulary item.
bool word_char(char c) { return std::isalnum((unsigned char)c) || c == '_'; }

}  // namespace

const std::string& special_name(int id) { return kSpecialNames[id]; }

std::vector<std::string> Tokenizer::lex(std::string_view text) {
    std::vector<std::string> out;
    const std::size_t n = text.size();
    std::size_t i = 0;
    while (i < n) {
        const char c = text[i];
        if (c == '\n') {
            std::size_t j = i;
            while (j < n && text[j] == '\n') ++j;
            out.emplace_back(text.substr(i, j - i));
            i = j;
        } else if (c == ' ') {
            std::size_t j = i;
            while (j < n && text[j] == ' ') ++j;
            if (j == n || text[j] == '\n') {
                out.emplace_back(text.substr(i, j - i));
                i = j;
                continue;
            }
            // The last space of the run attaches to the next token.
            if (j - i > 1) out.emplace_back(text.substr(i, j - i - 1));
            std::size_t start = j - 1;
            if (word_char(text[j])) {
                std::size_t e = j;
                while (e < n && word_char(text[e])) ++e;
                out.emplace_back(text.substr(start, e - start));
                i = e;
            } else {
                out.emplace_back(text.substr(start, 2));
                i = j + 1;
            }
        } else if (word_char(c)) {
            std::size_t e = i;
            while (e < n && word_char(text[e])) ++e;
            out.emplace_back(text.substr(i, e - i));
            i = e;
        } else {
            out.emplace_back(text.substr(i, 1));
            ++i;
        }
    }
    return out;
}

Tokenizer Tokenizer::build(const std::vector<std::string>& surfaces) {
    std::set<std::string> uniq;
    for (const auto& s : surfaces) {
        for (auto& t : lex(s)) uniq.insert(std::move(t));
    }
    Tokenizer tok;
    tok.tokens_.assign(std::begin(kSpecialNames), std::end(kSpecialNames));
    tok.tokens_.insert(tok.tokens_.end(), uniq.begin(), uniq.end());
    tok.rebuild_index();
    return tok;
}

void Tokenizer::rebuild_index() {
    index_.clear();
    for (int i = 0; i < (int)tokens_.size(); ++i) index_[tokens_[i]] = i;
}

std::vector<int> Tokenizer::encode(std::string_view text) const {
    std::vector<int> ids;
    std::vector<int> starts;
    encode_with_offsets(text, ids, starts);
    return ids;
}

void Tokenizer::encode_with_offsets(std::string_view text, std::vector<int>& ids,
                                    std::vector<int>& starts) const {
    ids.clear();
    starts.clear();
    int pos = 0;
    for (const auto& t : lex(text)) {
        const auto it = index_.find(t);
        if (it == index_.end())
            throw std::runtime_error("out-of-vocabulary token \"" + t + "\"");
        ids.push_back(it->second);
        starts.push_back(pos);
        pos += (int)t.size();
    }
}

std::string Tokenizer::decode(std::span<const int> ids) const {
    std::string out;
    for (int id : ids) {
        if (id < 0 || id >= (int)tokens_.size())
            throw std::runtime_error("token id out of range: " + std::to_string(id));
        out += tokens_[id];
    }
    return out;
}

int Tokenizer::token_id(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    return it == index_.end() ? -1 : it->second;
}

int Tokenizer::entity_id(std::string_view name) const {
    const int spaced = token_id(" " + std::string(name));
    if (spaced >= 0) return spaced;
    const int bare = token_id(name);
    if (bare >= 0) return bare;
    throw std::runtime_error("entity not in vocabulary: \"" + std::string(name) + "\"");
}

nlohmann::json Tokenizer::to_json() const {
    return {{"tokens", tokens_}};
}

Tokenizer Tokenizer::from_json(const nlohmann::json& j) {
    Tokenizer tok;
    tok.tokens_ = j.at("tokens").get<std::vector<std::string>>();
    if ((int)tok.tokens_.size() < kNumSpecials)
        throw std::runtime_error("tokenizer json missing special tokens");
    for (int i = 0; i < kNumSpecials; ++i) {
        if (tok.tokens_[i] != kSpecialNames[i])
            throw std::runtime_error("tokenizer json has wrong special token order");
    }
    tok.rebuild_index();
    return tok;
}

}  // namespace twohop::model
