#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "twohop/model/adapter.hpp"

namespace twohop::model {

// Token-sequence prefix tree over the permitted answers; constrained decoding
// walks it so only member strings can ever be produced.
class AnswerTrie {
public:
    static AnswerTrie build(const Tokenizer& tok, const std::vector<std::string>& answers);

    struct Node {
        std::map<int, int> next;
        bool terminal = false;
    };
    const Node& node(int i) const { return nodes_[i]; }
    static constexpr int kRoot = 0;

private:
    std::vector<Node> nodes_;
};

// Greedy (or seeded-sampling) decoding over a logit-capable adapter. With
// allowed_answers set, every emitted token follows the trie and the result is
// always a member of the set.
std::string generate_tokens(ModelAdapter& adapter, std::span<const int> prompt,
                            const GenerateOptions& opts);

}  // namespace twohop::model
