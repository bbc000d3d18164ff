#pragma once

#include <string>
#include <vector>

#include "twohop/corpus/types.hpp"
#include "twohop/model/tokenizer.hpp"

namespace twohop::model {

struct ChatMessage {
    std::string role;  // system | user | assistant
    std::string content;
};

// Message view of an example with optional fixed demonstrations ahead of it.
std::vector<ChatMessage> to_messages(const corpus::ChatExample& ex,
                                     const std::vector<corpus::ChatExample>& few_shot);

// Token layout:
//   <|sys|> system <|end|> { <|user|> u <|end|> <|asst|> a <|end|> }*
//   <|user|> u <|end|> <|asst|> [ answer <|end|> ]
// The answer span is the loss-bearing region; demonstrations never carry loss.
struct RenderedChat {
    std::vector<int> tokens;
    int answer_begin = 0;  // first token of the final assistant text
    int answer_end = 0;    // one past the final <|end|>
    int final_user_begin = 0;
};

RenderedChat render_chat(const Tokenizer& tok, const corpus::ChatExample& ex,
                         const std::vector<corpus::ChatExample>& few_shot, bool include_answer);

// Index of the rendered token whose text contains the last character of the
// example's bridge description. Throws when the example has no bridge span or
// the span end falls inside a longer token.
int bridge_position(const Tokenizer& tok, const corpus::ChatExample& ex,
                    const std::vector<corpus::ChatExample>& few_shot);

}  // namespace twohop::model
