#include "twohop/model/chat.hpp"

#include <stdexcept>

namespace twohop::model {

std::vector<ChatMessage> to_messages(const corpus::ChatExample& ex,
                                     const std::vector<corpus::ChatExample>& few_shot) {
    std::vector<ChatMessage> out;
    out.push_back({"system", ex.system});
    for (const auto& demo : few_shot) {
        out.push_back({"user", demo.user});
        out.push_back({"assistant", demo.assistant});
    }
    out.push_back({"user", ex.user});
    return out;
}

RenderedChat render_chat(const Tokenizer& tok, const corpus::ChatExample& ex,
                         const std::vector<corpus::ChatExample>& few_shot, bool include_answer) {
    RenderedChat r;
    auto append_text = [&](const std::string& text) {
        const auto ids = tok.encode(text);
        r.tokens.insert(r.tokens.end(), ids.begin(), ids.end());
    };

    r.tokens.push_back(Tokenizer::kSys);
    append_text(ex.system);
    r.tokens.push_back(Tokenizer::kEnd);
    for (const auto& demo : few_shot) {
        r.tokens.push_back(Tokenizer::kUser);
        append_text(demo.user);
        r.tokens.push_back(Tokenizer::kEnd);
        r.tokens.push_back(Tokenizer::kAsst);
        append_text(demo.assistant);
        r.tokens.push_back(Tokenizer::kEnd);
    }
    r.tokens.push_back(Tokenizer::kUser);
    r.final_user_begin = (int)r.tokens.size();
    append_text(ex.user);
    r.tokens.push_back(Tokenizer::kEnd);
    r.tokens.push_back(Tokenizer::kAsst);
    r.answer_begin = (int)r.tokens.size();
    if (include_answer) {
        if (ex.assistant.empty()) throw std::runtime_error("example has an empty assistant span");
        append_text(ex.assistant);
        r.tokens.push_back(Tokenizer::kEnd);
    }
    r.answer_end = (int)r.tokens.size();
    return r;
}

int bridge_position(const Tokenizer& tok, const corpus::ChatExample& ex,
                    const std::vector<corpus::ChatExample>& few_shot) {
    if (!ex.bridge_char_span)
        throw std::runtime_error("example carries no bridge span");
    const auto& span = *ex.bridge_char_span;
    if (span.begin < 0 || span.end <= span.begin || span.end > (int)ex.user.size())
        throw std::runtime_error("bridge span out of bounds");

    std::vector<int> ids, starts;
    tok.encode_with_offsets(ex.user, ids, starts);
    const int last_char = span.end - 1;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const int tok_begin = starts[i];
        const int tok_end = tok_begin + (int)tok.token_string(ids[i]).size();
        if (last_char >= tok_begin && last_char < tok_end) {
            if (span.end != tok_end)
                throw std::runtime_error("bridge span ends inside a token");
            const RenderedChat r = render_chat(tok, ex, few_shot, false);
            return r.final_user_begin + (int)i;
        }
    }
    throw std::runtime_error("bridge span not covered by tokenization");
}

}  // namespace twohop::model
