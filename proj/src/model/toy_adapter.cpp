#include "twohop/model/toy_adapter.hpp"

#include <stdexcept>

#include "twohop/kernels/kernels.hpp"
#include "twohop/model/checkpoint.hpp"
#include "twohop/model/generate.hpp"

namespace twohop::model {

ToyAdapter::ToyAdapter(ToyConfig cfg, Tokenizer tok) : model_(cfg), tok_(std::move(tok)) {
    if (cfg.vocab != tok_.vocab_size())
        throw std::runtime_error("config vocab does not match tokenizer");
}

std::unique_ptr<ToyAdapter> ToyAdapter::load(const std::filesystem::path& checkpoint) {
    auto ck = load_checkpoint(checkpoint);
    auto adapter = std::make_unique<ToyAdapter>(ck.config, std::move(ck.tokenizer));
    adapter->model_.params() = std::move(ck.params);
    return adapter;
}

void ToyAdapter::save(const std::filesystem::path& checkpoint) const {
    save_checkpoint(model_.config(), model_.params(), tok_, checkpoint);
}

std::span<const float> ToyAdapter::forward(std::span<const int> tokens) {
    model_.forward(tokens, cache_);
    has_cache_ = true;
    return {cache_.logits.data(), cache_.logits.size()};
}

std::span<const float> ToyAdapter::hidden_at(int block, int pos) {
    if (!has_cache_) throw std::runtime_error("hidden_at requires a prior forward");
    return {model_.hidden_at(cache_, block, pos), (std::size_t)model_.config().width};
}

std::vector<float> ToyAdapter::embedding_row(int token) const {
    const int d = model_.config().width;
    if (token < 0 || token >= model_.config().vocab)
        throw std::runtime_error("token id out of vocabulary: " + std::to_string(token));
    const float* row = model_.params().tok_embed.data() + (std::size_t)token * d;
    return {row, row + d};
}

std::vector<float> ToyAdapter::unembed(std::span<const float> hidden) const {
    const int d = model_.config().width;
    if ((int)hidden.size() != d) throw std::runtime_error("hidden vector has wrong width");
    std::vector<float> y(model_.config().vocab);
    model_.lens_logits(hidden.data(), y.data());
    return y;
}

std::vector<float> ToyAdapter::final_norm(std::span<const float> hidden) const {
    const int d = model_.config().width;
    if ((int)hidden.size() != d) throw std::runtime_error("hidden vector has wrong width");
    std::vector<float> out(d);
    kernels::rmsnorm(hidden.data(), model_.params().final_norm.data(), out.data(), d,
                     (float)model_.config().eps);
    return out;
}

std::string ToyAdapter::generate(std::span<const int> prompt, const GenerateOptions& opts) {
    return generate_tokens(*this, prompt, opts);
}

std::string ToyAdapter::chat(const std::vector<ChatMessage>& messages,
                             const GenerateOptions& opts) {
    if (messages.empty()) throw std::runtime_error("empty chat");
    std::vector<int> tokens;
    auto append_text = [&](const std::string& text) {
        const auto ids = tok_.encode(text);
        tokens.insert(tokens.end(), ids.begin(), ids.end());
    };
    for (std::size_t i = 0; i < messages.size(); ++i) {
        const auto& msg = messages[i];
        if (msg.role == "system") {
            if (i != 0) throw std::runtime_error("system message must come first");
            tokens.push_back(Tokenizer::kSys);
        } else if (msg.role == "user") {
            tokens.push_back(Tokenizer::kUser);
        } else if (msg.role == "assistant") {
            tokens.push_back(Tokenizer::kAsst);
        } else {
            throw std::runtime_error("unknown chat role: " + msg.role);
        }
        append_text(msg.content);
        tokens.push_back(Tokenizer::kEnd);
    }
    if (messages.back().role != "user")
        throw std::runtime_error("chat must end with a user message");
    tokens.push_back(Tokenizer::kAsst);
    return generate(tokens, opts);
}

}  // namespace twohop::model
