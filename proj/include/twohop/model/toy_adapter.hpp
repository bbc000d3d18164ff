#pragma once

#include <filesystem>
#include <memory>

#include "twohop/model/adapter.hpp"
#include "twohop/model/toy_transformer.hpp"

namespace twohop::model {

// Adapter over the built-in transformer; implements every capability.
class ToyAdapter : public ModelAdapter {
public:
    ToyAdapter(ToyConfig cfg, Tokenizer tok);

    static std::unique_ptr<ToyAdapter> load(const std::filesystem::path& checkpoint);
    void save(const std::filesystem::path& checkpoint) const;

    std::string name() const override { return "toy"; }
    bool has_logits() const override { return true; }
    const Tokenizer& tokenizer() const override { return tok_; }
    int n_blocks() const override { return model_.config().n_blocks; }
    int width() const override { return model_.config().width; }

    std::span<const float> forward(std::span<const int> tokens) override;
    std::span<const float> hidden_at(int block, int pos) override;
    std::vector<float> embedding_row(int token) const override;
    std::vector<float> unembed(std::span<const float> hidden) const override;
    std::vector<float> final_norm(std::span<const float> hidden) const override;

    std::string generate(std::span<const int> prompt, const GenerateOptions& opts) override;
    std::string chat(const std::vector<ChatMessage>& messages,
                     const GenerateOptions& opts) override;

    ToyTransformer& model() { return model_; }
    const ToyTransformer& model() const { return model_; }

private:
    ToyTransformer model_;
    Tokenizer tok_;
    ToyCacheT<float> cache_;
    bool has_cache_ = false;
};

}  // namespace twohop::model
