#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "twohop/model/chat.hpp"
#include "twohop/model/tokenizer.hpp"

namespace twohop::model {

struct GenerateOptions {
    int max_tokens = 32;
    double temperature = 0.0;  // 0 = greedy
    const std::vector<std::string>* allowed_answers = nullptr;
    std::uint64_t seed = 0;  // sampling only
};

// Raised when an adapter is asked for a capability it does not implement
// (external chat endpoints have no logits or hidden taps).
class CapabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ModelAdapter {
public:
    virtual ~ModelAdapter() = default;
    virtual std::string name() const = 0;

    // Chat-level generation; the one capability every adapter has.
    virtual std::string chat(const std::vector<ChatMessage>& messages,
                             const GenerateOptions& opts) = 0;

    virtual bool has_logits() const { return false; }

    // True when chat() may be called from several threads at once.
    virtual bool thread_safe() const { return false; }

    // False for endpoints that always emit chain-of-thought; such models
    // cannot take part in evals that need a no-CoT pass.
    virtual bool can_suppress_cot() const { return true; }

    virtual const Tokenizer& tokenizer() const { missing("tokenizer"); }
    virtual int n_blocks() const { missing("n_blocks"); }
    virtual int width() const { missing("width"); }

    // Runs the model; result rows live until the next forward on this adapter.
    virtual std::span<const float> forward(std::span<const int> /*tokens*/) { missing("forward"); }

    // Observers over the most recent forward.
    virtual std::span<const float> hidden_at(int /*block*/, int /*pos*/) { missing("hidden_at"); }

    virtual std::vector<float> embedding_row(int /*token*/) const { missing("embedding_row"); }
    virtual std::vector<float> unembed(std::span<const float> /*hidden*/) const {
        missing("unembed");
    }
    // Applies the pre-unembedding norm to a hidden vector.
    virtual std::vector<float> final_norm(std::span<const float> /*hidden*/) const {
        missing("final_norm");
    }

    // Token-level generation from an already-rendered prompt.
    virtual std::string generate(std::span<const int> /*prompt*/, const GenerateOptions& /*opts*/) {
        missing("generate");
    }

protected:
    [[noreturn]] void missing(const char* what) const {
        throw CapabilityError(name() + ": adapter does not support " + what);
    }
};

// Name -> factory registry so manifests can select adapters by string.
using AdapterFactory = std::function<std::unique_ptr<ModelAdapter>(const nlohmann::json& config)>;
void register_adapter(const std::string& name, AdapterFactory factory);
std::unique_ptr<ModelAdapter> make_adapter(const std::string& name, const nlohmann::json& config);
std::vector<std::string> registered_adapters();

// Deterministic test double: answers from a fixed user->response map, with an
// optional fallback.
std::unique_ptr<ModelAdapter> make_scripted_adapter(
    std::vector<std::pair<std::string, std::string>> responses, std::string fallback = "");

// Uniform draw from a fixed answer list, seeded per construction.
std::unique_ptr<ModelAdapter> make_uniform_adapter(std::vector<std::string> answers,
                                                   std::uint64_t seed);

}  // namespace twohop::model
