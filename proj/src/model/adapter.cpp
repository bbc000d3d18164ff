#include "twohop/model/adapter.hpp"

#include <map>
#include <random>

#include "twohop/model/toy_adapter.hpp"
#include "twohop/util/rng.hpp"

namespace twohop::model {

namespace {

class ScriptedAdapter : public ModelAdapter {
public:
    ScriptedAdapter(std::vector<std::pair<std::string, std::string>> responses,
                    std::string fallback)
        : responses_(responses.begin(), responses.end()), fallback_(std::move(fallback)) {}

    std::string name() const override { return "scripted"; }

    // Pure lookup over immutable state.
    bool thread_safe() const override { return true; }

    std::string chat(const std::vector<ChatMessage>& messages, const GenerateOptions&) override {
        for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
            if (it->role != "user") continue;
            const auto found = responses_.find(it->content);
            if (found != responses_.end()) return found->second;
            if (!fallback_.empty()) return fallback_;
            throw std::runtime_error("scripted adapter has no response for: " + it->content);
        }
        throw std::runtime_error("scripted adapter saw no user message");
    }

private:
    std::map<std::string, std::string> responses_;
    std::string fallback_;
};

class UniformAdapter : public ModelAdapter {
public:
    UniformAdapter(std::vector<std::string> answers, std::uint64_t seed)
        : answers_(std::move(answers)), rng_(seed) {
        if (answers_.empty()) throw std::runtime_error("uniform adapter needs answers");
    }

    std::string name() const override { return "uniform"; }

    std::string chat(const std::vector<ChatMessage>&, const GenerateOptions&) override {
        return answers_[(std::size_t)util::rand_below(rng_, answers_.size())];
    }

private:
    std::vector<std::string> answers_;
    std::mt19937_64 rng_;
};

std::map<std::string, AdapterFactory>& registry() {
    static std::map<std::string, AdapterFactory> r;
    return r;
}

void ensure_builtins() {
    static const bool once = [] {
        register_adapter("toy", [](const nlohmann::json& config) -> std::unique_ptr<ModelAdapter> {
            return ToyAdapter::load(config.at("checkpoint").get<std::string>());
        });
        register_adapter("scripted",
                         [](const nlohmann::json& config) -> std::unique_ptr<ModelAdapter> {
                             std::vector<std::pair<std::string, std::string>> responses;
                             for (const auto& row : config.value("responses", nlohmann::json::array()))
                                 responses.emplace_back(row.at(0).get<std::string>(),
                                                        row.at(1).get<std::string>());
                             return make_scripted_adapter(std::move(responses),
                                                          config.value("fallback", ""));
                         });
        register_adapter("uniform",
                         [](const nlohmann::json& config) -> std::unique_ptr<ModelAdapter> {
                             return make_uniform_adapter(
                                 config.at("answers").get<std::vector<std::string>>(),
                                 config.value("seed", 0));
                         });
        return true;
    }();
    (void)once;
}

}  // namespace

void register_adapter(const std::string& name, AdapterFactory factory) {
    registry()[name] = std::move(factory);
}

std::unique_ptr<ModelAdapter> make_adapter(const std::string& name, const nlohmann::json& config) {
    ensure_builtins();
    const auto it = registry().find(name);
    if (it == registry().end()) {
        std::string known;
        for (const auto& [k, v] : registry()) known += (known.empty() ? "" : ", ") + k;
        throw std::runtime_error("unknown adapter \"" + name + "\" (known: " + known + ")");
    }
    return it->second(config);
}

std::vector<std::string> registered_adapters() {
    ensure_builtins();
    std::vector<std::string> names;
    for (const auto& [k, v] : registry()) names.push_back(k);
    return names;
}

std::unique_ptr<ModelAdapter> make_scripted_adapter(
    std::vector<std::pair<std::string, std::string>> responses, std::string fallback) {
    return std::make_unique<ScriptedAdapter>(std::move(responses), std::move(fallback));
}

std::unique_ptr<ModelAdapter> make_uniform_adapter(std::vector<std::string> answers,
                                                   std::uint64_t seed) {
    return std::make_unique<UniformAdapter>(std::move(answers), seed);
}

}  // namespace twohop::model
