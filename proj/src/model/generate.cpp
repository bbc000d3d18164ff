#include "twohop/model/generate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "twohop/util/rng.hpp"

namespace twohop::model {

AnswerTrie AnswerTrie::build(const Tokenizer& tok, const std::vector<std::string>& answers) {
    if (answers.empty()) throw std::runtime_error("allowed answer set is empty");
    AnswerTrie trie;
    trie.nodes_.emplace_back();
    for (const auto& answer : answers) {
        const auto ids = tok.encode(answer);
        if (ids.empty()) throw std::runtime_error("allowed answer tokenizes to nothing");
        int cur = kRoot;
        for (int id : ids) {
            auto [it, inserted] = trie.nodes_[cur].next.try_emplace(id, (int)trie.nodes_.size());
            if (inserted) trie.nodes_.emplace_back();
            cur = it->second;
        }
        trie.nodes_[cur].terminal = true;
    }
    return trie;
}

namespace {

int pick(const std::vector<std::pair<int, float>>& options, double temperature,
         std::mt19937_64& rng) {
    if (temperature <= 0.0) {
        return std::max_element(options.begin(), options.end(),
                                [](const auto& a, const auto& b) { return a.second < b.second; })
            ->first;
    }
    double maxv = -1e30;
    for (const auto& [id, logit] : options) maxv = std::max(maxv, (double)logit);
    std::vector<double> w(options.size());
    double total = 0.0;
    for (std::size_t i = 0; i < options.size(); ++i) {
        w[i] = std::exp(((double)options[i].second - maxv) / temperature);
        total += w[i];
    }
    double u = twohop::util::rand_unit(rng) * total;
    for (std::size_t i = 0; i < options.size(); ++i) {
        u -= w[i];
        if (u <= 0.0) return options[i].first;
    }
    return options.back().first;
}

}  // namespace

std::string generate_tokens(ModelAdapter& adapter, std::span<const int> prompt,
                            const GenerateOptions& opts) {
    const Tokenizer& tok = adapter.tokenizer();
    const int V = tok.vocab_size();

    AnswerTrie trie;
    const bool constrained = opts.allowed_answers != nullptr;
    if (constrained) trie = AnswerTrie::build(tok, *opts.allowed_answers);

    std::vector<int> seq(prompt.begin(), prompt.end());
    std::vector<int> emitted;
    std::mt19937_64 rng(opts.seed);
    int node = AnswerTrie::kRoot;

    for (int step = 0; step < opts.max_tokens; ++step) {
        const auto logits = adapter.forward(seq);
        const float* last = logits.data() + logits.size() - V;

        std::vector<std::pair<int, float>> options;
        if (constrained) {
            const auto& cur = trie.node(node);
            for (const auto& [id, child] : cur.next) options.emplace_back(id, last[id]);
            if (cur.terminal) options.emplace_back(Tokenizer::kEnd, last[Tokenizer::kEnd]);
            if (options.empty()) throw std::runtime_error("no allowed continuation at this node");
        } else {
            options.reserve(V);
            for (int id = 0; id < V; ++id) options.emplace_back(id, last[id]);
        }

        const int chosen = pick(options, opts.temperature, rng);
        if (chosen == Tokenizer::kEnd) return tok.decode(emitted);

        seq.push_back(chosen);
        emitted.push_back(chosen);
        if (constrained) {
            node = trie.node(node).next.at(chosen);
            if (trie.node(node).terminal && trie.node(node).next.empty())
                return tok.decode(emitted);
        }
    }
    if (constrained)
        throw std::runtime_error("constrained generation hit max_tokens before an answer");
    return tok.decode(emitted);
}

}  // namespace twohop::model
