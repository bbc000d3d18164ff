#include "twohop/eval/harness.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

#include "twohop/eval/answers.hpp"
#include "twohop/train/losses.hpp"
#include "twohop/util/rng.hpp"

namespace twohop::eval {

using corpus::ChatExample;
using corpus::QaKind;

std::string to_string(EvalConfig::Mode mode) {
    return mode == EvalConfig::Mode::cot ? "cot" : "no_cot";
}

EvalConfig::Mode mode_from_string(const std::string& s) {
    if (s == "cot") return EvalConfig::Mode::cot;
    if (s == "no_cot") return EvalConfig::Mode::no_cot;
    throw std::runtime_error("unknown eval mode: " + s);
}

void EvalConfig::validate() const {
    if (temperature != 0) throw std::runtime_error("eval temperature is fixed at 0");
    if (max_tokens < 1) throw std::runtime_error("max_tokens must be positive");
    if (few_shot_k < -1) throw std::runtime_error("few_shot_k must be -1 or non-negative");
}

nlohmann::json EvalConfig::to_json() const {
    return {{"mode", eval::to_string(mode)}, {"few_shot_k", few_shot_k},
            {"temperature", temperature},    {"constrained", constrained},
            {"max_tokens", max_tokens},      {"seed", seed}};
}

EvalConfig EvalConfig::from_json(const nlohmann::json& j) {
    EvalConfig c;
    c.mode = mode_from_string(j.at("mode").get<std::string>());
    c.few_shot_k = j.value("few_shot_k", -1);
    c.temperature = j.value("temperature", 0.0);
    c.constrained = j.value("constrained", true);
    c.max_tokens = j.value("max_tokens", 48);
    c.seed = j.value("seed", 0ULL);
    c.validate();
    return c;
}

namespace {

void grade(SampleRecord& r, const ChatExample& ex, const std::string& response) {
    switch (ex.kind) {
        case QaKind::two_hop_no_cot: {
            const NoCotVerdict v = check_no_cot_answer(response, ex.bridge, ex.answer);
            r.verdict = eval::to_string(v);
            r.correct = v == NoCotVerdict::correct;
            r.leak = v == NoCotVerdict::leak;
            return;
        }
        case QaKind::two_hop_cot:
            // CoT must name the bridge on the way, so only e3 decides.
            r.correct = check_cot_answer(response, ex.bridge, ex.answer);
            r.verdict = r.correct ? "correct" : "wrong";
            return;
        default:
            r.correct = contains_word(response, ex.answer);
            r.verdict = r.correct ? "correct" : "wrong";
            return;
    }
}

}  // namespace

EvalReport eval_accuracy(model::ModelAdapter& adapter, const mixtures::ExampleSet& set,
                         const EvalConfig& cfg,
                         const std::vector<std::map<std::string, std::string>>* extra_groups) {
    cfg.validate();
    if (set.examples.empty()) throw std::runtime_error("eval set is empty");
    if (extra_groups && extra_groups->size() != set.examples.size())
        throw std::runtime_error("extra_groups does not match the eval set size");
    if (cfg.few_shot_k >= 0 && (std::size_t)cfg.few_shot_k != set.few_shot.size())
        throw std::runtime_error("eval set carries " + std::to_string(set.few_shot.size()) +
                                 " demonstrations, config expects " +
                                 std::to_string(cfg.few_shot_k));
    for (const auto& ex : set.examples) {
        if (cfg.mode == EvalConfig::Mode::cot && ex.kind == QaKind::two_hop_no_cot)
            throw std::runtime_error("CoT eval over a no-CoT prompt set");
        if (cfg.mode == EvalConfig::Mode::no_cot && ex.kind == QaKind::two_hop_cot)
            throw std::runtime_error("no-CoT eval over a CoT prompt set");
    }

    // Constrained decoding needs token access; CoT responses are free-form by
    // construction.
    const bool use_constrained =
        cfg.constrained && cfg.mode == EvalConfig::Mode::no_cot && adapter.has_logits();
    std::vector<std::string> allowed;
    if (use_constrained) {
        std::set<std::string> distinct;
        for (const auto& ex : set.examples) distinct.insert(ex.answer);
        allowed.assign(distinct.begin(), distinct.end());
    }

    EvalReport report;
    report.setting = set.provenance.setting;
    report.adapter = adapter.name();
    report.mode = eval::to_string(cfg.mode);
    report.constrained_used = use_constrained;
    report.containment_only = cfg.mode == EvalConfig::Mode::no_cot && !use_constrained;
    report.chance = chance_level(set);

    int correct = 0, leaks = 0;
    for (std::size_t i = 0; i < set.examples.size(); ++i) {
        const ChatExample& ex = set.examples[i];
        SampleRecord r;
        r.triplet_id = ex.triplet_id;
        r.question = ex.user;
        r.gold = ex.answer;
        r.bridge = ex.bridge;
        r.groups = {{"kind", corpus::to_string(ex.kind)},
                    {"split", corpus::to_string(ex.split)},
                    {"template", std::to_string(ex.template_id)}};
        if (extra_groups)
            for (const auto& [k, v] : (*extra_groups)[i]) r.groups[k] = v;

        model::GenerateOptions opts;
        opts.max_tokens = cfg.max_tokens;
        opts.temperature = cfg.temperature;
        opts.seed = cfg.seed + i;
        try {
            if (use_constrained) {
                const auto rendered =
                    model::render_chat(adapter.tokenizer(), ex, set.few_shot, false);
                opts.allowed_answers = &allowed;
                r.response = adapter.generate(rendered.tokens, opts);
            } else {
                r.response = adapter.chat(model::to_messages(ex, set.few_shot), opts);
            }
            grade(r, ex, r.response);
        } catch (const std::exception& e) {
            r.error = true;
            r.verdict = "error";
            r.response = std::string("[adapter error] ") + e.what();
        }
        correct += r.correct ? 1 : 0;
        leaks += r.leak ? 1 : 0;
        report.errors += r.error ? 1 : 0;
        report.samples.push_back(std::move(r));
    }

    // Errors leave the denominator; they are reported, not scored.
    const int scored = (int)set.examples.size() - report.errors;
    report.accuracy = scored ? (double)correct / scored : 0.0;
    report.leak_rate = scored ? (double)leaks / scored : 0.0;
    return report;
}

namespace {

std::pair<double, double> loss_baseline_impl(model::ModelAdapter& adapter,
                                             const mixtures::ExampleSet& set,
                                             unsigned long long seed, EvalReport* report) {
    const std::size_t n = set.examples.size();
    if (n == 0) throw std::runtime_error("eval set is empty");
    if (report && report->samples.size() != n)
        throw std::runtime_error("report does not match the eval set");

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    util::seeded_shuffle(perm, rng);

    const auto& tok = adapter.tokenizer();
    const auto span_tokens = [&](const std::string& assistant) {
        // Assistant text plus the closing end-of-turn token.
        return (long long)tok.encode(assistant).size() + 1;
    };

    double correct_sum = 0, shuffled_sum = 0;
    long long correct_tokens = 0, shuffled_tokens = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const ChatExample& ex = set.examples[i];
        const long long tc = span_tokens(ex.assistant);
        const double lc = train::lm_loss(adapter, {ex});

        ChatExample shuffled = ex;
        shuffled.assistant = set.examples[perm[i]].assistant;
        const long long ts = span_tokens(shuffled.assistant);
        const double ls = train::lm_loss(adapter, {shuffled});

        correct_sum += lc * tc;
        correct_tokens += tc;
        shuffled_sum += ls * ts;
        shuffled_tokens += ts;
        if (report) {
            SampleRecord& r = report->samples[i];
            r.has_loss = true;
            r.loss_correct_sum = lc * tc;
            r.tokens_correct = tc;
            r.loss_shuffled_sum = ls * ts;
            r.tokens_shuffled = ts;
        }
    }
    // The permutation only reorders the answers, so both sides cover the same
    // token multiset.
    if (correct_tokens != shuffled_tokens)
        throw std::logic_error("loss baseline token counts diverged");

    const std::pair<double, double> out{correct_sum / correct_tokens,
                                        shuffled_sum / shuffled_tokens};
    if (report) {
        report->has_loss = true;
        report->loss_correct = out.first;
        report->loss_shuffled = out.second;
    }
    return out;
}

}  // namespace

std::pair<double, double> loss_baseline(model::ModelAdapter& adapter,
                                        const mixtures::ExampleSet& set,
                                        unsigned long long seed) {
    return loss_baseline_impl(adapter, set, seed, nullptr);
}

std::pair<double, double> attach_loss_baseline(model::ModelAdapter& adapter,
                                               const mixtures::ExampleSet& set,
                                               unsigned long long seed, EvalReport& report) {
    return loss_baseline_impl(adapter, set, seed, &report);
}

double chance_level(const mixtures::ExampleSet& set) {
    if (set.examples.empty()) throw std::runtime_error("eval set is empty");
    std::set<std::string> distinct;
    for (const auto& ex : set.examples) distinct.insert(ex.answer);
    return 1.0 / (double)distinct.size();
}

}  // namespace twohop::eval
