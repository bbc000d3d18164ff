#include "twohop/realworld/realworld.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <thread>

#include "twohop/eval/answers.hpp"
#include "twohop/realworld/endpoint.hpp"
#include "twohop/util/jsonl.hpp"
#include "twohop/util/paths.hpp"
#include "twohop/util/rng.hpp"
#include "twohop/util/text.hpp"

namespace twohop::realworld {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Dataset schema

namespace {

std::string want_string(const json& j, const char* field) {
    if (!j.contains(field))
        throw std::invalid_argument(std::string("missing field \"") + field + "\"");
    const auto& v = j.at(field);
    if (!v.is_string())
        throw std::invalid_argument(std::string("field \"") + field + "\" must be a string");
    return v.get<std::string>();
}

}  // namespace

void RealWorldSample::validate() const {
    const std::pair<const std::string*, const char*> required[] = {
        {&e1, "e1"},
        {&r1, "r1"},
        {&e2, "e2"},
        {&r2, "r2"},
        {&e3, "e3"},
        {&two_hop_question, "two_hop_question"},
        {&one_hop_first_question, "one_hop_first_question"},
        {&one_hop_second_question, "one_hop_second_question"},
        {&partial_omit_e1_question, "partial_omit_e1_question"},
        {&partial_omit_r1_question, "partial_omit_r1_question"},
        {&category, "category"},
    };
    for (const auto& [value, field] : required)
        if (value->empty())
            throw std::invalid_argument(std::string("field \"") + field + "\" must be nonempty");
}

json RealWorldSample::to_json() const {
    return json{{"e1", e1},
                {"r1", r1},
                {"e2", e2},
                {"r2", r2},
                {"e3", e3},
                {"two_hop_question", two_hop_question},
                {"one_hop_first_question", one_hop_first_question},
                {"one_hop_second_question", one_hop_second_question},
                {"partial_omit_e1_question", partial_omit_e1_question},
                {"partial_omit_r1_question", partial_omit_r1_question},
                {"category", category},
                {"e1_type", e1_type},
                {"e2_type", e2_type},
                {"e3_type", e3_type}};
}

RealWorldSample RealWorldSample::from_json(const json& j) {
    RealWorldSample s;
    s.e1 = want_string(j, "e1");
    s.r1 = want_string(j, "r1");
    s.e2 = want_string(j, "e2");
    s.r2 = want_string(j, "r2");
    s.e3 = want_string(j, "e3");
    s.two_hop_question = want_string(j, "two_hop_question");
    s.one_hop_first_question = want_string(j, "one_hop_first_question");
    s.one_hop_second_question = want_string(j, "one_hop_second_question");
    s.partial_omit_e1_question = want_string(j, "partial_omit_e1_question");
    s.partial_omit_r1_question = want_string(j, "partial_omit_r1_question");
    s.category = want_string(j, "category");
    s.e1_type = want_string(j, "e1_type");
    s.e2_type = want_string(j, "e2_type");
    s.e3_type = want_string(j, "e3_type");
    s.validate();
    return s;
}

std::vector<RealWorldSample> load_two_hop_dataset(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<RealWorldSample> samples;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno) + ": ";
        json row;
        try {
            row = json::parse(line);
        } catch (const json::parse_error& e) {
            throw std::runtime_error(where + e.what());
        }
        try {
            samples.push_back(RealWorldSample::from_json(row));
        } catch (const std::exception& e) {
            throw std::runtime_error(where + e.what());
        }
    }
    return samples;
}

// ---------------------------------------------------------------------------
// Pinned prompts

namespace {

std::string load_fixture(const char* file) {
    std::string text = util::read_text_file(util::data_dir() / "realworld" / file);
    if (!text.empty() && text.back() == '\n') text.pop_back();
    return text;
}

// Substitutes each {name} slot in a single left-to-right pass. Values are
// emitted verbatim, so slot-like text inside them is never re-expanded.
std::string render_slots(const std::string& tmpl,
                         const std::vector<std::pair<std::string, std::string>>& slots) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            bool matched = false;
            for (const auto& [name, value] : slots) {
                const std::size_t close = i + 1 + name.size();
                if (close < tmpl.size() && tmpl[close] == '}' &&
                    tmpl.compare(i + 1, name.size(), name) == 0) {
                    out += value;
                    i = close + 1;
                    matched = true;
                    break;
                }
            }
            if (matched) continue;
        }
        out += tmpl[i++];
    }
    return out;
}

}  // namespace

std::string no_cot_system_prompt() { return load_fixture("system_no_cot.txt"); }
std::string cot_system_prompt() { return load_fixture("system_cot.txt"); }
std::string grading_template() { return load_fixture("grading_template.txt"); }
std::string grading_instructions() { return load_fixture("grading_instructions.txt"); }

std::string render_grading_prompt(const std::string& question, const std::string& expert_answer,
                                  const std::string& submission) {
    return render_slots(grading_template(), {{"question", question},
                                             {"criterion", expert_answer},
                                             {"answer", submission},
                                             {"instructions", grading_instructions()}});
}

// ---------------------------------------------------------------------------
// Judging

std::optional<bool> parse_judge_verdict(const std::string& judge_output) {
    const std::string low = util::to_lower(judge_output);
    static const std::string marker = "grade:";
    std::size_t pos = low.rfind(marker);
    while (pos != std::string::npos) {
        std::size_t i = pos + marker.size();
        while (i < low.size() && (low[i] == ' ' || low[i] == '\t')) ++i;
        if (i < low.size()) {
            if (low[i] == 'c') return true;
            if (low[i] == 'i') return false;
        }
        if (pos == 0) break;
        pos = low.rfind(marker, pos - 1);
    }
    return std::nullopt;
}

std::string to_string(JudgeVerdict v) {
    switch (v) {
        case JudgeVerdict::correct: return "correct";
        case JudgeVerdict::incorrect: return "incorrect";
        case JudgeVerdict::ungraded: return "ungraded";
    }
    throw std::logic_error("unknown judge verdict");
}

JudgeResult judge_grade(const std::string& question, const std::string& expert_answer,
                        const std::string& submission, model::ModelAdapter& judge,
                        int judge_max_tokens, std::uint64_t seed) {
    JudgeResult result;
    const auto submitted = eval::normalized_words(submission);
    if (submitted.empty()) {
        result.verdict = JudgeVerdict::incorrect;
        return result;
    }
    if (submitted == eval::normalized_words(expert_answer)) {
        result.verdict = JudgeVerdict::correct;
        result.exact_match = true;
        return result;
    }
    const std::string prompt = render_grading_prompt(question, expert_answer, submission);
    const std::vector<model::ChatMessage> messages{{"user", prompt}};
    for (int attempt = 0; attempt < 2; ++attempt) {
        model::GenerateOptions opts;
        opts.max_tokens = judge_max_tokens;
        opts.temperature = 0.0;
        opts.seed = seed + (std::uint64_t)attempt;
        result.judge_output = judge.chat(messages, opts);
        ++result.judge_calls;
        if (const auto verdict = parse_judge_verdict(result.judge_output)) {
            result.verdict = *verdict ? JudgeVerdict::correct : JudgeVerdict::incorrect;
            return result;
        }
    }
    result.verdict = JudgeVerdict::ungraded;
    return result;
}

// ---------------------------------------------------------------------------
// Config

void RealWorldConfig::validate() const {
    if (n < 1) throw std::invalid_argument("sample count must be positive");
    if (temperature != 0.0)
        throw std::invalid_argument("real-world eval temperature is fixed at 0");
    if (max_parallel < 1) throw std::invalid_argument("max_parallel must be at least 1");
    if (answer_max_tokens < 1 || cot_max_tokens < 1 || judge_max_tokens < 1)
        throw std::invalid_argument("token budgets must be positive");
}

json RealWorldConfig::to_json() const {
    return json{{"n", n},
                {"temperature", temperature},
                {"seed", seed},
                {"max_parallel", max_parallel},
                {"answer_max_tokens", answer_max_tokens},
                {"cot_max_tokens", cot_max_tokens},
                {"judge_max_tokens", judge_max_tokens}};
}

RealWorldConfig RealWorldConfig::from_json(const json& j) {
    RealWorldConfig cfg;
    cfg.n = j.value("n", cfg.n);
    cfg.temperature = j.value("temperature", cfg.temperature);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.max_parallel = j.value("max_parallel", cfg.max_parallel);
    cfg.answer_max_tokens = j.value("answer_max_tokens", cfg.answer_max_tokens);
    cfg.cot_max_tokens = j.value("cot_max_tokens", cfg.cot_max_tokens);
    cfg.judge_max_tokens = j.value("judge_max_tokens", cfg.judge_max_tokens);
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// Probing and the main run

namespace {

std::string ask(model::ModelAdapter& adapter, const std::string& system_prompt,
                const std::string& question, int max_tokens, double temperature,
                std::uint64_t seed) {
    const std::vector<model::ChatMessage> messages{{"system", system_prompt},
                                                   {"user", question}};
    model::GenerateOptions opts;
    opts.max_tokens = max_tokens;
    opts.temperature = temperature;
    opts.seed = seed;
    return adapter.chat(messages, opts);
}

struct ProbeDetail {
    bool excluded = false;
    int judge_calls = 0;
    int exact_match = 0;
};

// Asks one partial question and grades it against e3; throws when the judge
// cannot produce a verdict, which callers surface as "unevaluated".
bool partial_correct(model::ModelAdapter& adapter, const std::string& question,
                     const std::string& gold, model::ModelAdapter& judge,
                     const RealWorldConfig& cfg, const std::string& system_prompt,
                     std::uint64_t ask_seed, std::uint64_t judge_seed, ProbeDetail& detail) {
    const std::string answer =
        ask(adapter, system_prompt, question, cfg.answer_max_tokens, cfg.temperature, ask_seed);
    const JudgeResult graded =
        judge_grade(question, gold, answer, judge, cfg.judge_max_tokens, judge_seed);
    detail.judge_calls += graded.judge_calls;
    detail.exact_match += graded.exact_match ? 1 : 0;
    if (graded.verdict == JudgeVerdict::ungraded)
        throw std::runtime_error("judge verdict unparseable for a partial question");
    return graded.verdict == JudgeVerdict::correct;
}

ProbeDetail probe_detail(model::ModelAdapter& adapter, const RealWorldSample& sample,
                         model::ModelAdapter& judge, const RealWorldConfig& cfg,
                         const std::string& system_prompt, std::uint64_t seed) {
    ProbeDetail detail;
    detail.excluded = partial_correct(adapter, sample.partial_omit_e1_question, sample.e3, judge,
                                      cfg, system_prompt, seed + 2, seed + 10, detail) ||
                      partial_correct(adapter, sample.partial_omit_r1_question, sample.e3, judge,
                                      cfg, system_prompt, seed + 3, seed + 11, detail);
    return detail;
}

struct Outcome {
    enum class Status {
        unevaluated,
        failed_first_hop,
        failed_second_hop,
        excluded,
        conditioned,
    };
    Status status = Status::unevaluated;
    std::string failure;  // why the sample stayed unevaluated
    bool budget = false;
    eval::SampleRecord no_cot;
    eval::SampleRecord cot;
    int judge_calls = 0;
    int exact_match = 0;
    int ungraded = 0;
};

void finish_report(eval::EvalReport& report, const std::string& mode, const std::string& adapter,
                   double chance) {
    report.setting = "realworld";
    report.adapter = adapter;
    report.mode = mode;
    report.constrained_used = false;
    report.containment_only = false;
    report.has_loss = false;
    report.chance = chance;
    int correct = 0, leaks = 0, errors = 0;
    for (const auto& r : report.samples) {
        if (r.error) {
            ++errors;
            continue;
        }
        correct += r.correct ? 1 : 0;
        leaks += r.leak ? 1 : 0;
    }
    report.errors = errors;
    const int scored = (int)report.samples.size() - errors;
    report.accuracy = scored > 0 ? (double)correct / scored : 0.0;
    report.leak_rate = scored > 0 ? (double)leaks / scored : 0.0;
}

}  // namespace

bool shortcut_probe(model::ModelAdapter& adapter, const RealWorldSample& sample,
                    model::ModelAdapter& judge, const RealWorldConfig& cfg) {
    cfg.validate();
    return probe_detail(adapter, sample, judge, cfg, no_cot_system_prompt(), cfg.seed).excluded;
}

RealWorldReport run_real_world_eval(model::ModelAdapter& adapter,
                                    const std::vector<RealWorldSample>& dataset,
                                    const RealWorldConfig& cfg) {
    cfg.validate();
    if (cfg.judge == nullptr)
        throw std::invalid_argument("real-world eval needs a judge adapter");
    if (!adapter.can_suppress_cot())
        throw model::CapabilityError(adapter.name() +
                                     ": cannot suppress chain-of-thought, which the "
                                     "no-CoT pass requires");
    if ((std::size_t)cfg.n > dataset.size())
        throw std::invalid_argument("sample count " + std::to_string(cfg.n) +
                                    " exceeds dataset size " + std::to_string(dataset.size()));
    model::ModelAdapter& judge = *cfg.judge;

    // Cache statistics are reported as deltas over this run.
    const auto* cache_adapter = dynamic_cast<const CachingAdapter*>(&adapter);
    const auto* cache_judge = dynamic_cast<const CachingAdapter*>(cfg.judge);
    if (cache_judge == cache_adapter) cache_judge = nullptr;  // one wrapper, count it once
    const long long hits_before =
        (cache_adapter ? cache_adapter->hits() : 0) + (cache_judge ? cache_judge->hits() : 0);
    const long long misses_before =
        (cache_adapter ? cache_adapter->misses() : 0) + (cache_judge ? cache_judge->misses() : 0);

    std::vector<std::size_t> indices(dataset.size());
    std::iota(indices.begin(), indices.end(), (std::size_t)0);
    std::mt19937_64 rng(cfg.seed);
    util::seeded_shuffle(indices, rng);
    indices.resize((std::size_t)cfg.n);

    const std::string sys_no_cot = no_cot_system_prompt();
    const std::string sys_cot = cot_system_prompt();

    std::vector<Outcome> outcomes((std::size_t)cfg.n);

    auto two_hop_record = [&](const RealWorldSample& s, std::size_t dataset_index,
                              const std::string& kind) {
        eval::SampleRecord r;
        r.triplet_id = std::to_string(dataset_index);
        r.question = s.two_hop_question;
        r.gold = s.e3;
        r.bridge = s.e2;
        r.groups = {{"kind", kind},         {"split", "realworld"},
                    {"category", s.category}, {"e1_type", s.e1_type},
                    {"e2_type", s.e2_type}, {"e3_type", s.e3_type}};
        return r;
    };

    auto evaluate_sample = [&](std::size_t slot) {
        const std::size_t dataset_index = indices[slot];
        const RealWorldSample& s = dataset[dataset_index];
        Outcome& out = outcomes[slot];
        // Seeds are spaced per dataset row so every call in a sample's
        // pipeline draws from a distinct, stable stream.
        const std::uint64_t seed = cfg.seed + 16u * (std::uint64_t)dataset_index;

        auto graded = [&](const std::string& question, const std::string& gold,
                          const std::string& answer, std::uint64_t judge_seed) {
            const JudgeResult g =
                judge_grade(question, gold, answer, judge, cfg.judge_max_tokens, judge_seed);
            out.judge_calls += g.judge_calls;
            out.exact_match += g.exact_match ? 1 : 0;
            return g.verdict;
        };

        try {
            // Knowledge conditioning: both one-hop questions come first.
            const std::string first = ask(adapter, sys_no_cot, s.one_hop_first_question,
                                          cfg.answer_max_tokens, cfg.temperature, seed);
            const JudgeVerdict v1 = graded(s.one_hop_first_question, s.e2, first, seed + 8);
            if (v1 == JudgeVerdict::ungraded)
                throw std::runtime_error("judge verdict unparseable for a one-hop answer");
            if (v1 == JudgeVerdict::incorrect) {
                out.status = Outcome::Status::failed_first_hop;
                return;
            }
            const std::string second = ask(adapter, sys_no_cot, s.one_hop_second_question,
                                           cfg.answer_max_tokens, cfg.temperature, seed + 1);
            const JudgeVerdict v2 = graded(s.one_hop_second_question, s.e3, second, seed + 9);
            if (v2 == JudgeVerdict::ungraded)
                throw std::runtime_error("judge verdict unparseable for a one-hop answer");
            if (v2 == JudgeVerdict::incorrect) {
                out.status = Outcome::Status::failed_second_hop;
                return;
            }

            const ProbeDetail probe = probe_detail(adapter, s, judge, cfg, sys_no_cot, seed);
            out.judge_calls += probe.judge_calls;
            out.exact_match += probe.exact_match;
            if (probe.excluded) {
                out.status = Outcome::Status::excluded;
                return;
            }
            out.status = Outcome::Status::conditioned;
        } catch (const BudgetExhaustedError& e) {
            out.failure = e.what();
            out.budget = true;
            return;
        } catch (const std::exception& e) {
            out.failure = e.what();
            return;
        }

        // Two-hop scoring; a failure here stays inside this mode's record.
        auto score_mode = [&](eval::SampleRecord& r, const std::string& system_prompt,
                              int max_tokens, bool detect_leak, std::uint64_t ask_seed,
                              std::uint64_t judge_seed) {
            try {
                r.response = ask(adapter, system_prompt, s.two_hop_question, max_tokens,
                                 cfg.temperature, ask_seed);
                const JudgeVerdict v = graded(s.two_hop_question, s.e3, r.response, judge_seed);
                if (v == JudgeVerdict::ungraded) {
                    r.error = true;
                    r.verdict = "error";
                    ++out.ungraded;
                    return;
                }
                r.correct = v == JudgeVerdict::correct;
                // The judge decides correctness; containment of the bridge
                // refines an incorrect no-CoT answer into a leak.
                r.leak = detect_leak && !r.correct && eval::contains_word(r.response, s.e2);
                r.verdict = r.correct ? "correct" : (r.leak ? "leak" : "wrong");
            } catch (const BudgetExhaustedError& e) {
                out.budget = true;
                r.error = true;
                r.verdict = "error";
                r.response = std::string("[adapter error] ") + e.what();
            } catch (const std::exception& e) {
                r.error = true;
                r.verdict = "error";
                r.response = std::string("[adapter error] ") + e.what();
            }
        };
        out.no_cot = two_hop_record(s, dataset_index, "two_hop_no_cot");
        score_mode(out.no_cot, sys_no_cot, cfg.answer_max_tokens, /*detect_leak=*/true, seed + 4,
                   seed + 12);
        out.cot = two_hop_record(s, dataset_index, "two_hop_cot");
        score_mode(out.cot, sys_cot, cfg.cot_max_tokens, /*detect_leak=*/false, seed + 5,
                   seed + 13);
    };

    auto evaluate_slot = [&](std::size_t slot) {
        try {
            evaluate_sample(slot);
        } catch (const std::exception& e) {
            // Safety net: anything escaping the per-phase handlers leaves the
            // sample unevaluated rather than killing the run.
            outcomes[slot].status = Outcome::Status::unevaluated;
            outcomes[slot].failure = e.what();
        }
    };

    int workers = std::max(1, std::min<int>(cfg.max_parallel, cfg.n));
    if (workers > 1 && (!adapter.thread_safe() || !judge.thread_safe())) workers = 1;
    if (workers == 1) {
        for (std::size_t slot = 0; slot < outcomes.size(); ++slot) evaluate_slot(slot);
    } else {
        std::atomic<std::size_t> next{0};
        auto drain = [&] {
            for (std::size_t slot = next.fetch_add(1); slot < outcomes.size();
                 slot = next.fetch_add(1))
                evaluate_slot(slot);
        };
        std::vector<std::thread> pool;
        for (int w = 1; w < workers; ++w) pool.emplace_back(drain);
        drain();
        for (auto& t : pool) t.join();
    }

    // Single-threaded aggregation.
    RealWorldReport report;
    report.stats.dataset_size = (int)dataset.size();
    report.stats.sampled = cfg.n;
    std::set<std::string> golds;
    for (const auto& out : outcomes) {
        report.stats.judge_calls += out.judge_calls;
        report.stats.exact_match_grades += out.exact_match;
        report.stats.ungraded += out.ungraded;
        if (out.budget) report.stats.budget_exhausted = true;
        switch (out.status) {
            case Outcome::Status::unevaluated: ++report.stats.unevaluated; break;
            case Outcome::Status::failed_first_hop: ++report.stats.failed_first_hop; break;
            case Outcome::Status::failed_second_hop: ++report.stats.failed_second_hop; break;
            case Outcome::Status::excluded: ++report.stats.shortcut_excluded; break;
            case Outcome::Status::conditioned:
                ++report.stats.conditioned;
                golds.insert(out.no_cot.gold);
                report.no_cot.samples.push_back(out.no_cot);
                report.cot.samples.push_back(out.cot);
                break;
        }
    }
    const double chance = golds.empty() ? 0.0 : 1.0 / (double)golds.size();
    finish_report(report.no_cot, "no_cot", adapter.name(), chance);
    finish_report(report.cot, "cot", adapter.name(), chance);

    const long long hits_after =
        (cache_adapter ? cache_adapter->hits() : 0) + (cache_judge ? cache_judge->hits() : 0);
    const long long misses_after =
        (cache_adapter ? cache_adapter->misses() : 0) + (cache_judge ? cache_judge->misses() : 0);
    report.stats.cache_hits = hits_after - hits_before;
    report.stats.cache_misses = misses_after - misses_before;

    assert_denominator_discipline(report);
    return report;
}

// ---------------------------------------------------------------------------
// Reports

json RealWorldStats::to_json() const {
    return json{{"dataset_size", dataset_size},
                {"sampled", sampled},
                {"unevaluated", unevaluated},
                {"failed_first_hop", failed_first_hop},
                {"failed_second_hop", failed_second_hop},
                {"shortcut_excluded", shortcut_excluded},
                {"conditioned", conditioned},
                {"judge_calls", judge_calls},
                {"exact_match_grades", exact_match_grades},
                {"ungraded", ungraded},
                {"cache_hits", cache_hits},
                {"cache_misses", cache_misses},
                {"budget_exhausted", budget_exhausted}};
}

RealWorldStats RealWorldStats::from_json(const json& j) {
    RealWorldStats s;
    s.dataset_size = j.at("dataset_size").get<int>();
    s.sampled = j.at("sampled").get<int>();
    s.unevaluated = j.at("unevaluated").get<int>();
    s.failed_first_hop = j.at("failed_first_hop").get<int>();
    s.failed_second_hop = j.at("failed_second_hop").get<int>();
    s.shortcut_excluded = j.at("shortcut_excluded").get<int>();
    s.conditioned = j.at("conditioned").get<int>();
    s.judge_calls = j.at("judge_calls").get<int>();
    s.exact_match_grades = j.at("exact_match_grades").get<int>();
    s.ungraded = j.at("ungraded").get<int>();
    s.cache_hits = j.at("cache_hits").get<long long>();
    s.cache_misses = j.at("cache_misses").get<long long>();
    s.budget_exhausted = j.at("budget_exhausted").get<bool>();
    return s;
}

json RealWorldReport::to_json() const {
    return json{{"no_cot", no_cot.to_json()}, {"cot", cot.to_json()}, {"stats", stats.to_json()}};
}

RealWorldReport RealWorldReport::from_json(const json& j) {
    RealWorldReport r;
    r.no_cot = eval::EvalReport::from_json(j.at("no_cot"));
    r.cot = eval::EvalReport::from_json(j.at("cot"));
    r.stats = RealWorldStats::from_json(j.at("stats"));
    return r;
}

void assert_denominator_discipline(const RealWorldReport& report) {
    const auto& s = report.stats;
    if ((int)report.no_cot.samples.size() != s.conditioned ||
        (int)report.cot.samples.size() != s.conditioned)
        throw std::logic_error(
            "two-hop records (" + std::to_string(report.no_cot.samples.size()) + " no-CoT, " +
            std::to_string(report.cot.samples.size()) + " CoT) do not match the conditioned " +
            "sample count (" + std::to_string(s.conditioned) + ")");
    const int total = s.unevaluated + s.failed_first_hop + s.failed_second_hop +
                      s.shortcut_excluded + s.conditioned;
    if (total != s.sampled)
        throw std::logic_error("filtering counts add up to " + std::to_string(total) +
                               " but " + std::to_string(s.sampled) + " samples were drawn");
    for (const eval::EvalReport* r : {&report.no_cot, &report.cot}) {
        int errors = 0;
        for (const auto& sample : r->samples) errors += sample.error ? 1 : 0;
        if (errors != r->errors)
            throw std::logic_error(r->mode + " report declares " + std::to_string(r->errors) +
                                   " errors but carries " + std::to_string(errors));
    }
}

void save_real_world_report(const RealWorldReport& report, const fs::path& base) {
    fs::path json_path = base;
    json_path += ".json";
    util::write_json_file(json_path, report.to_json());
    fs::path no_cot_base = base;
    no_cot_base += "_no_cot";
    eval::save_report(report.no_cot, no_cot_base);
    fs::path cot_base = base;
    cot_base += "_cot";
    eval::save_report(report.cot, cot_base);
}

RealWorldReport load_real_world_report(const fs::path& json_path) {
    return RealWorldReport::from_json(util::read_json_file(json_path));
}

}  // namespace twohop::realworld
