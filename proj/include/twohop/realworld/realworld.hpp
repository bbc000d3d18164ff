#pragma once

// Real-world two-hop evaluation over an external fact dataset. A sample asks
// for e3 through a bridge entity e2 ("What is the country of citizenship of
// the director of Titanic?"). The harness first checks the model knows both
// underlying facts via one-hop questions, drops samples the model can answer
// through shortcuts (partial questions that omit e1 or r1), and only then
// scores the two-hop question with and without chain-of-thought, using a
// model judge driven by a byte-pinned grading prompt.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "twohop/eval/report.hpp"
#include "twohop/model/adapter.hpp"

namespace twohop::realworld {

using json = nlohmann::json;

// One dataset row. The JSONL schema is one object per line with these string
// fields, all required:
//   e1                        source entity ("Titanic")
//   r1                        first relation ("director")
//   e2                        bridge entity; gold answer of the first one-hop
//   r2                        second relation ("country of citizenship")
//   e3                        final gold answer
//   two_hop_question          composed question targeting e3 through e2
//   one_hop_first_question    asks for e2 given e1 and r1
//   one_hop_second_question   asks for e3 given e2 and r2
//   partial_omit_e1_question  two-hop question with e1 dropped
//   partial_omit_r1_question  two-hop question with r1 dropped
//   category                  question-type label for grouping
//   e1_type, e2_type, e3_type entity-type labels (may be empty strings)
struct RealWorldSample {
    std::string e1, r1, e2, r2, e3;
    std::string two_hop_question;
    std::string one_hop_first_question;
    std::string one_hop_second_question;
    std::string partial_omit_e1_question;
    std::string partial_omit_r1_question;
    std::string category;
    std::string e1_type, e2_type, e3_type;

    // Throws std::invalid_argument naming the offending field.
    void validate() const;
    json to_json() const;
    static RealWorldSample from_json(const json& j);
};

// Parses the file described above. Blank lines are skipped. Any violation
// (unparseable JSON, missing field, wrong type, empty required value) raises
// std::runtime_error naming the file, line, and field. An empty file yields
// an empty list.
std::vector<RealWorldSample> load_two_hop_dataset(const std::filesystem::path& path);

// Pinned prompt fixtures, loaded from data/realworld/. Each file's single
// trailing newline is stripped; the bytes are otherwise untouched.
std::string no_cot_system_prompt();    // also used for one-hop and partial questions
std::string cot_system_prompt();
std::string grading_template();        // judge prompt with {question}/{criterion}/{answer}/{instructions} slots
std::string grading_instructions();    // verdict-format text for the {instructions} slot

// Fills the grading template. Each {slot} is substituted exactly once in a
// single left-to-right pass, so slot-like text inside the inputs survives
// verbatim. Byte-stable for fixed inputs.
std::string render_grading_prompt(const std::string& question, const std::string& expert_answer,
                                  const std::string& submission);

// Extracts the verdict from a judge response: the last "GRADE:" marker
// (case-insensitive) followed by C (true) or I (false). Returns nullopt when
// no such marker parses.
std::optional<bool> parse_judge_verdict(const std::string& judge_output);

enum class JudgeVerdict { correct, incorrect, ungraded };
std::string to_string(JudgeVerdict v);

struct JudgeResult {
    JudgeVerdict verdict = JudgeVerdict::ungraded;
    bool exact_match = false;        // decided by normalized string equality, no judge call
    int judge_calls = 0;             // endpoint calls actually made (0, 1, or 2)
    std::string judge_output;        // last raw judge response (empty when exact_match)
};

// Grades a submission against the expert answer. An empty submission is
// incorrect without calling the judge. A normalized exact match (lowercased
// alphanumeric words) is correct without calling the judge and is flagged via
// exact_match. Otherwise the judge sees the rendered grading prompt; an
// unparseable response is retried once, then the result is ungraded.
// When the judge is invoked its verdict stands, even if containment signals
// disagree; both signals are preserved in the sample records.
JudgeResult judge_grade(const std::string& question, const std::string& expert_answer,
                        const std::string& submission, model::ModelAdapter& judge,
                        int judge_max_tokens = 256, std::uint64_t seed = 0);

struct RealWorldConfig {
    int n = 1500;                    // samples drawn from the dataset; must not exceed its size
    double temperature = 0.0;        // pinned; validate() rejects anything else
    std::uint64_t seed = 0;
    int max_parallel = 1;            // worker threads; >1 needs thread-safe adapter and judge
    int answer_max_tokens = 48;      // one-hop, partial, and no-CoT answers
    int cot_max_tokens = 256;
    int judge_max_tokens = 256;
    model::ModelAdapter* judge = nullptr;  // required by run_real_world_eval; not serialized

    void validate() const;           // throws std::invalid_argument
    json to_json() const;            // scalar fields only
    static RealWorldConfig from_json(const json& j);
};

// Asks both partial questions under the no-CoT system prompt and grades them
// against e3. Returns true (excluded) iff the model answers either partial
// correctly, i.e. it can reach e3 without composing both hops. Throws on
// endpoint failure or an ungraded judge verdict; callers treat the sample as
// unevaluated. Deterministic stubs at temperature 0 make this idempotent.
bool shortcut_probe(model::ModelAdapter& adapter, const RealWorldSample& sample,
                    model::ModelAdapter& judge, const RealWorldConfig& cfg = {});

struct RealWorldStats {
    int dataset_size = 0;
    int sampled = 0;
    int unevaluated = 0;        // endpoint failures or ungraded verdicts while conditioning
    int failed_first_hop = 0;
    int failed_second_hop = 0;  // first hop passed, second failed
    int shortcut_excluded = 0;
    int conditioned = 0;        // passed both one-hop checks and the shortcut filter
    int judge_calls = 0;
    int exact_match_grades = 0;
    int ungraded = 0;           // ungraded two-hop verdicts (recorded as errors)
    long long cache_hits = 0;   // filled when the adapters are caching wrappers
    long long cache_misses = 0;
    bool budget_exhausted = false;

    json to_json() const;
    static RealWorldStats from_json(const json& j);
};

// Two eval-module reports (one per prompting mode) over the identical
// conditioned sample set, plus the filtering counts that produced it.
struct RealWorldReport {
    eval::EvalReport no_cot;
    eval::EvalReport cot;
    RealWorldStats stats;

    json to_json() const;
    static RealWorldReport from_json(const json& j);
};

// Throws std::logic_error unless both per-mode reports cover exactly the
// conditioned samples and the filtering counts add back up to the sample
// count. Run automatically at the end of every eval.
void assert_denominator_discipline(const RealWorldReport& report);

// Draws cfg.n samples with cfg.seed, evaluates both one-hop questions first,
// applies shortcut_probe, then scores the two-hop question without and with
// chain-of-thought over the surviving samples. Per-sample endpoint failures
// during conditioning mark the sample unevaluated; failures while answering
// a two-hop question become error records in that mode's report. Group keys
// on every record: kind, split, category, e1_type, e2_type, e3_type.
// Requires adapter.can_suppress_cot(); judges with cfg.judge.
RealWorldReport run_real_world_eval(model::ModelAdapter& adapter,
                                    const std::vector<RealWorldSample>& dataset,
                                    const RealWorldConfig& cfg);

// Writes base.json (the full report) plus the two embedded reports in the
// eval module's formats: base_no_cot.json/.csv and base_cot.json/.csv.
void save_real_world_report(const RealWorldReport& report, const std::filesystem::path& base);
RealWorldReport load_real_world_report(const std::filesystem::path& json_path);

}  // namespace twohop::realworld
