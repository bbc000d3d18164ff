#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "twohop/eval/report.hpp"
#include "twohop/mixtures/mixtures.hpp"
#include "twohop/model/adapter.hpp"

namespace twohop::eval {

struct EvalConfig {
    enum class Mode { cot, no_cot };
    Mode mode = Mode::no_cot;
    // -1 follows whatever the eval set carries; >= 0 must match it.
    int few_shot_k = -1;
    double temperature = 0;  // fixed; validate() rejects anything else
    // Constrain sampling to the gold answer set when the adapter exposes
    // logits. CoT mode always generates freely.
    bool constrained = true;
    int max_tokens = 48;
    unsigned long long seed = 0;

    void validate() const;
    nlohmann::json to_json() const;
    static EvalConfig from_json(const nlohmann::json& j);
};

std::string to_string(EvalConfig::Mode mode);
EvalConfig::Mode mode_from_string(const std::string& s);

// Runs the adapter over every example and grades each response by the
// example's kind. Adapter failures become error records and leave the
// accuracy denominator. extra_groups, when given, runs parallel to
// set.examples and is merged into each record's aggregation keys.
EvalReport eval_accuracy(model::ModelAdapter& adapter, const mixtures::ExampleSet& set,
                         const EvalConfig& cfg,
                         const std::vector<std::map<std::string, std::string>>* extra_groups = nullptr);

// Mean cross-entropy per assistant token on the gold answers versus a seeded
// permutation of the answers across the set. Both means cover identical token
// counts. Returns {loss_correct, loss_shuffled}.
std::pair<double, double> loss_baseline(model::ModelAdapter& adapter,
                                        const mixtures::ExampleSet& set,
                                        unsigned long long seed);

// Same computation, recorded per sample into an existing report built from
// the same set (records must still be in set order).
std::pair<double, double> attach_loss_baseline(model::ModelAdapter& adapter,
                                               const mixtures::ExampleSet& set,
                                               unsigned long long seed, EvalReport& report);

// 1 / number of distinct gold answers in the set.
double chance_level(const mixtures::ExampleSet& set);

}  // namespace twohop::eval
