#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace twohop::eval {

struct SampleRecord {
    std::string triplet_id;
    std::string question;
    std::string response;
    std::string verdict;  // correct | leak | wrong | error
    bool correct = false;
    bool leak = false;
    bool error = false;
    std::string gold;
    std::string bridge;
    // Aggregation keys: kind/split/template always, callers may add more
    // (category, e2_type, e3_type, question_signature).
    std::map<std::string, std::string> groups;

    // Per-sample loss sums, present once a loss baseline is attached.
    bool has_loss = false;
    double loss_correct_sum = 0, loss_shuffled_sum = 0;
    long long tokens_correct = 0, tokens_shuffled = 0;

    nlohmann::json to_json() const;
    static SampleRecord from_json(const nlohmann::json& j);
};

struct EvalReport {
    std::string setting;
    std::string adapter;
    std::string mode;
    bool constrained_used = false;
    // Set for adapters without logits: grading falls back to containment.
    bool containment_only = false;
    int errors = 0;
    double accuracy = 0;   // correct / (samples - errors)
    double leak_rate = 0;  // leaks / (samples - errors)
    double chance = 0;
    bool has_loss = false;
    double loss_correct = 0, loss_shuffled = 0;
    std::vector<SampleRecord> samples;

    nlohmann::json to_json() const;
    static EvalReport from_json(const nlohmann::json& j);
};

struct GroupStat {
    int count = 0;  // non-error samples
    int correct = 0;
    int leaks = 0;
    double accuracy = 0;
    bool has_loss = false;
    double loss_correct = 0, loss_shuffled = 0;
    double loss_advantage = 0;  // shuffled minus correct
};

struct GroupedReport {
    std::string key;
    std::map<std::string, GroupStat> groups;

    nlohmann::json to_json() const;
};

// Per-group accuracy, leak rate, and loss advantage. Throws when a sample
// lacks the requested key.
GroupedReport aggregate(const EvalReport& report, const std::string& group_by);

// base.json (full report) and base.csv (flat per-sample table).
void save_report(const EvalReport& report, const std::filesystem::path& base);
EvalReport load_report(const std::filesystem::path& json_path);

}  // namespace twohop::eval
