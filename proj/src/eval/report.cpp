#include "twohop/eval/report.hpp"

#include <fstream>
#include <stdexcept>

#include "twohop/util/jsonl.hpp"

namespace twohop::eval {

using nlohmann::json;

json SampleRecord::to_json() const {
    json j{{"triplet_id", triplet_id}, {"question", question}, {"response", response},
           {"verdict", verdict},       {"correct", correct},   {"leak", leak},
           {"error", error},           {"gold", gold},         {"bridge", bridge},
           {"groups", groups}};
    if (has_loss) {
        j["loss_correct_sum"] = loss_correct_sum;
        j["loss_shuffled_sum"] = loss_shuffled_sum;
        j["tokens_correct"] = tokens_correct;
        j["tokens_shuffled"] = tokens_shuffled;
    }
    return j;
}

SampleRecord SampleRecord::from_json(const json& j) {
    SampleRecord r;
    r.triplet_id = j.at("triplet_id").get<std::string>();
    r.question = j.at("question").get<std::string>();
    r.response = j.at("response").get<std::string>();
    r.verdict = j.at("verdict").get<std::string>();
    r.correct = j.at("correct").get<bool>();
    r.leak = j.at("leak").get<bool>();
    r.error = j.at("error").get<bool>();
    r.gold = j.at("gold").get<std::string>();
    r.bridge = j.at("bridge").get<std::string>();
    r.groups = j.at("groups").get<std::map<std::string, std::string>>();
    if (j.contains("loss_correct_sum")) {
        r.has_loss = true;
        r.loss_correct_sum = j.at("loss_correct_sum").get<double>();
        r.loss_shuffled_sum = j.at("loss_shuffled_sum").get<double>();
        r.tokens_correct = j.at("tokens_correct").get<long long>();
        r.tokens_shuffled = j.at("tokens_shuffled").get<long long>();
    }
    return r;
}

json EvalReport::to_json() const {
    json rows = json::array();
    for (const auto& s : samples) rows.push_back(s.to_json());
    json j{{"setting", setting},
           {"adapter", adapter},
           {"mode", mode},
           {"constrained_used", constrained_used},
           {"containment_only", containment_only},
           {"errors", errors},
           {"accuracy", accuracy},
           {"leak_rate", leak_rate},
           {"chance", chance},
           {"samples", std::move(rows)}};
    if (has_loss) {
        j["loss_correct"] = loss_correct;
        j["loss_shuffled"] = loss_shuffled;
    }
    return j;
}

EvalReport EvalReport::from_json(const json& j) {
    EvalReport r;
    r.setting = j.at("setting").get<std::string>();
    r.adapter = j.at("adapter").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.constrained_used = j.at("constrained_used").get<bool>();
    r.containment_only = j.at("containment_only").get<bool>();
    r.errors = j.at("errors").get<int>();
    r.accuracy = j.at("accuracy").get<double>();
    r.leak_rate = j.at("leak_rate").get<double>();
    r.chance = j.at("chance").get<double>();
    if (j.contains("loss_correct")) {
        r.has_loss = true;
        r.loss_correct = j.at("loss_correct").get<double>();
        r.loss_shuffled = j.at("loss_shuffled").get<double>();
    }
    for (const auto& row : j.at("samples")) r.samples.push_back(SampleRecord::from_json(row));
    return r;
}

json GroupedReport::to_json() const {
    json out{{"key", key}, {"groups", json::object()}};
    for (const auto& [name, g] : groups) {
        json row{{"count", g.count},     {"correct", g.correct},  {"leaks", g.leaks},
                 {"accuracy", g.accuracy}};
        if (g.has_loss) {
            row["loss_correct"] = g.loss_correct;
            row["loss_shuffled"] = g.loss_shuffled;
            row["loss_advantage"] = g.loss_advantage;
        }
        out["groups"][name] = std::move(row);
    }
    return out;
}

GroupedReport aggregate(const EvalReport& report, const std::string& group_by) {
    GroupedReport out;
    out.key = group_by;
    struct Acc {
        GroupStat stat;
        double lc_sum = 0, ls_sum = 0;
        long long lc_tok = 0, ls_tok = 0;
    };
    std::map<std::string, Acc> accs;
    for (const auto& s : report.samples) {
        const auto it = s.groups.find(group_by);
        if (it == s.groups.end())
            throw std::runtime_error("unknown group key: " + group_by);
        if (s.error) continue;
        Acc& a = accs[it->second];
        a.stat.count += 1;
        a.stat.correct += s.correct ? 1 : 0;
        a.stat.leaks += s.leak ? 1 : 0;
        if (s.has_loss) {
            a.lc_sum += s.loss_correct_sum;
            a.ls_sum += s.loss_shuffled_sum;
            a.lc_tok += s.tokens_correct;
            a.ls_tok += s.tokens_shuffled;
        }
    }
    for (auto& [name, a] : accs) {
        a.stat.accuracy = a.stat.count ? (double)a.stat.correct / a.stat.count : 0.0;
        if (a.lc_tok > 0 && a.ls_tok > 0) {
            a.stat.has_loss = true;
            a.stat.loss_correct = a.lc_sum / a.lc_tok;
            a.stat.loss_shuffled = a.ls_sum / a.ls_tok;
            a.stat.loss_advantage = a.stat.loss_shuffled - a.stat.loss_correct;
        }
        out.groups.emplace(name, a.stat);
    }
    return out;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

void save_report(const EvalReport& report, const std::filesystem::path& base) {
    util::ensure_parent_dir(base);
    auto json_path = base;
    json_path += ".json";
    util::write_json_file(json_path, report.to_json());

    auto csv_path = base;
    csv_path += ".csv";
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot open " + csv_path.string());
    out << "triplet_id,kind,split,verdict,correct,leak,error,gold,bridge,response\n";
    for (const auto& s : report.samples) {
        const auto group = [&](const char* key) {
            const auto it = s.groups.find(key);
            return it == s.groups.end() ? std::string() : it->second;
        };
        out << csv_field(s.triplet_id) << ',' << csv_field(group("kind")) << ','
            << csv_field(group("split")) << ',' << csv_field(s.verdict) << ','
            << (s.correct ? 1 : 0) << ',' << (s.leak ? 1 : 0) << ',' << (s.error ? 1 : 0) << ','
            << csv_field(s.gold) << ',' << csv_field(s.bridge) << ',' << csv_field(s.response)
            << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + csv_path.string());
}

EvalReport load_report(const std::filesystem::path& json_path) {
    return EvalReport::from_json(util::read_json_file(json_path));
}

}  // namespace twohop::eval
