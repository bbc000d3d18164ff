#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "twohop/mixtures/mixtures.hpp"
#include "twohop/model/toy_adapter.hpp"
#include "twohop/train/losses.hpp"
#include "twohop/train/optimizer.hpp"

namespace twohop::train {

struct TrainConfig {
    AdamWConfig opt;
    int batch_size = 16;  // examples per optimizer step
    int epochs = 1;
    std::uint64_t seed = 0;
    int log_every = 50;  // optimizer steps between loss records
    AuxLossSpec aux;

    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

// One freezing stage: which examples train and which blocks may move.
struct StageSpec {
    std::string selector;  // first_hop | second_hop | two_hop | all
    int lo = 0;
    int hi = 0;
    int epochs = 1;
};

// Hop-specific stages at depth fractions 3/8 and 6/8, then everything, twice.
std::vector<StageSpec> default_staged_schedule(int n_blocks, int epochs_per_stage = 1);

// Examples whose kind matches a stage selector, in set order.
std::vector<corpus::ChatExample> select_examples(const std::vector<corpus::ChatExample>& all,
                                                 const std::string& selector);

struct MetricRecord {
    std::int64_t step = 0;
    std::string split;
    std::string metric;
    double value = 0;
};

void write_metrics_jsonl(const std::vector<MetricRecord>& records,
                         const std::filesystem::path& path);

// Drives optimization over a fixed model/optimizer pair. Stages share the
// optimizer state and the global step/epoch counters, so a single all-block
// stage is byte-identical to an unstaged run of the same length.
class Trainer {
public:
    Trainer(model::ToyAdapter& adapter, const TrainConfig& cfg);

    // Declares the total number of optimizer steps the schedule will take;
    // the linear decay runs against this horizon.
    void plan_total_steps(std::int64_t total);
    static std::int64_t planned_steps(std::size_t n_examples, int batch_size, int epochs);

    // One stage: `epochs` passes over `examples` with blocks [lo, hi) live.
    void run_stage(const std::vector<corpus::ChatExample>& examples, int epochs, int lo, int hi);

    const std::vector<MetricRecord>& metrics() const { return metrics_; }
    std::int64_t step() const { return step_; }

    // Called after each logging interval; lets callers append eval metrics.
    std::function<void(std::int64_t step, std::vector<MetricRecord>&)> on_log;

private:
    struct Prepared {
        model::RenderedChat r;
        bool aux = false;
        int bridge_pos = -1;
        int bridge_target = -1;
    };
    void train_batch(const std::vector<Prepared>& prep, const std::vector<int>& order,
                     std::size_t begin, std::size_t end, const FreezeMask& mask);
    void maybe_log(double lr);

    model::ToyAdapter& adapter_;
    TrainConfig cfg_;
    AdamW opt_;
    model::ToyTensorsT<float> grads_;
    model::ToyCacheT<float> cache_;
    std::int64_t step_ = 0;
    std::int64_t epoch_ = 0;
    std::int64_t total_steps_ = 0;
    double lm_since_log_ = 0, aux_since_log_ = 0;
    std::int64_t batches_since_log_ = 0;
    std::vector<MetricRecord> metrics_;
};

// Uniform-rate training over the whole set.
void run_training(model::ToyAdapter& adapter, const mixtures::ExampleSet& set,
                  const TrainConfig& cfg, std::vector<MetricRecord>* metrics_out = nullptr);

// Sequential stages over kind-filtered subsets of the same set.
void run_staged_training(model::ToyAdapter& adapter, const mixtures::ExampleSet& set,
                         const TrainConfig& cfg, const std::vector<StageSpec>& schedule,
                         std::vector<MetricRecord>* metrics_out = nullptr);

}  // namespace twohop::train
