#include "twohop/train/trainer.hpp"

#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "twohop/kernels/kernels.hpp"
#include "twohop/model/chat.hpp"
#include "twohop/util/jsonl.hpp"
#include "twohop/util/rng.hpp"

namespace twohop::train {

nlohmann::json TrainConfig::to_json() const {
    return {{"lr", opt.lr},
            {"beta1", opt.beta1},
            {"beta2", opt.beta2},
            {"eps", opt.eps},
            {"weight_decay", opt.weight_decay},
            {"batch_size", batch_size},
            {"epochs", epochs},
            {"seed", seed},
            {"log_every", log_every},
            {"aux", aux.to_json()}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.opt.lr = j.at("lr").get<double>();
    c.opt.beta1 = j.value("beta1", 0.9);
    c.opt.beta2 = j.value("beta2", 0.999);
    c.opt.eps = j.value("eps", 1e-8);
    c.opt.weight_decay = j.value("weight_decay", 0.0);
    c.batch_size = j.at("batch_size").get<int>();
    c.epochs = j.at("epochs").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.log_every = j.value("log_every", 50);
    if (j.contains("aux")) c.aux = AuxLossSpec::from_json(j.at("aux"));
    if (c.opt.lr <= 0) throw std::runtime_error("learning rate must be positive");
    if (c.epochs < 1) throw std::runtime_error("epochs must be at least 1");
    if (c.batch_size < 1) throw std::runtime_error("batch size must be at least 1");
    return c;
}

std::vector<StageSpec> default_staged_schedule(int n_blocks, int epochs_per_stage) {
    const int third1 = (3 * n_blocks) / 8;
    const int third2 = (6 * n_blocks) / 8;
    std::vector<StageSpec> out;
    for (int rep = 0; rep < 2; ++rep) {
        out.push_back({"first_hop", 0, third1, epochs_per_stage});
        out.push_back({"second_hop", third1, third2, epochs_per_stage});
        out.push_back({"two_hop", 0, n_blocks, epochs_per_stage});
    }
    return out;
}

std::vector<corpus::ChatExample> select_examples(const std::vector<corpus::ChatExample>& all,
                                                 const std::string& selector) {
    std::vector<corpus::ChatExample> out;
    for (const auto& ex : all) {
        const bool take =
            selector == "all" || (selector == "first_hop" && ex.kind == corpus::QaKind::first_hop) ||
            (selector == "second_hop" && ex.kind == corpus::QaKind::second_hop) ||
            (selector == "two_hop" && (ex.kind == corpus::QaKind::two_hop_cot ||
                                       ex.kind == corpus::QaKind::two_hop_no_cot));
        if (take) out.push_back(ex);
    }
    if (selector != "all" && selector != "first_hop" && selector != "second_hop" &&
        selector != "two_hop")
        throw std::runtime_error("unknown stage selector: " + selector);
    if (out.empty()) throw std::runtime_error("stage selector matched no examples: " + selector);
    return out;
}

void write_metrics_jsonl(const std::vector<MetricRecord>& records,
                         const std::filesystem::path& path) {
    util::JsonlWriter w(path);
    for (const auto& r : records)
        w.write({{"step", r.step}, {"split", r.split}, {"metric", r.metric}, {"value", r.value}});
}

Trainer::Trainer(model::ToyAdapter& adapter, const TrainConfig& cfg)
    : adapter_(adapter),
      cfg_(cfg),
      opt_(cfg.opt, adapter.model().config()),
      grads_(model::ToyTensorsT<float>::shaped(adapter.model().config())) {
    if (cfg_.batch_size < 1) throw std::runtime_error("batch size must be at least 1");
    grads_.zero();
}

void Trainer::plan_total_steps(std::int64_t total) { total_steps_ = total; }

std::int64_t Trainer::planned_steps(std::size_t n_examples, int batch_size, int epochs) {
    return (std::int64_t)epochs *
           (std::int64_t)((n_examples + (std::size_t)batch_size - 1) / (std::size_t)batch_size);
}

void Trainer::run_stage(const std::vector<corpus::ChatExample>& examples, int epochs, int lo,
                        int hi) {
    if (examples.empty()) throw std::runtime_error("training stage has no examples");
    const auto& model = adapter_.model();
    const auto& tok = adapter_.tokenizer();
    const FreezeMask mask = FreezeMask::range(lo, hi, model.config().n_blocks);

    const bool use_aux = cfg_.aux.enabled() && cfg_.aux.resolved_coefficient() > 0;
    if (use_aux) cfg_.aux.resolved_block(model.config().n_blocks);

    std::vector<Prepared> prep;
    prep.reserve(examples.size());
    for (const auto& ex : examples) {
        Prepared p;
        p.r = model::render_chat(tok, ex, {}, true);
        if (use_aux && cfg_.aux.applies(ex.kind) && ex.bridge_char_span) {
            p.bridge_pos = model::bridge_position(tok, ex, {});
            if (ex.bridge.empty()) throw std::runtime_error("bridge span without bridge entity");
            p.bridge_target = tok.entity_id(ex.bridge);
            p.aux = true;
        }
        prep.push_back(std::move(p));
    }

    std::vector<int> order(prep.size());
    for (int e = 0; e < epochs; ++e) {
        // Each epoch's permutation is a pure function of (seed, global epoch),
        // so stage boundaries cannot change the data order.
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(cfg_.seed ^ (0x9e3779b97f4a7c15ULL * (std::uint64_t)(epoch_ + 1)));
        util::seeded_shuffle(order, rng);
        for (std::size_t b = 0; b < order.size(); b += (std::size_t)cfg_.batch_size) {
            const std::size_t end = std::min(order.size(), b + (std::size_t)cfg_.batch_size);
            train_batch(prep, order, b, end, mask);
        }
        ++epoch_;
    }
}

void Trainer::train_batch(const std::vector<Prepared>& prep, const std::vector<int>& order,
                          std::size_t begin, std::size_t end, const FreezeMask& mask) {
    auto& model = adapter_.model();
    const int V = model.config().vocab;
    const int d = model.config().width;
    const double c = cfg_.aux.resolved_coefficient();

    std::int64_t batch_tokens = 0;
    int batch_aux = 0;
    for (std::size_t i = begin; i < end; ++i) {
        const auto& p = prep[(std::size_t)order[i]];
        batch_tokens += p.r.answer_end - p.r.answer_begin;
        if (p.aux) ++batch_aux;
    }

    grads_.zero();
    double lm_sum = 0, aux_sum = 0;
    const float token_w = (float)(1.0 / (double)batch_tokens);
    model::LogitGradT<float> dl;
    std::vector<float> d_h((std::size_t)d);
    model::InjectionT<float> inj;

    for (std::size_t i = begin; i < end; ++i) {
        const auto& p = prep[(std::size_t)order[i]];
        model.forward(p.r.tokens, cache_);

        const int nr = p.r.answer_end - p.r.answer_begin;
        dl.rows.resize((std::size_t)nr);
        dl.d.resize((std::size_t)nr * (std::size_t)V);
        for (int k = 0; k < nr; ++k) {
            const int pos = p.r.answer_begin + k;
            const int target = p.r.tokens[(std::size_t)pos];
            const float* row = cache_.logits.data() + (std::size_t)(pos - 1) * V;
            float* drow = dl.d.data() + (std::size_t)k * V;
            std::memcpy(drow, row, sizeof(float) * (std::size_t)V);
            const float lse = kernels::softmax_inplace(drow, V);
            lm_sum += ((double)lse - (double)row[target]) / (double)batch_tokens;
            drow[target] -= 1.0f;
            kernels::scale(drow, token_w, V);
            dl.rows[(std::size_t)k] = pos - 1;
        }

        const model::InjectionT<float>* inj_ptr = nullptr;
        if (p.aux) {
            const int b = cfg_.aux.resolved_block(model.config().n_blocks);
            const float* h = model.hidden_at(cache_, b, p.bridge_pos);
            std::fill(d_h.begin(), d_h.end(), 0.0f);
            if (cfg_.aux.variant == AuxLossSpec::Variant::logit_lens) {
                const float w = (float)(c / (double)batch_aux);
                const float weighted =
                    model.lens_ce_backward(h, p.bridge_target, w, d_h.data(), grads_);
                aux_sum += (double)weighted / c;
            } else {
                const float w = (float)(-c / (double)batch_aux);
                const float cos =
                    model.embed_cos_backward(h, p.bridge_target, w, d_h.data(), grads_);
                aux_sum += -(double)cos / (double)batch_aux;
            }
            inj.block = b;
            inj.pos = p.bridge_pos;
            inj.d_hidden = d_h;
            inj_ptr = &inj;
        }
        model.backward(cache_, dl, inj_ptr, grads_);
    }

    if (!std::isfinite(lm_sum) || !std::isfinite(aux_sum))
        throw std::runtime_error("training diverged at step " + std::to_string(step_) +
                                 " (loss is not finite)");

    const double lr_scale =
        total_steps_ > 0 ? std::max(0.0, 1.0 - (double)step_ / (double)total_steps_) : 1.0;
    opt_.step(model.params(), grads_, mask, lr_scale);
    ++step_;

    lm_since_log_ += lm_sum;
    aux_since_log_ += aux_sum;
    ++batches_since_log_;
    if (cfg_.log_every > 0 && step_ % cfg_.log_every == 0) maybe_log(cfg_.opt.lr * lr_scale);
}

void Trainer::maybe_log(double lr) {
    const double lm = lm_since_log_ / (double)batches_since_log_;
    const double aux = aux_since_log_ / (double)batches_since_log_;
    const double c = cfg_.aux.resolved_coefficient();
    metrics_.push_back({step_, "train", "lm_loss", lm});
    metrics_.push_back({step_, "train", "aux_loss", aux});
    metrics_.push_back({step_, "train", "total_loss", lm + c * aux});
    metrics_.push_back({step_, "train", "lr", lr});
    lm_since_log_ = aux_since_log_ = 0;
    batches_since_log_ = 0;
    if (on_log) on_log(step_, metrics_);
}

void run_training(model::ToyAdapter& adapter, const mixtures::ExampleSet& set,
                  const TrainConfig& cfg, std::vector<MetricRecord>* metrics_out) {
    Trainer t(adapter, cfg);
    t.plan_total_steps(
        Trainer::planned_steps(set.examples.size(), cfg.batch_size, cfg.epochs));
    t.run_stage(set.examples, cfg.epochs, 0, adapter.model().config().n_blocks);
    if (metrics_out) *metrics_out = t.metrics();
}

void run_staged_training(model::ToyAdapter& adapter, const mixtures::ExampleSet& set,
                         const TrainConfig& cfg, const std::vector<StageSpec>& schedule,
                         std::vector<MetricRecord>* metrics_out) {
    if (schedule.empty()) throw std::runtime_error("empty stage schedule");
    Trainer t(adapter, cfg);
    std::int64_t total = 0;
    std::vector<std::vector<corpus::ChatExample>> selections;
    for (const auto& st : schedule) {
        selections.push_back(select_examples(set.examples, st.selector));
        total += Trainer::planned_steps(selections.back().size(), cfg.batch_size, st.epochs);
    }
    t.plan_total_steps(total);
    for (std::size_t i = 0; i < schedule.size(); ++i)
        t.run_stage(selections[i], schedule[i].epochs, schedule[i].lo, schedule[i].hi);
    if (metrics_out) *metrics_out = t.metrics();
}

}  // namespace twohop::train
