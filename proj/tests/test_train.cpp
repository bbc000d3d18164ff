#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "twohop/corpus/generate.hpp"
#include "twohop/corpus/templates.hpp"
#include "twohop/mixtures/mixtures.hpp"
#include "twohop/model/chat.hpp"
#include "twohop/model/toy_adapter.hpp"
#include "twohop/model/toy_transformer.hpp"
#include "twohop/train/losses.hpp"
#include "twohop/train/optimizer.hpp"
#include "twohop/train/trainer.hpp"

using namespace twohop;
using corpus::ChatExample;
using corpus::QaKind;
using model::ModelAdapter;
using model::Tokenizer;
using model::ToyAdapter;
using model::ToyConfig;
using train::AuxLossSpec;
using train::FreezeMask;
using train::TrainConfig;
using train::Trainer;

namespace {

Tokenizer tiny_tokenizer() {
    static Tokenizer tok = Tokenizer::build({
        "Answer the following question.",
        "In which city was Russ's spouse born?",
        "Where was Hay born?",
        "Who is Russ married to?",
        "Showing.",
        "Hay.",
        "a a a a",
    });
    return tok;
}

ToyConfig tiny_config(int vocab, std::uint64_t seed = 7) {
    ToyConfig cfg;
    cfg.n_blocks = 4;
    cfg.width = 16;
    cfg.n_heads = 2;
    cfg.mlp_hidden = 32;
    cfg.context = 64;
    cfg.vocab = vocab;
    cfg.seed = seed;
    return cfg;
}

ChatExample two_hop_example() {
    const auto& bank = corpus::TemplateBank::builtin();
    const corpus::Triplet t{"pt1", "Russ", "Hay", "Showing", corpus::Split::demonstrated};
    ChatExample ex = bank.render_qa(t, QaKind::two_hop_no_cot, 0);
    ex.system = "Answer the following question.";
    return ex;
}

// Adapter with scripted logits and lens vectors; lets trivial-value and
// hand-computed oracles hit the loss code without a real network.
class StubLensAdapter : public ModelAdapter {
public:
    Tokenizer tok = tiny_tokenizer();
    std::function<float(int pos, int v)> logit_fn = [](int, int) { return 0.0f; };
    std::vector<float> hidden;     // returned by hidden_at
    std::vector<float> embed_row;  // returned by embedding_row
    std::vector<float> lens_out;   // returned by unembed; defaults to zeros

    std::string name() const override { return "stub-lens"; }
    std::string chat(const std::vector<model::ChatMessage>&, const model::GenerateOptions&) override {
        return "";
    }
    bool has_logits() const override { return true; }
    const Tokenizer& tokenizer() const override { return tok; }
    int n_blocks() const override { return 8; }
    int width() const override { return (int)hidden.size(); }
    std::span<const float> forward(std::span<const int> tokens) override {
        const int V = tok.vocab_size();
        logits_.assign(tokens.size() * (std::size_t)V, 0.0f);
        for (std::size_t p = 0; p < tokens.size(); ++p)
            for (int v = 0; v < V; ++v) logits_[p * (std::size_t)V + v] = logit_fn((int)p, v);
        return logits_;
    }
    std::span<const float> hidden_at(int, int) override { return hidden; }
    std::vector<float> embedding_row(int) const override { return embed_row; }
    std::vector<float> unembed(std::span<const float>) const override {
        if (!lens_out.empty()) return lens_out;
        return std::vector<float>((std::size_t)tok.vocab_size(), 0.0f);
    }

private:
    std::vector<float> logits_;
};

// Independent cross-entropy: explicit softmax probabilities in double.
double oracle_ce(std::span<const float> row, int target) {
    double mx = -1e300;
    for (float v : row) mx = std::max(mx, (double)v);
    double z = 0;
    for (float v : row) z += std::exp((double)v - mx);
    const double p = std::exp((double)row[target] - mx) / z;
    return -std::log(p);
}

double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max({1e-12, std::fabs(a), std::fabs(b)});
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::filesystem::path fresh_dir(const std::string& leaf) {
    const auto dir = std::filesystem::temp_directory_path() / "twohop_train_tests" / leaf;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Small real training set over a generated corpus; shared across cases.
const mixtures::ExampleSet& small_set() {
    static mixtures::ExampleSet set = [] {
        const auto c = corpus::generate_corpus(6, 3, corpus::NamePools::builtin(), 99);
        auto full = mixtures::assemble_training_set(c, mixtures::MixtureKind::full,
                                                    corpus::TemplateBank::builtin(), 41);
        full.examples.resize(48);
        return full;
    }();
    return set;
}

// Tokenizer covering the small corpus surfaces.
const Tokenizer& small_set_tokenizer() {
    static Tokenizer tok = [] {
        const auto c = corpus::generate_corpus(6, 3, corpus::NamePools::builtin(), 99);
        return Tokenizer::build(mixtures::all_surfaces(c, corpus::TemplateBank::builtin()));
    }();
    return tok;
}

}  // namespace

TEST_CASE("aux spec defaults: depth fraction block, per-variant coefficients, two-hop kinds") {
    CHECK(train::default_aux_block(32) == 10);
    CHECK(train::default_aux_block(8) == 2);
    CHECK(train::default_aux_block(4) == 1);

    AuxLossSpec spec;
    CHECK_FALSE(spec.enabled());
    spec.variant = AuxLossSpec::Variant::logit_lens;
    CHECK(spec.resolved_coefficient() == 0.01);
    CHECK(spec.resolved_block(32) == 10);
    spec.variant = AuxLossSpec::Variant::embed_lens;
    CHECK(spec.resolved_coefficient() == 0.1);
    spec.coefficient = 0.5;
    CHECK(spec.resolved_coefficient() == 0.5);
    spec.block = 9;
    CHECK(spec.resolved_block(32) == 9);
    CHECK_THROWS(spec.resolved_block(8));

    CHECK(spec.applies(QaKind::two_hop_cot));
    CHECK(spec.applies(QaKind::two_hop_no_cot));
    CHECK_FALSE(spec.applies(QaKind::first_hop));

    const AuxLossSpec back = AuxLossSpec::from_json(spec.to_json());
    CHECK(back.variant == spec.variant);
    CHECK(back.block == spec.block);
    CHECK(back.coefficient == spec.coefficient);
    CHECK(back.applies_to == spec.applies_to);

    const double grid[] = {0.001, 0.01, 0.1, 1.0};
    for (int i = 0; i < 4; ++i) CHECK(train::kCoeffSweepGrid[i] == grid[i]);
}

TEST_CASE("default staged schedule: six stages at depth fractions three and six eighths") {
    const auto s8 = train::default_staged_schedule(8);
    REQUIRE(s8.size() == 6);
    for (int rep : {0, 3}) {
        CHECK(s8[rep + 0].selector == "first_hop");
        CHECK(s8[rep + 0].lo == 0);
        CHECK(s8[rep + 0].hi == 3);
        CHECK(s8[rep + 1].selector == "second_hop");
        CHECK(s8[rep + 1].lo == 3);
        CHECK(s8[rep + 1].hi == 6);
        CHECK(s8[rep + 2].selector == "two_hop");
        CHECK(s8[rep + 2].lo == 0);
        CHECK(s8[rep + 2].hi == 8);
    }
    const auto s32 = train::default_staged_schedule(32);
    CHECK(s32[0].hi == 12);
    CHECK(s32[1].lo == 12);
    CHECK(s32[1].hi == 24);
    CHECK(s32[2].hi == 32);
}

TEST_CASE("lm loss on zeroed logits is exactly ln V and masks to assistant spans") {
    StubLensAdapter stub;
    const int V = stub.tok.vocab_size();

    ChatExample ex;
    ex.system = "Answer the following question.";
    ex.user = "Where was Hay born?";
    ex.assistant = "Showing.";
    CHECK(train::lm_loss(stub, {ex}) == std::log((double)V));

    // Only assistant tokens carry terms: changing the user changes nothing
    // under positionally uniform logits, and the term count stays fixed.
    ChatExample other = ex;
    other.user = "Who is Russ married to?";
    CHECK(train::lm_loss(stub, {other}) == std::log((double)V));
    const auto breakdown_a = train::total_loss(stub, {ex}, {});
    const auto breakdown_b = train::total_loss(stub, {other}, {});
    CHECK(breakdown_a.lm_tokens == breakdown_b.lm_tokens);
    CHECK(breakdown_a.lm_tokens == 3);  // "Showing" "." <|end|>

    ChatExample empty = ex;
    empty.assistant.clear();
    CHECK_THROWS(train::lm_loss(stub, {empty}));
    CHECK_THROWS(train::lm_loss(stub, {}));
}

TEST_CASE("lm loss matches a hand-computed cross entropy on scripted logits") {
    StubLensAdapter stub;
    stub.logit_fn = [](int pos, int v) { return 0.31f * (float)((pos + 2 * v) % 7) - 0.9f; };
    const int V = stub.tok.vocab_size();

    ChatExample ex;
    ex.system = "Answer the following question.";
    ex.user = "Where was Hay born?";
    ex.assistant = "Showing.";

    const auto r = model::render_chat(stub.tok, ex, {}, true);
    const auto logits = stub.forward(r.tokens);
    double want = 0;
    int n = 0;
    for (int p = r.answer_begin; p < r.answer_end; ++p) {
        want += oracle_ce(logits.subspan((std::size_t)(p - 1) * V, (std::size_t)V), r.tokens[p]);
        ++n;
    }
    want /= n;
    CHECK(rel_err(train::lm_loss(stub, {ex}), want) < 1e-6);
}

TEST_CASE("lm loss on the real model matches a brute-force recomputation") {
    const Tokenizer tok = tiny_tokenizer();
    ToyAdapter adapter(tiny_config(tok.vocab_size(), 13), tok);
    const int V = tok.vocab_size();

    std::vector<ChatExample> batch;
    ChatExample a;
    a.system = "Answer the following question.";
    a.user = "Where was Hay born?";
    a.assistant = "Showing.";
    ChatExample b = a;
    b.user = "Who is Russ married to?";
    b.assistant = "Hay.";
    batch = {a, b};

    double want = 0;
    long long n = 0;
    for (const auto& ex : batch) {
        const auto r = model::render_chat(tok, ex, {}, true);
        const auto logits = adapter.forward(r.tokens);
        for (int p = r.answer_begin; p < r.answer_end; ++p) {
            want += oracle_ce(logits.subspan((std::size_t)(p - 1) * V, (std::size_t)V),
                              r.tokens[p]);
            ++n;
        }
    }
    want /= (double)n;
    CHECK(rel_err(train::lm_loss(adapter, batch), want) < 1e-6);
}

TEST_CASE("aux logit lens: uniform lens hits ln V exactly, real model matches oracle") {
    AuxLossSpec spec;
    spec.variant = AuxLossSpec::Variant::logit_lens;
    spec.block = 1;

    // Stub returns all-zero lens logits: exactly ln V.
    StubLensAdapter stub;
    stub.hidden.assign(16, 0.5f);
    const ChatExample ex = two_hop_example();
    CHECK(train::aux_logit_lens(stub, ex, spec) == std::log((double)stub.tok.vocab_size()));

    // Real model against an independent norm + matvec + CE in double.
    const Tokenizer tok = tiny_tokenizer();
    ToyAdapter adapter(tiny_config(tok.vocab_size(), 23), tok);
    const auto& m = adapter.model();
    const int d = m.config().width, V = m.config().vocab;

    const int pos = model::bridge_position(tok, ex, {});
    const auto r = model::render_chat(tok, ex, {}, false);
    adapter.forward(r.tokens);
    const auto h = adapter.hidden_at(1, pos);

    double ss = 0;
    for (int i = 0; i < d; ++i) ss += (double)h[i] * h[i];
    const double inv = 1.0 / std::sqrt(ss / d + m.config().eps);
    std::vector<double> hn(d);
    for (int i = 0; i < d; ++i) hn[i] = (double)m.params().final_norm[i] * h[i] * inv;
    std::vector<float> y(V);
    for (int v = 0; v < V; ++v) {
        double acc = 0;
        for (int i = 0; i < d; ++i) acc += (double)m.params().unembed[(std::size_t)v * d + i] * hn[i];
        y[v] = (float)acc;
    }
    const int target = tok.entity_id(ex.bridge);
    const double want = oracle_ce(y, target);
    CHECK(rel_err(train::aux_logit_lens(adapter, ex, spec), want) < 2e-5);

    AuxLossSpec wrong = spec;
    wrong.variant = AuxLossSpec::Variant::embed_lens;
    CHECK_THROWS(train::aux_logit_lens(adapter, ex, wrong));

    ChatExample multi = ex;
    multi.bridge = "San Remo";
    CHECK_THROWS(train::aux_logit_lens(adapter, multi, spec));
}

TEST_CASE("aux embed lens: parallel is exactly -1, orthogonal exactly 0, random matches") {
    AuxLossSpec spec;
    spec.variant = AuxLossSpec::Variant::embed_lens;
    spec.block = 1;
    const ChatExample ex = two_hop_example();

    StubLensAdapter stub;
    // Norm 5 exactly, so cosine arithmetic stays exact for the parallel case.
    stub.hidden = {3, 4, 0, 0};
    stub.embed_row = {3, 4, 0, 0};
    CHECK(train::aux_embed_lens(stub, ex, spec) == -1.0);

    stub.embed_row = {0, 0, 2, 0};
    CHECK(train::aux_embed_lens(stub, ex, spec) == 0.0);

    stub.embed_row = {1.5f, -2.0f, 0.25f, 3.0f};
    double uu = 0, hh = 0, uh = 0;
    for (int i = 0; i < 4; ++i) {
        uu += (double)stub.embed_row[i] * stub.embed_row[i];
        hh += (double)stub.hidden[i] * stub.hidden[i];
        uh += (double)stub.embed_row[i] * stub.hidden[i];
    }
    const double want = -uh / (std::sqrt(uu) * std::sqrt(hh));
    CHECK(rel_err(train::aux_embed_lens(stub, ex, spec), want) < 1e-6);
    CHECK(train::aux_embed_lens(stub, ex, spec) >= -1.0);
    CHECK(train::aux_embed_lens(stub, ex, spec) <= 1.0);

    stub.embed_row = {0, 0, 0, 0};
    CHECK_THROWS(train::aux_embed_lens(stub, ex, spec));

    // Real model path stays in range.
    const Tokenizer tok = tiny_tokenizer();
    ToyAdapter adapter(tiny_config(tok.vocab_size(), 29), tok);
    const double v = train::aux_embed_lens(adapter, ex, spec);
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);

    AuxLossSpec normed = spec;
    normed.normalized_hidden = true;
    const double vn = train::aux_embed_lens(adapter, ex, normed);
    CHECK(vn >= -1.0);
    CHECK(vn <= 1.0);
    // The final-norm gain is all ones at init, so the direction is unchanged.
    CHECK(rel_err(v, vn) < 1e-5);
}

TEST_CASE("total loss composes lm and aux with the coefficient") {
    const Tokenizer tok = tiny_tokenizer();
    ToyAdapter adapter(tiny_config(tok.vocab_size(), 31), tok);

    ChatExample plain;
    plain.system = "Answer the following question.";
    plain.user = "Where was Hay born?";
    plain.assistant = "Showing.";
    plain.kind = QaKind::second_hop;
    const ChatExample two = two_hop_example();
    const std::vector<ChatExample> batch = {plain, two};

    AuxLossSpec spec;
    spec.variant = AuxLossSpec::Variant::logit_lens;
    spec.block = 1;
    const auto with_aux = train::total_loss(adapter, batch, spec);
    CHECK(with_aux.aux_examples == 1);
    CHECK(with_aux.aux > 0);
    CHECK(std::fabs(with_aux.total - (with_aux.lm + 0.01 * with_aux.aux)) < 1e-12);

    AuxLossSpec zero = spec;
    zero.coefficient = 0;
    const auto no_c = train::total_loss(adapter, batch, zero);
    CHECK(no_c.total == no_c.lm);

    // No bridge-annotated examples: aux contributes nothing.
    const auto only_plain = train::total_loss(adapter, {plain}, spec);
    CHECK(only_plain.aux_examples == 0);
    CHECK(only_plain.aux == 0);
    CHECK(only_plain.total == only_plain.lm);

    const auto off = train::total_loss(adapter, batch, {});
    CHECK(off.total == off.lm);
}

TEST_CASE("analytic gradients match central finite differences on sampled parameters") {
    using M = model::ToyTransformerT<double>;
    ToyConfig cfg;
    cfg.n_blocks = 4;
    cfg.width = 8;
    cfg.n_heads = 2;
    cfg.mlp_hidden = 16;
    cfg.context = 16;
    cfg.vocab = 12;
    cfg.seed = 5;
    M m(cfg);

    const std::vector<int> tokens = {4, 9, 2, 11, 7, 5};
    const int span_begin = 3, span_end = 6;  // loss-bearing positions
    const int aux_block = 1, aux_pos = 2, aux_target = 9;
    const int d = cfg.width, V = cfg.vocab;

    enum class Loss { lm, logit_lens, embed_lens };

    auto loss_value = [&](Loss which) {
        model::ToyCacheT<double> cache;
        m.forward(tokens, cache);
        if (which == Loss::lm) {
            double total = 0;
            for (int p = span_begin; p < span_end; ++p) {
                std::span<const double> row(cache.logits.data() + (std::size_t)(p - 1) * V,
                                            (std::size_t)V);
                double mx = row[0];
                for (double x : row) mx = std::max(mx, x);
                double z = 0;
                for (double x : row) z += std::exp(x - mx);
                total += mx + std::log(z) - row[tokens[(std::size_t)p]];
            }
            return total;
        }
        const double* h = m.hidden_at(cache, aux_block, aux_pos);
        if (which == Loss::logit_lens) {
            std::vector<double> y(V);
            m.lens_logits(h, y.data());
            double mx = y[0];
            for (double x : y) mx = std::max(mx, x);
            double z = 0;
            for (double x : y) z += std::exp(x - mx);
            return mx + std::log(z) - y[aux_target];
        }
        const double* u = m.params().tok_embed.data() + (std::size_t)aux_target * d;
        double uu = 0, hh = 0, uh = 0;
        for (int i = 0; i < d; ++i) {
            uu += u[i] * u[i];
            hh += h[i] * h[i];
            uh += u[i] * h[i];
        }
        return -uh / (std::sqrt(uu) * std::sqrt(hh));
    };

    auto analytic = [&](Loss which) {
        model::ToyCacheT<double> cache;
        m.forward(tokens, cache);
        auto grads = model::ToyTensorsT<double>::shaped(cfg);
        grads.zero();
        model::LogitGradT<double> dl;
        model::InjectionT<double> inj;
        const model::InjectionT<double>* inj_ptr = nullptr;
        if (which == Loss::lm) {
            for (int p = span_begin; p < span_end; ++p) {
                dl.rows.push_back(p - 1);
                const std::size_t off = dl.d.size();
                dl.d.resize(off + (std::size_t)V);
                const double* row = cache.logits.data() + (std::size_t)(p - 1) * V;
                double mx = row[0];
                for (int v = 0; v < V; ++v) mx = std::max(mx, row[v]);
                double z = 0;
                for (int v = 0; v < V; ++v) z += std::exp(row[v] - mx);
                for (int v = 0; v < V; ++v) dl.d[off + (std::size_t)v] = std::exp(row[v] - mx) / z;
                dl.d[off + (std::size_t)tokens[(std::size_t)p]] -= 1.0;
            }
        } else {
            const double* h = m.hidden_at(cache, aux_block, aux_pos);
            inj.block = aux_block;
            inj.pos = aux_pos;
            inj.d_hidden.assign((std::size_t)d, 0.0);
            if (which == Loss::logit_lens)
                m.lens_ce_backward(h, aux_target, 1.0, inj.d_hidden.data(), grads);
            else
                m.embed_cos_backward(h, aux_target, -1.0, inj.d_hidden.data(), grads);
            inj_ptr = &inj;
        }
        m.backward(cache, dl, inj_ptr, grads);
        return grads;
    };

    std::mt19937_64 pick(404);
    for (Loss which : {Loss::lm, Loss::logit_lens, Loss::embed_lens}) {
        auto grads = analytic(which);
        auto refs = model::named_tensors(grads);
        auto params = model::named_tensors(m.params());
        int checked = 0;
        for (std::size_t t = 0; t < refs.size(); ++t) {
            // Two random entries per tensor: 26 parameters per loss.
            for (int rep = 0; rep < 2; ++rep) {
                const std::size_t i = (std::size_t)(pick() % refs[t].data->size());
                double& w = (*params[t].data)[i];
                const double keep = w;
                const double h0 = 1e-5;
                w = keep + h0;
                const double up = loss_value(which);
                w = keep - h0;
                const double dn = loss_value(which);
                w = keep;
                const double fd = (up - dn) / (2 * h0);
                const double an = (*refs[t].data)[i];
                if (std::fabs(fd) < 1e-9 && std::fabs(an) < 1e-9) {
                    ++checked;
                    continue;
                }
                INFO("loss " << (int)which << " tensor " << refs[t].name << " index " << i);
                CHECK(rel_err(fd, an) < 1e-3);
                ++checked;
            }
        }
        CHECK(checked >= 20);
    }
}

TEST_CASE("freezing leaves out-of-range parameters bit-identical") {
    const Tokenizer& tok = small_set_tokenizer();
    ToyConfig cfg = tiny_config(tok.vocab_size(), 51);
    ToyAdapter adapter(cfg, tok);

    auto before = adapter.model().params();  // copy
    TrainConfig tc;
    tc.opt.lr = 1e-3;
    tc.batch_size = 16;
    tc.seed = 9;
    Trainer t(adapter, tc);
    t.plan_total_steps(Trainer::planned_steps(small_set().examples.size(), tc.batch_size, 1));
    t.run_stage(small_set().examples, 1, 1, 3);

    const auto& after = adapter.model().params();
    auto b = model::named_tensors(const_cast<model::ToyTensorsT<float>&>(before));
    auto a = model::named_tensors(const_cast<model::ToyTensorsT<float>&>(after));
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& name = a[i].name;
        const bool in_range = name.rfind("block1.", 0) == 0 || name.rfind("block2.", 0) == 0;
        const bool same = std::memcmp(a[i].data->data(), b[i].data->data(),
                                      a[i].data->size() * sizeof(float)) == 0;
        INFO("tensor " << name);
        if (in_range)
            CHECK_FALSE(same);
        else
            CHECK(same);  // blocks 0 and 3, embeddings, final norm, unembedding
    }
}

TEST_CASE("an all-layers staged schedule reproduces the single-run checkpoint byte for byte") {
    const auto dir = fresh_dir("staged");
    const Tokenizer& tok = small_set_tokenizer();
    const ToyConfig cfg = tiny_config(tok.vocab_size(), 61);

    TrainConfig tc;
    tc.opt.lr = 2e-3;
    tc.batch_size = 8;
    tc.epochs = 2;
    tc.seed = 33;
    tc.log_every = 3;

    ToyAdapter single(cfg, tok);
    std::vector<train::MetricRecord> metrics_single;
    train::run_training(single, small_set(), tc, &metrics_single);
    single.save(dir / "single.ckpt");

    // Two all-layer stages of one epoch each walk the same step sequence.
    ToyAdapter staged(cfg, tok);
    const int L = cfg.n_blocks;
    std::vector<train::StageSpec> schedule = {{"all", 0, L, 1}, {"all", 0, L, 1}};
    std::vector<train::MetricRecord> metrics_staged;
    train::run_staged_training(staged, small_set(), tc, schedule, &metrics_staged);
    staged.save(dir / "staged.ckpt");

    CHECK(read_file(dir / "single.ckpt") == read_file(dir / "staged.ckpt"));
    REQUIRE(metrics_single.size() == metrics_staged.size());
    for (std::size_t i = 0; i < metrics_single.size(); ++i) {
        CHECK(metrics_single[i].step == metrics_staged[i].step);
        CHECK(metrics_single[i].value == metrics_staged[i].value);
    }
}

TEST_CASE("training is deterministic: same seed, same metrics, same checkpoint") {
    const auto dir = fresh_dir("determinism");
    const Tokenizer& tok = small_set_tokenizer();
    const ToyConfig cfg = tiny_config(tok.vocab_size(), 71);

    TrainConfig tc;
    tc.opt.lr = 1e-3;
    tc.batch_size = 8;
    tc.epochs = 1;
    tc.seed = 5;
    tc.log_every = 2;
    tc.aux.variant = AuxLossSpec::Variant::logit_lens;
    tc.aux.block = 1;

    std::vector<train::MetricRecord> ma, mb;
    ToyAdapter a(cfg, tok), b(cfg, tok);
    train::run_training(a, small_set(), tc, &ma);
    train::run_training(b, small_set(), tc, &mb);
    a.save(dir / "a.ckpt");
    b.save(dir / "b.ckpt");
    CHECK(read_file(dir / "a.ckpt") == read_file(dir / "b.ckpt"));

    REQUIRE(ma.size() == mb.size());
    REQUIRE(!ma.empty());
    for (std::size_t i = 0; i < ma.size(); ++i) {
        CHECK(ma[i].metric == mb[i].metric);
        CHECK(ma[i].value == mb[i].value);
    }

    // Additivity on every logged step: total = lm + c * aux within 1e-8.
    const double c = tc.aux.resolved_coefficient();
    std::map<std::int64_t, std::map<std::string, double>> by_step;
    for (const auto& r : ma) by_step[r.step][r.metric] = r.value;
    int steps_seen = 0;
    for (const auto& [step, vals] : by_step) {
        REQUIRE(vals.count("lm_loss"));
        REQUIRE(vals.count("aux_loss"));
        REQUIRE(vals.count("total_loss"));
        CHECK(std::fabs(vals.at("total_loss") -
                        (vals.at("lm_loss") + c * vals.at("aux_loss"))) < 1e-8);
        ++steps_seen;
    }
    CHECK(steps_seen >= 2);

    // Metrics serialize as one record per line.
    train::write_metrics_jsonl(ma, dir / "metrics.jsonl");
    std::ifstream in(dir / "metrics.jsonl");
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == ma.size());
}

TEST_CASE("stage selectors filter by kind and reject unknown names") {
    const auto& all = small_set().examples;
    const auto fh = train::select_examples(all, "first_hop");
    for (const auto& ex : fh) CHECK(ex.kind == QaKind::first_hop);
    const auto th = train::select_examples(all, "two_hop");
    CHECK(!th.empty());
    for (const auto& ex : th)
        CHECK((ex.kind == QaKind::two_hop_cot || ex.kind == QaKind::two_hop_no_cot));
    CHECK(train::select_examples(all, "all").size() == all.size());
    CHECK_THROWS(train::select_examples(all, "third_hop"));

    CHECK(Trainer::planned_steps(10, 4, 3) == 9);
    CHECK(Trainer::planned_steps(8, 4, 1) == 2);
}

TEST_CASE("freeze mask: embeddings and head move only when every block does") {
    auto shape = model::ToyTensorsT<float>::shaped(tiny_config(50));
    auto refs = model::named_tensors(shape);
    const FreezeMask partial = FreezeMask::range(0, 3, 4);
    const FreezeMask full = FreezeMask::all(4);
    for (const auto& ref : refs) {
        if (ref.name == "tok_embed" || ref.name == "pos_embed" || ref.name == "final_norm" ||
            ref.name == "unembed") {
            CHECK_FALSE(partial.trainable(ref));
            CHECK(full.trainable(ref));
        }
        if (ref.name.rfind("block3.", 0) == 0) CHECK_FALSE(partial.trainable(ref));
        if (ref.name.rfind("block0.", 0) == 0) CHECK(partial.trainable(ref));
    }
    CHECK_THROWS(FreezeMask::range(2, 2, 4));
    CHECK_THROWS(FreezeMask::range(0, 5, 4));
}

TEST_CASE("divergence raises instead of training through non-finite loss") {
    const Tokenizer& tok = small_set_tokenizer();
    ToyAdapter adapter(tiny_config(tok.vocab_size(), 81), tok);
    auto& embed = adapter.model().params().tok_embed;
    embed[0] = std::numeric_limits<float>::infinity();

    TrainConfig tc;
    tc.batch_size = 8;
    Trainer t(adapter, tc);
    CHECK_THROWS_WITH(t.run_stage(small_set().examples, 1, 0, 4),
                      doctest::Contains("diverged"));
}
