#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "fts/error.hpp"
#include "fts/numerics.hpp"
#include "fts/rng.hpp"
#include "fts/text.hpp"

using namespace fts;

namespace {

Vocab toy_vocab() {
    std::vector<std::string> corpus = {
        "stocks climb as traders weigh earnings",
        "stocks slide as fed minutes loom",
        "equities rally while oil steadies",
        "the market drops on data surprises",
    };
    return build_vocab(corpus);
}

TextConfig tiny_config(const Vocab& vocab) {
    TextConfig cfg;
    cfg.d_model = 8;
    cfg.n_heads = 2;
    cfg.n_blocks = 1;
    cfg.max_len = 6;
    cfg.vocab_size = vocab.size();
    cfg.seed = 5;
    return cfg;
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
    return {v.data(), v.data() + v.size()};
}

}  // namespace

TEST_CASE("tokenizer lowercases, strips punctuation, splits on whitespace") {
    auto t = tokenize("Stocks Surge, Fed minutes LOOM!");
    REQUIRE(t.size() == 5);
    CHECK(t[0] == "stocks");
    CHECK(t[1] == "surge");
    CHECK(t[2] == "fed");
    CHECK(t[3] == "minutes");
    CHECK(t[4] == "loom");

    CHECK(tokenize("").empty());
    CHECK(tokenize("!!! ...").empty());
    auto sp = tokenize("S&P 500 up 1.2%");
    REQUIRE(sp.size() == 4);
    CHECK(sp[0] == "sp");
    CHECK(sp[1] == "500");
    CHECK(sp[2] == "up");
    CHECK(sp[3] == "12");
}

TEST_CASE("vocabulary reserves specials and ranks by frequency then spelling") {
    std::vector<std::string> corpus = {"up up down", "up level down"};
    Vocab v = build_vocab(corpus);
    REQUIRE(v.size() == 4 + 3);
    CHECK(v.words[Vocab::pad_id] == "[PAD]");
    CHECK(v.words[Vocab::unk_id] == "[UNK]");
    CHECK(v.words[Vocab::cls_id] == "[CLS]");
    CHECK(v.words[Vocab::mask_id] == "[MASK]");
    CHECK(v.words[4] == "up");    // freq 3
    CHECK(v.words[5] == "down");  // freq 2
    CHECK(v.words[6] == "level");
    CHECK(v.id_of("up") == 4);
    CHECK(v.id_of("never-seen") == Vocab::unk_id);
}

TEST_CASE("vocabulary ties break lexicographically") {
    std::vector<std::string> corpus = {"b a", "a b"};
    Vocab v = build_vocab(corpus);
    CHECK(v.words[4] == "a");
    CHECK(v.words[5] == "b");
}

TEST_CASE("vocabulary honors min_freq and max_size") {
    std::vector<std::string> corpus = {"up up down"};
    Vocab freq2 = build_vocab(corpus, 2);
    CHECK(freq2.size() == 5);
    CHECK(freq2.words[4] == "up");
    CHECK(freq2.id_of("down") == Vocab::unk_id);

    std::vector<std::string> wide = {"a b c d e f"};
    Vocab capped = build_vocab(wide, 1, 7);
    CHECK(capped.size() == 7);  // four specials plus three survivors
    CHECK(capped.words[4] == "a");
    CHECK(capped.words[6] == "c");

    CHECK_THROWS_AS((void)build_vocab(wide, 0), Error);
    CHECK_THROWS_AS((void)build_vocab(wide, 1, 4), Error);
    std::vector<std::string> silent = {"...", "!!"};
    CHECK_THROWS_AS((void)build_vocab(silent), Error);
}

TEST_CASE("encoding prepends CLS, pads, and flags real positions") {
    Vocab v = toy_vocab();
    TokenSequence seq = encode("stocks climb", v, 6);
    REQUIRE(seq.ids.size() == 6);
    REQUIRE(seq.mask.size() == 6);
    CHECK(seq.ids[0] == Vocab::cls_id);
    CHECK(seq.ids[1] == v.id_of("stocks"));
    CHECK(seq.ids[2] == v.id_of("climb"));
    CHECK(seq.ids[3] == Vocab::pad_id);
    CHECK(seq.real_len == 3);
    CHECK(seq.mask == std::vector<int>({1, 1, 1, 0, 0, 0}));

    TokenSequence oov = encode("zebra", v, 4);
    CHECK(oov.ids[1] == Vocab::unk_id);

    TokenSequence cut = encode("stocks climb as traders weigh earnings", v, 4);
    CHECK(cut.real_len == 4);
    CHECK(cut.ids[3] == v.id_of("as"));

    CHECK_THROWS_AS((void)encode("stocks", v, 1), Error);
}

TEST_CASE("attention weights are row-stochastic and uniform for constant scores") {
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(3, 4);
    Eigen::MatrixXd k = Eigen::MatrixXd::Random(3, 4);
    Eigen::MatrixXd v = Eigen::MatrixXd::Random(3, 4);
    AttentionResult res = scaled_dot_attention(q, k, v, {1, 1, 1});
    for (int r = 0; r < 3; ++r) {
        CHECK(res.weights.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
        for (int c = 0; c < 3; ++c)
            CHECK(res.weights(r, c) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
    // Uniform weights average the values.
    Eigen::MatrixXd want = Eigen::MatrixXd::Ones(3, 1) * v.colwise().mean();
    CHECK((res.output - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("attention matches a hand computation and zeroes masked keys") {
    Eigen::MatrixXd q(2, 2), k(2, 2), v(2, 2);
    q << 1.0, 0.0, 0.0, 1.0;
    k << 1.0, 0.0, 0.0, 1.0;
    v << 2.0, 0.0, 0.0, 4.0;

    AttentionResult res = scaled_dot_attention(q, k, v, {1, 1});
    const double s = 1.0 / std::sqrt(2.0);
    double w_same = std::exp(s) / (std::exp(s) + std::exp(0.0));
    CHECK(res.weights(0, 0) == doctest::Approx(w_same).epsilon(1e-12));
    CHECK(res.weights(1, 1) == doctest::Approx(w_same).epsilon(1e-12));
    CHECK(res.output(0, 0) == doctest::Approx(2.0 * w_same).epsilon(1e-12));

    AttentionResult masked = scaled_dot_attention(q, k, v, {1, 0});
    for (int r = 0; r < 2; ++r) {
        CHECK(masked.weights(r, 1) < 1e-12);
        CHECK(masked.weights(r, 0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(masked.output(r, 0) == doctest::Approx(2.0).epsilon(1e-12));
    }
}

TEST_CASE("model construction is deterministic and validates its shape") {
    Vocab v = toy_vocab();
    TextConfig cfg = tiny_config(v);
    TextModel a = make_text_model(cfg);
    TextModel b = make_text_model(cfg);
    CHECK(text_flatten(a) == text_flatten(b));

    TextConfig reseeded = cfg;
    reseeded.seed = 6;
    CHECK(text_flatten(a) != text_flatten(make_text_model(reseeded)));

    REQUIRE(a.blocks.size() == 1);
    CHECK((a.blocks[0].ln1_gamma.array() == 1.0).all());
    CHECK((a.blocks[0].ln1_beta.array() == 0.0).all());
    CHECK((a.blocks[0].attn.b_q.array() == 0.0).all());
    CHECK(a.blocks[0].ff_w1.cols() == 4 * cfg.d_model);

    TextConfig odd = cfg;
    odd.n_heads = 3;  // does not divide d_model = 8
    CHECK_THROWS_AS((void)make_text_model(odd), Error);
    TextConfig shallow = cfg;
    shallow.max_len = 1;
    CHECK_THROWS_AS((void)make_text_model(shallow), Error);
    TextConfig tiny_vocab = cfg;
    tiny_vocab.vocab_size = 4;
    CHECK_THROWS_AS((void)make_text_model(tiny_vocab), Error);
}

TEST_CASE("flatten and set_params round-trip, with the regression bias last") {
    Vocab v = toy_vocab();
    TextModel model = make_text_model(tiny_config(v));
    Eigen::VectorXd flat = text_flatten(model);
    CHECK(flat.size() == text_param_count(model));

    const int d = 8, dff = 32, L = 6, V = v.size();
    int block = 4 * (d * d + d) + 2 * d + (d * dff + dff) + (dff * d + d) + 2 * d;
    int want = V * d + L * d + block + (d + 1) + (V * d + V);
    CHECK(text_param_count(model) == want);

    TextConfig other_cfg = tiny_config(v);
    other_cfg.seed = 77;
    TextModel other = make_text_model(other_cfg);
    text_set_params(other, flat);
    CHECK(text_flatten(other) == flat);

    // Zero everything except the trailing regression bias: every input maps to it.
    flat.setZero();
    flat(flat.size() - 1) = 0.625;
    text_set_params(model, flat);
    CHECK(model.reg_b == 0.625);
    TokenSequence seq = encode("stocks climb", v, 6);
    CHECK(predict_regression(model, seq) == doctest::Approx(0.625).epsilon(1e-15));

    Eigen::VectorXd wrong = Eigen::VectorXd::Zero(flat.size() - 1);
    CHECK_THROWS_AS(text_set_params(model, wrong), Error);
}

TEST_CASE("final hidden rows are layer-normalized") {
    Vocab v = toy_vocab();
    TextModel model = make_text_model(tiny_config(v));
    TokenSequence seq = encode("stocks slide as fed minutes", v, 6);
    Eigen::MatrixXd hidden = encoder_forward(model, seq);
    REQUIRE(hidden.rows() == 6);
    REQUIRE(hidden.cols() == 8);
    for (int r = 0; r < hidden.rows(); ++r) {
        double m = hidden.row(r).mean();
        double var = (hidden.row(r).array() - m).square().mean();
        CHECK(std::abs(m) < 1e-10);
        CHECK(std::abs(var - 1.0) < 1e-6);
    }
}

TEST_CASE("attention inside the encoder ignores PAD and stays row-stochastic") {
    Vocab v = toy_vocab();
    TextModel model = make_text_model(tiny_config(v));
    TokenSequence seq = encode("stocks climb", v, 6);  // real_len 3, three PADs
    EncoderDebug dbg = encoder_forward_debug(model, seq);
    REQUIRE(dbg.attention.size() == 1);
    REQUIRE(dbg.attention[0].size() == 2);
    for (const auto& w : dbg.attention[0]) {
        for (int r = 0; r < w.rows(); ++r) {
            CHECK(w.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
            for (int c = seq.real_len; c < w.cols(); ++c) CHECK(w(r, c) < 1e-12);
        }
    }
    CHECK((dbg.final_hidden - encoder_forward(model, seq)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("extending a sequence with PAD does not change the prediction") {
    Vocab v = toy_vocab();
    TextConfig cfg = tiny_config(v);
    cfg.max_len = 10;
    TextModel model = make_text_model(cfg);

    TokenSequence padded = encode("equities rally", v, 10);  // real_len 3
    TokenSequence trimmed = padded;
    trimmed.ids.resize(3);
    trimmed.mask.resize(3);

    double a = predict_regression(model, padded);
    double b = predict_regression(model, trimmed);
    CHECK(std::abs(a - b) < 1e-10);
}

TEST_CASE("regression gradients agree with central differences") {
    Vocab v = toy_vocab();
    TextModel model = make_text_model(tiny_config(v));

    std::vector<TextExample> batch;
    batch.push_back({encode("stocks climb as traders weigh", v, 6), 0.8});
    batch.push_back({encode("the market drops on data", v, 6), -0.4});
    batch.push_back({encode("equities rally", v, 6), 0.3});

    Eigen::VectorXd grad;
    double loss = regression_gradients(model, batch, grad);
    CHECK(loss == doctest::Approx(regression_mse(model, batch)).epsilon(1e-12));
    REQUIRE(grad.size() == text_param_count(model));

    auto objective = [&](std::span<const double> p) {
        TextModel probe = model;
        text_set_params(probe, Eigen::Map<const Eigen::VectorXd>(p.data(), p.size()));
        return regression_mse(probe, batch);
    };
    std::vector<double> numeric =
        finite_diff_gradient(objective, to_std(text_flatten(model)));
    CHECK(check_gradient(to_std(grad), numeric) < 1e-4);
}

TEST_CASE("masked loss of an all-zero model is the log vocabulary size") {
    Vocab v = toy_vocab();
    TextModel model = make_text_model(tiny_config(v));
    Eigen::VectorXd flat = Eigen::VectorXd::Zero(text_param_count(model));
    text_set_params(model, flat);

    MaskedExample ex;
    ex.seq = encode("stocks climb as", v, 6);
    ex.positions = {1, 2};
    ex.labels = {v.id_of("stocks"), v.id_of("climb")};
    std::vector<MaskedExample> batch = {ex};
    CHECK(masked_loss(model, batch) ==
          doctest::Approx(std::log(static_cast<double>(v.size()))).epsilon(1e-12));
}

TEST_CASE("masked loss pools every masked position across the batch") {
    Vocab v = toy_vocab();
    TextModel model = make_text_model(tiny_config(v));
    Eigen::VectorXd flat = Eigen::VectorXd::Zero(text_param_count(model));
    text_set_params(model, flat);
    // Only the vocabulary-head bias is nonzero, so logits equal mlm_b everywhere.
    for (int i = 0; i < model.mlm_b.size(); ++i)
        model.mlm_b(i) = 0.01 * static_cast<double>(i);

    double lse = std::log(model.mlm_b.array().exp().sum());
    MaskedExample one;
    one.seq = encode("stocks climb", v, 6);
    one.positions = {1};
    one.labels = {4};
    MaskedExample two;
    two.seq = encode("the market drops", v, 6);
    two.positions = {1, 3};
    two.labels = {5, 7};
    std::vector<MaskedExample> batch = {one, two};

    double want = ((lse - model.mlm_b(4)) + (lse - model.mlm_b(5)) + (lse - model.mlm_b(7))) / 3.0;
    CHECK(masked_loss(model, batch) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("masked-language gradients agree with central differences") {
    Vocab v = toy_vocab();
    TextModel model = make_text_model(tiny_config(v));

    std::vector<TokenSequence> seqs = {
        encode("stocks climb as traders weigh", v, 6),
        encode("equities rally while oil steadies", v, 6),
    };
    Rng rng(33);
    std::vector<MaskedExample> batch = sample_masks(seqs, 0.5, rng);
    REQUIRE(!batch.empty());

    Eigen::VectorXd grad;
    double loss = masked_gradients(model, batch, grad);
    CHECK(loss == doctest::Approx(masked_loss(model, batch)).epsilon(1e-12));

    auto objective = [&](std::span<const double> p) {
        TextModel probe = model;
        text_set_params(probe, Eigen::Map<const Eigen::VectorXd>(p.data(), p.size()));
        return masked_loss(probe, batch);
    };
    std::vector<double> numeric =
        finite_diff_gradient(objective, to_std(text_flatten(model)));
    CHECK(check_gradient(to_std(grad), numeric) < 1e-4);
}

TEST_CASE("mask sampling only touches ordinary words and keeps true labels") {
    Vocab v = toy_vocab();
    std::vector<TokenSequence> seqs = {
        encode("stocks climb as traders weigh", v, 8),
        encode("zebra", v, 8),  // encodes to UNK only: nothing maskable
        encode("oil steadies", v, 8),
    };
    Rng rng(9);
    auto batch = sample_masks(seqs, 0.99, rng);
    REQUIRE(batch.size() == 2);  // the UNK-only sequence is skipped

    for (const auto& ex : batch) {
        CHECK(!ex.positions.empty());
        REQUIRE(ex.positions.size() == ex.labels.size());
        for (std::size_t i = 0; i < ex.positions.size(); ++i) {
            int pos = ex.positions[i];
            CHECK(ex.seq.ids[pos] == Vocab::mask_id);
            CHECK(ex.labels[i] >= 4);
            CHECK(pos >= 1);
            CHECK(pos < ex.seq.real_len);
        }
    }
    // With probability near one almost every ordinary word is masked.
    CHECK(batch[0].positions.size() >= 4);

    // A tiny probability still forces at least one mask per usable sequence.
    Rng rng2(10);
    auto forced = sample_masks(seqs, 1e-9, rng2);
    REQUIRE(forced.size() == 2);
    CHECK(forced[0].positions.size() == 1);
    CHECK(forced[1].positions.size() == 1);

    Rng rng3(11);
    CHECK_THROWS_AS((void)sample_masks(seqs, 0.0, rng3), Error);
    Rng rng4(12);
    CHECK_THROWS_AS((void)sample_masks(seqs, 1.0, rng4), Error);
}

TEST_CASE("labels store the pre-mask ids") {
    Vocab v = toy_vocab();
    std::vector<TokenSequence> seqs = {encode("stocks climb", v, 6)};
    Rng rng(14);
    auto batch = sample_masks(seqs, 0.99, rng);
    REQUIRE(batch.size() == 1);
    REQUIRE(!batch[0].positions.empty());
    for (std::size_t i = 0; i < batch[0].positions.size(); ++i) {
        int pos = batch[0].positions[i];
        CHECK(batch[0].labels[i] == seqs[0].ids[pos]);
    }
}

TEST_CASE("regressor training overfits a tiny batch") {
    Vocab v = toy_vocab();
    TextConfig cfg = tiny_config(v);
    cfg.seed = 3;
    TextModel model = make_text_model(cfg);

    std::vector<TextExample> batch;
    batch.push_back({encode("stocks climb as traders weigh", v, 6), 0.5});
    batch.push_back({encode("stocks slide as fed minutes", v, 6), -0.5});
    batch.push_back({encode("equities rally while oil", v, 6), 0.4});
    batch.push_back({encode("the market drops on data", v, 6), -0.3});

    TrainOptions opts;
    opts.epochs = 300;
    opts.lr = 5e-3;
    TrainingHistory hist = train_text_regressor(model, batch, {}, opts);
    CHECK(hist.train_loss.size() == 300);
    CHECK(hist.val_loss.empty());
    CHECK(regression_mse(model, batch) < 1e-3);
    CHECK(hist.train_loss.back() == doctest::Approx(regression_mse(model, batch)).epsilon(1e-12));
}

TEST_CASE("masked pretraining drives the loss down on a small corpus") {
    Vocab v = toy_vocab();
    TextConfig cfg = tiny_config(v);
    cfg.seed = 8;
    cfg.max_len = 8;
    TextModel model = make_text_model(cfg);

    std::vector<TokenSequence> seqs;
    for (const char* text : {"stocks climb as traders weigh earnings",
                             "stocks slide as fed minutes loom",
                             "equities rally while oil steadies",
                             "the market drops on data surprises"})
        seqs.push_back(encode(text, v, 8));

    TrainOptions opts;
    opts.epochs = 60;
    opts.lr = 5e-3;
    TrainingHistory hist = pretrain_masked(model, seqs, 0.3, opts, 99);
    CHECK(hist.train_loss.size() == 60);
    CHECK(hist.train_loss.back() < hist.train_loss.front());

    // Identical seeds reproduce the whole trajectory.
    TextModel again = make_text_model(cfg);
    TrainingHistory rep = pretrain_masked(again, seqs, 0.3, opts, 99);
    CHECK(rep.train_loss == hist.train_loss);
    CHECK(text_flatten(again) == text_flatten(model));
}

TEST_CASE("news items land on the first trading day at or after their date") {
    std::vector<Date> days = {Date::from_ymd(2020, 1, 6), Date::from_ymd(2020, 1, 7),
                              Date::from_ymd(2020, 1, 8)};
    auto at = [](const char* ts) {
        NewsItem item;
        item.timestamp = Timestamp::parse(ts);
        item.text = "x";
        return item;
    };
    std::vector<NewsItem> items = {
        at("2020-01-04T09:00:00Z"),  // Saturday -> Monday the 6th
        at("2020-01-06T22:00:00Z"),  // same day
        at("2020-01-07T00:00:00Z"),
    };
    NewsAlignment a = align_news_to_days(items, days);
    REQUIRE(a.day_items.size() == 3);
    CHECK(a.day_items[0] == std::vector<int>({0, 1}));
    CHECK(a.day_items[1] == std::vector<int>({2}));
    CHECK(a.day_items[2].empty());
    CHECK(a.empty_days == std::vector<int>({2}));

    std::vector<NewsItem> late = {at("2020-01-09T00:00:00Z")};
    CHECK_THROWS_AS((void)align_news_to_days(late, days), Error);
}

TEST_CASE("daily predictions average per-item scores and carry quiet days") {
    Vocab v = toy_vocab();
    TextModel model = make_text_model(tiny_config(v));

    std::vector<Date> days = {Date::from_ymd(2020, 3, 2), Date::from_ymd(2020, 3, 3),
                              Date::from_ymd(2020, 3, 4)};
    auto item = [](const char* ts, const char* text) {
        NewsItem it;
        it.timestamp = Timestamp::parse(ts);
        it.text = text;
        return it;
    };
    std::vector<NewsItem> items = {
        item("2020-03-02T08:00:00Z", "stocks climb as traders weigh earnings"),
        item("2020-03-02T09:30:00Z", "stocks slide as fed minutes loom"),
        item("2020-03-04T08:15:00Z", "equities rally while oil steadies"),
    };
    NewsAlignment align = align_news_to_days(items, days);
    DailyPredictions daily = predict_daily(model, v, items, align);
    REQUIRE(daily.values.size() == 3);

    auto score = [&](int i) {
        return predict_regression(model, encode(items[i].text, v, model.config.max_len));
    };
    CHECK(daily.values[0] == doctest::Approx(0.5 * (score(0) + score(1))).epsilon(1e-12));
    CHECK(daily.values[1] == doctest::Approx(daily.values[0]).epsilon(1e-15));  // carried
    CHECK(daily.values[2] == doctest::Approx(score(2)).epsilon(1e-12));
    CHECK(daily.carried == std::vector<int>({1}));

    // A quiet first day has nothing to carry from.
    std::vector<NewsItem> tail = {item("2020-03-03T08:00:00Z", "oil steadies")};
    NewsAlignment sparse = align_news_to_days(tail, days);
    CHECK_THROWS_AS((void)predict_daily(model, v, tail, sparse), Error);
}
