#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fts/date.hpp"
#include "fts/text_types.hpp"
#include "fts/training.hpp"

namespace fts {

class Rng;

// Lowercase, drop punctuation characters, split on whitespace.
std::vector<std::string> tokenize(const std::string& text);

// Word table. Ids 0..3 are reserved; words are ordered by descending corpus
// frequency, ties broken lexicographically.
struct Vocab {
    static constexpr int pad_id = 0;
    static constexpr int unk_id = 1;
    static constexpr int cls_id = 2;
    static constexpr int mask_id = 3;

    std::vector<std::string> words;  // index == id, includes the four specials
    std::unordered_map<std::string, int> index;

    int size() const { return static_cast<int>(words.size()); }
    int id_of(const std::string& word) const;
};

// Words kept must appear at least min_freq times; max_size caps the total
// table size, specials included.
Vocab build_vocab(std::span<const std::string> texts, int min_freq = 1, int max_size = 5000);

// Fixed-length id buffer: [CLS] + tokens, truncated, PAD to max_len.
struct TokenSequence {
    std::vector<int> ids;
    std::vector<int> mask;  // 1 = real position, 0 = PAD
    int real_len = 0;
};

TokenSequence encode(const std::string& text, const Vocab& vocab, int max_len);

// Single-head attention over row-vector tokens. key_mask (optional, else all
// real) zeroes attention to PAD keys; each row of weights sums to 1.
struct AttentionResult {
    Eigen::MatrixXd output;
    Eigen::MatrixXd weights;
};

AttentionResult scaled_dot_attention(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k,
                                     const Eigen::MatrixXd& v, const std::vector<int>& key_mask);

struct TextConfig {
    int d_model = 32;
    int n_heads = 2;
    int n_blocks = 2;
    int d_ff = 0;  // 0 = 4 * d_model
    int max_len = 64;
    int vocab_size = 0;  // set from the vocab in use
    std::uint64_t seed = 1;
};

struct AttentionParams {
    Eigen::MatrixXd w_q, w_k, w_v, w_o;  // d x d, row-vector convention
    Eigen::VectorXd b_q, b_k, b_v, b_o;
};

struct BlockParams {
    AttentionParams attn;
    Eigen::VectorXd ln1_gamma, ln1_beta;
    Eigen::MatrixXd ff_w1;  // d x d_ff
    Eigen::VectorXd ff_b1;
    Eigen::MatrixXd ff_w2;  // d_ff x d
    Eigen::VectorXd ff_b2;
    Eigen::VectorXd ln2_gamma, ln2_beta;
};

// Encoder with learned positions, post-norm blocks, GELU feed-forward, CLS
// pooling, one scalar regression head and one per-token vocabulary head.
struct TextModel {
    TextConfig config;
    Eigen::MatrixXd word_emb;  // vocab_size x d
    Eigen::MatrixXd pos_emb;   // max_len x d
    std::vector<BlockParams> blocks;
    Eigen::RowVectorXd reg_w;
    double reg_b = 0.0;
    Eigen::MatrixXd mlm_w;  // vocab_size x d
    Eigen::VectorXd mlm_b;
};

TextModel make_text_model(const TextConfig& config);

int text_param_count(const TextModel& model);
Eigen::VectorXd text_flatten(const TextModel& model);
void text_set_params(TextModel& model, const Eigen::VectorXd& flat);

// Hidden states after the final block, one row per position.
Eigen::MatrixXd encoder_forward(const TextModel& model, const TokenSequence& seq);

// Same forward pass, also reporting every attention matrix ([block][head]).
struct EncoderDebug {
    Eigen::MatrixXd final_hidden;
    std::vector<std::vector<Eigen::MatrixXd>> attention;
};
EncoderDebug encoder_forward_debug(const TextModel& model, const TokenSequence& seq);

double predict_regression(const TextModel& model, const TokenSequence& seq);

struct TextExample {
    TokenSequence seq;
    double target = 0.0;
};

double regression_mse(const TextModel& model, std::span<const TextExample> batch);
double regression_gradients(const TextModel& model, std::span<const TextExample> batch,
                            Eigen::VectorXd& grad);

// One pretraining example: positions replaced by MASK plus their true ids.
struct MaskedExample {
    TokenSequence seq;
    std::vector<int> positions;
    std::vector<int> labels;
};

// Replace mask_prob of the ordinary word positions with MASK, at least one per
// sequence when any position qualifies; sequences with none are skipped.
std::vector<MaskedExample> sample_masks(std::span<const TokenSequence> seqs, double mask_prob,
                                        Rng& rng);

double masked_loss(const TextModel& model, std::span<const MaskedExample> batch);
double masked_gradients(const TextModel& model, std::span<const MaskedExample> batch,
                        Eigen::VectorXd& grad);

TrainingHistory train_text_regressor(TextModel& model, std::span<const TextExample> train,
                                     std::span<const TextExample> val,
                                     const TrainOptions& options);

// Cross-entropy pretraining of the vocabulary head; masks are re-drawn each
// epoch from the given seed.
TrainingHistory pretrain_masked(TextModel& model, std::span<const TokenSequence> seqs,
                                double mask_prob, const TrainOptions& options,
                                std::uint64_t mask_seed);

// Item k lands on the first trading day whose date is >= the item's UTC date;
// items dated after the final trading day are an error.
struct NewsAlignment {
    std::vector<std::vector<int>> day_items;  // per trading day, indices into items
    std::vector<int> empty_days;
};

NewsAlignment align_news_to_days(std::span<const NewsItem> items, std::span<const Date> dates);

// Per-day score: mean over that day's items; days without items repeat the
// previous day's value and are reported in carried.
struct DailyPredictions {
    std::vector<double> values;
    std::vector<int> carried;
};

DailyPredictions predict_daily(const TextModel& model, const Vocab& vocab,
                               std::span<const NewsItem> items, const NewsAlignment& alignment);

}  // namespace fts
