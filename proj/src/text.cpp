#include "fts/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

#include "fts/error.hpp"
#include "fts/numerics.hpp"
#include "fts/rng.hpp"

namespace fts {

namespace {

constexpr double kLayerNormEps = 1e-12;
constexpr double kMaskedScore = -1e30;
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * M_PI);

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

double gelu_grad(double x) {
    return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))) +
           x * std::exp(-0.5 * x * x) * kInvSqrt2Pi;
}

void adam_step_vec(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state) {
    adam_step(std::span<double>(params.data(), static_cast<std::size_t>(params.size())),
              std::span<const double>(grad.data(), static_cast<std::size_t>(grad.size())), state);
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (unsigned char ch : text) {
        if (std::ispunct(ch)) continue;
        cleaned.push_back(static_cast<char>(std::tolower(ch)));
    }
    std::vector<std::string> tokens;
    std::string word;
    for (unsigned char ch : cleaned) {
        if (std::isspace(ch)) {
            if (!word.empty()) tokens.push_back(std::move(word));
            word.clear();
        } else {
            word.push_back(static_cast<char>(ch));
        }
    }
    if (!word.empty()) tokens.push_back(std::move(word));
    return tokens;
}

int Vocab::id_of(const std::string& word) const {
    auto it = index.find(word);
    return it == index.end() ? unk_id : it->second;
}

Vocab build_vocab(std::span<const std::string> texts, int min_freq, int max_size) {
    if (min_freq < 1) fail(errc::invalid_argument, "build_vocab: min_freq must be >= 1");
    if (max_size < 5) fail(errc::invalid_argument, "build_vocab: max_size must be >= 5");
    std::unordered_map<std::string, long long> counts;
    for (const std::string& text : texts)
        for (std::string& tok : tokenize(text)) ++counts[std::move(tok)];
    if (counts.empty())
        fail(errc::invalid_argument, "build_vocab: corpus is empty after normalization");

    std::vector<std::pair<std::string, long long>> ranked;
    ranked.reserve(counts.size());
    for (auto& kv : counts)
        if (kv.second >= min_freq) ranked.emplace_back(kv.first, kv.second);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocab v;
    v.words = {"[PAD]", "[UNK]", "[CLS]", "[MASK]"};
    const int room = max_size - static_cast<int>(v.words.size());
    for (int i = 0; i < room && i < static_cast<int>(ranked.size()); ++i)
        v.words.push_back(ranked[i].first);
    for (int id = 0; id < v.size(); ++id) v.index[v.words[id]] = id;
    return v;
}

TokenSequence encode(const std::string& text, const Vocab& vocab, int max_len) {
    if (max_len < 2) fail(errc::invalid_argument, "encode: max_len must be >= 2");
    TokenSequence seq;
    seq.ids.assign(max_len, Vocab::pad_id);
    seq.mask.assign(max_len, 0);
    seq.ids[0] = Vocab::cls_id;
    seq.mask[0] = 1;
    seq.real_len = 1;
    for (const std::string& tok : tokenize(text)) {
        if (seq.real_len >= max_len) break;
        seq.ids[seq.real_len] = vocab.id_of(tok);
        seq.mask[seq.real_len] = 1;
        ++seq.real_len;
    }
    return seq;
}

namespace {

// Rowwise stable softmax; masked key columns are pinned far below every real
// score, so their weights underflow to exactly zero.
Eigen::MatrixXd masked_softmax_rows(Eigen::MatrixXd scores, const std::vector<int>& key_mask) {
    if (!key_mask.empty()) {
        if (static_cast<Eigen::Index>(key_mask.size()) != scores.cols())
            fail(errc::invalid_argument, "attention: key mask length mismatch");
        for (Eigen::Index j = 0; j < scores.cols(); ++j)
            if (!key_mask[j]) scores.col(j).setConstant(kMaskedScore);
    }
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        const double m = scores.row(r).maxCoeff();
        scores.row(r) = (scores.row(r).array() - m).exp();
        scores.row(r) /= scores.row(r).sum();
    }
    return scores;
}

}  // namespace

AttentionResult scaled_dot_attention(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k,
                                     const Eigen::MatrixXd& v, const std::vector<int>& key_mask) {
    if (q.cols() != k.cols()) fail(errc::invalid_argument, "attention: q/k width mismatch");
    if (k.rows() != v.rows()) fail(errc::invalid_argument, "attention: k/v length mismatch");
    if (q.cols() == 0) fail(errc::invalid_argument, "attention: zero-width queries");
    AttentionResult res;
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
    res.weights = masked_softmax_rows(q * k.transpose() * scale, key_mask);
    res.output = res.weights * v;
    return res;
}

namespace {

void init_matrix(Eigen::MatrixXd& m, double bound, Rng& rng) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.next_uniform(-bound, bound);
}

template <typename Model, typename Fn>
void visit_blocks(Model& model, Fn&& fn) {
    fn(model.word_emb);
    fn(model.pos_emb);
    for (auto& b : model.blocks) {
        fn(b.attn.w_q);
        fn(b.attn.b_q);
        fn(b.attn.w_k);
        fn(b.attn.b_k);
        fn(b.attn.w_v);
        fn(b.attn.b_v);
        fn(b.attn.w_o);
        fn(b.attn.b_o);
        fn(b.ln1_gamma);
        fn(b.ln1_beta);
        fn(b.ff_w1);
        fn(b.ff_b1);
        fn(b.ff_w2);
        fn(b.ff_b2);
        fn(b.ln2_gamma);
        fn(b.ln2_beta);
    }
    fn(model.reg_w);
    fn(model.mlm_w);
    fn(model.mlm_b);
}

TextModel zeros_like(const TextModel& src) {
    TextModel z = src;
    visit_blocks(z, [](auto& block) { block.setZero(); });
    z.reg_b = 0.0;
    return z;
}

int resolved_d_ff(const TextConfig& c) { return c.d_ff > 0 ? c.d_ff : 4 * c.d_model; }

}  // namespace

TextModel make_text_model(const TextConfig& config) {
    if (config.d_model < 1 || config.n_heads < 1 || config.n_blocks < 0)
        fail(errc::invalid_argument, "text model: bad dimensions");
    if (config.d_model % config.n_heads != 0)
        fail(errc::invalid_argument, "text model: d_model must be divisible by n_heads");
    if (config.max_len < 2) fail(errc::invalid_argument, "text model: max_len must be >= 2");
    if (config.vocab_size < 5)
        fail(errc::invalid_argument, "text model: vocab_size must be >= 5");

    TextModel m;
    m.config = config;
    m.config.d_ff = resolved_d_ff(config);
    const int d = config.d_model;
    const int d_ff = m.config.d_ff;
    const double kd = 1.0 / std::sqrt(static_cast<double>(d));
    const double kff = 1.0 / std::sqrt(static_cast<double>(d_ff));

    Rng rng(config.seed);
    m.word_emb.resize(config.vocab_size, d);
    init_matrix(m.word_emb, kd, rng);
    m.pos_emb.resize(config.max_len, d);
    init_matrix(m.pos_emb, kd, rng);

    m.blocks.resize(config.n_blocks);
    for (auto& b : m.blocks) {
        for (Eigen::MatrixXd* w : {&b.attn.w_q, &b.attn.w_k, &b.attn.w_v, &b.attn.w_o}) {
            w->resize(d, d);
            init_matrix(*w, kd, rng);
        }
        for (Eigen::VectorXd* bias : {&b.attn.b_q, &b.attn.b_k, &b.attn.b_v, &b.attn.b_o})
            *bias = Eigen::VectorXd::Zero(d);
        b.ff_w1.resize(d, d_ff);
        init_matrix(b.ff_w1, kd, rng);
        b.ff_b1 = Eigen::VectorXd::Zero(d_ff);
        b.ff_w2.resize(d_ff, d);
        init_matrix(b.ff_w2, kff, rng);
        b.ff_b2 = Eigen::VectorXd::Zero(d);
        b.ln1_gamma = Eigen::VectorXd::Ones(d);
        b.ln1_beta = Eigen::VectorXd::Zero(d);
        b.ln2_gamma = Eigen::VectorXd::Ones(d);
        b.ln2_beta = Eigen::VectorXd::Zero(d);
    }

    m.reg_w.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) m.reg_w(i) = rng.next_uniform(-kd, kd);
    m.reg_b = 0.0;
    m.mlm_w.resize(config.vocab_size, d);
    init_matrix(m.mlm_w, kd, rng);
    m.mlm_b = Eigen::VectorXd::Zero(config.vocab_size);
    return m;
}

int text_param_count(const TextModel& model) {
    int count = 1;  // regression bias
    visit_blocks(model, [&](const auto& block) { count += static_cast<int>(block.size()); });
    return count;
}

Eigen::VectorXd text_flatten(const TextModel& model) {
    Eigen::VectorXd flat(text_param_count(model));
    Eigen::Index pos = 0;
    visit_blocks(model, [&](const auto& block) {
        for (Eigen::Index i = 0; i < block.size(); ++i) flat(pos++) = block(i);
    });
    flat(pos) = model.reg_b;
    return flat;
}

void text_set_params(TextModel& model, const Eigen::VectorXd& flat) {
    if (flat.size() != text_param_count(model))
        fail(errc::invalid_argument, "text params: size mismatch");
    Eigen::Index pos = 0;
    visit_blocks(model, [&](auto& block) {
        for (Eigen::Index i = 0; i < block.size(); ++i) block(i) = flat(pos++);
    });
    model.reg_b = flat(pos);
}

namespace {

void layer_norm_forward(const Eigen::MatrixXd& in, const Eigen::VectorXd& gamma,
                        const Eigen::VectorXd& beta, Eigen::MatrixXd& out, Eigen::MatrixXd& xhat,
                        Eigen::VectorXd& inv_s) {
    const Eigen::Index rows = in.rows();
    out.resize(rows, in.cols());
    xhat.resize(rows, in.cols());
    inv_s.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double mu = in.row(r).mean();
        const double var = (in.row(r).array() - mu).square().mean();
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        inv_s(r) = inv;
        xhat.row(r) = ((in.row(r).array() - mu) * inv).matrix();
        out.row(r) = xhat.row(r).cwiseProduct(gamma.transpose()) + beta.transpose();
    }
}

void layer_norm_backward(const Eigen::MatrixXd& dout, const Eigen::VectorXd& gamma,
                         const Eigen::MatrixXd& xhat, const Eigen::VectorXd& inv_s,
                         Eigen::MatrixXd& din, Eigen::VectorXd& dgamma, Eigen::VectorXd& dbeta) {
    din.resize(dout.rows(), dout.cols());
    for (Eigen::Index r = 0; r < dout.rows(); ++r) {
        const Eigen::RowVectorXd dy = dout.row(r);
        dgamma += dy.cwiseProduct(xhat.row(r)).transpose();
        dbeta += dy.transpose();
        const Eigen::RowVectorXd dxh = dy.cwiseProduct(gamma.transpose());
        const double m1 = dxh.mean();
        const double m2 = dxh.cwiseProduct(xhat.row(r)).mean();
        din.row(r) = (inv_s(r) * (dxh.array() - m1 - xhat.row(r).array() * m2)).matrix();
    }
}

struct BlockCache {
    Eigen::MatrixXd a_in;
    Eigen::MatrixXd q, k, v;
    std::vector<Eigen::MatrixXd> probs;  // per head
    Eigen::MatrixXd concat;
    Eigen::MatrixXd r1, x1, x1_hat;
    Eigen::VectorXd inv_s1;
    Eigen::MatrixXd z1, g;
    Eigen::MatrixXd r2, x_out, x2_hat;
    Eigen::VectorXd inv_s2;
};

struct ForwardCache {
    Eigen::MatrixXd x0;
    std::vector<BlockCache> blocks;

    const Eigen::MatrixXd& final_hidden() const {
        return blocks.empty() ? x0 : blocks.back().x_out;
    }
};

// Sequences shorter than max_len are allowed; trailing PAD is inert either way.
void forward_with_cache(const TextModel& m, const TokenSequence& seq, ForwardCache& cache) {
    const int L = static_cast<int>(seq.ids.size());
    const int d = m.config.d_model;
    if (L < 1 || L > m.config.max_len)
        fail(errc::invalid_argument, "encoder: sequence length must be in [1, max_len]");
    if (seq.mask.size() != seq.ids.size())
        fail(errc::invalid_argument, "encoder: mask length mismatch");

    cache.x0.resize(L, d);
    for (int t = 0; t < L; ++t) {
        const int id = seq.ids[t];
        if (id < 0 || id >= m.config.vocab_size)
            fail(errc::invalid_argument, "encoder: token id out of range");
        cache.x0.row(t) = m.word_emb.row(id) + m.pos_emb.row(t);
    }

    const int heads = m.config.n_heads;
    const int dk = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    Eigen::MatrixXd x = cache.x0;
    cache.blocks.assign(m.blocks.size(), BlockCache{});
    for (std::size_t bi = 0; bi < m.blocks.size(); ++bi) {
        const BlockParams& B = m.blocks[bi];
        BlockCache& C = cache.blocks[bi];
        C.a_in = x;
        C.q = (x * B.attn.w_q).rowwise() + B.attn.b_q.transpose();
        C.k = (x * B.attn.w_k).rowwise() + B.attn.b_k.transpose();
        C.v = (x * B.attn.w_v).rowwise() + B.attn.b_v.transpose();
        C.probs.resize(heads);
        C.concat.resize(L, d);
        for (int h = 0; h < heads; ++h) {
            const auto qh = C.q.middleCols(h * dk, dk);
            const auto kh = C.k.middleCols(h * dk, dk);
            const auto vh = C.v.middleCols(h * dk, dk);
            C.probs[h] = masked_softmax_rows(qh * kh.transpose() * scale, seq.mask);
            C.concat.middleCols(h * dk, dk) = C.probs[h] * vh;
        }
        const Eigen::MatrixXd attn_out = (C.concat * B.attn.w_o).rowwise() + B.attn.b_o.transpose();
        C.r1 = C.a_in + attn_out;
        layer_norm_forward(C.r1, B.ln1_gamma, B.ln1_beta, C.x1, C.x1_hat, C.inv_s1);
        C.z1 = (C.x1 * B.ff_w1).rowwise() + B.ff_b1.transpose();
        C.g = C.z1.unaryExpr([](double v) { return gelu(v); });
        C.r2 = C.x1 + ((C.g * B.ff_w2).rowwise() + B.ff_b2.transpose());
        layer_norm_forward(C.r2, B.ln2_gamma, B.ln2_beta, C.x_out, C.x2_hat, C.inv_s2);
        x = C.x_out;
    }
}

// Pushes dL/d(final hidden) back to every parameter, accumulating into grad.
void backward_through_encoder(const TextModel& m, const TokenSequence& seq,
                              const ForwardCache& cache, Eigen::MatrixXd dx, TextModel& grad) {
    const int d = m.config.d_model;
    const int heads = m.config.n_heads;
    const int dk = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

    for (int bi = static_cast<int>(m.blocks.size()) - 1; bi >= 0; --bi) {
        const BlockParams& B = m.blocks[bi];
        const BlockCache& C = cache.blocks[bi];
        BlockParams& G = grad.blocks[bi];

        Eigen::MatrixXd dr2;
        layer_norm_backward(dx, B.ln2_gamma, C.x2_hat, C.inv_s2, dr2, G.ln2_gamma, G.ln2_beta);

        G.ff_w2.noalias() += C.g.transpose() * dr2;
        G.ff_b2 += dr2.colwise().sum().transpose();
        const Eigen::MatrixXd dg = dr2 * B.ff_w2.transpose();
        const Eigen::MatrixXd dz1 =
            dg.cwiseProduct(C.z1.unaryExpr([](double v) { return gelu_grad(v); }));
        G.ff_w1.noalias() += C.x1.transpose() * dz1;
        G.ff_b1 += dz1.colwise().sum().transpose();
        const Eigen::MatrixXd dx1 = dr2 + dz1 * B.ff_w1.transpose();

        Eigen::MatrixXd dr1;
        layer_norm_backward(dx1, B.ln1_gamma, C.x1_hat, C.inv_s1, dr1, G.ln1_gamma, G.ln1_beta);

        G.attn.w_o.noalias() += C.concat.transpose() * dr1;
        G.attn.b_o += dr1.colwise().sum().transpose();
        const Eigen::MatrixXd dconcat = dr1 * B.attn.w_o.transpose();

        Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(dr1.rows(), d);
        Eigen::MatrixXd dkm = Eigen::MatrixXd::Zero(dr1.rows(), d);
        Eigen::MatrixXd dv = Eigen::MatrixXd::Zero(dr1.rows(), d);
        for (int h = 0; h < heads; ++h) {
            const auto qh = C.q.middleCols(h * dk, dk);
            const auto kh = C.k.middleCols(h * dk, dk);
            const auto vh = C.v.middleCols(h * dk, dk);
            const Eigen::MatrixXd& p = C.probs[h];
            const Eigen::MatrixXd doh = dconcat.middleCols(h * dk, dk);
            const Eigen::MatrixXd dp = doh * vh.transpose();
            dv.middleCols(h * dk, dk).noalias() += p.transpose() * doh;
            Eigen::MatrixXd ds(p.rows(), p.cols());
            for (Eigen::Index r = 0; r < p.rows(); ++r) {
                const double dot = dp.row(r).dot(p.row(r));
                ds.row(r) = p.row(r).cwiseProduct((dp.row(r).array() - dot).matrix());
            }
            dq.middleCols(h * dk, dk).noalias() += ds * kh * scale;
            dkm.middleCols(h * dk, dk).noalias() += ds.transpose() * qh * scale;
        }
        G.attn.w_q.noalias() += C.a_in.transpose() * dq;
        G.attn.b_q += dq.colwise().sum().transpose();
        G.attn.w_k.noalias() += C.a_in.transpose() * dkm;
        G.attn.b_k += dkm.colwise().sum().transpose();
        G.attn.w_v.noalias() += C.a_in.transpose() * dv;
        G.attn.b_v += dv.colwise().sum().transpose();

        dx = dr1 + dq * B.attn.w_q.transpose() + dkm * B.attn.w_k.transpose() +
             dv * B.attn.w_v.transpose();
    }

    for (int t = 0; t < static_cast<int>(seq.ids.size()); ++t) {
        grad.word_emb.row(seq.ids[t]) += dx.row(t);
        grad.pos_emb.row(t) += dx.row(t);
    }
}

}  // namespace

Eigen::MatrixXd encoder_forward(const TextModel& model, const TokenSequence& seq) {
    ForwardCache cache;
    forward_with_cache(model, seq, cache);
    return cache.final_hidden();
}

EncoderDebug encoder_forward_debug(const TextModel& model, const TokenSequence& seq) {
    ForwardCache cache;
    forward_with_cache(model, seq, cache);
    EncoderDebug dbg;
    dbg.final_hidden = cache.final_hidden();
    dbg.attention.reserve(cache.blocks.size());
    for (const BlockCache& C : cache.blocks) dbg.attention.push_back(C.probs);
    return dbg;
}

double predict_regression(const TextModel& model, const TokenSequence& seq) {
    const Eigen::MatrixXd hidden = encoder_forward(model, seq);
    return model.reg_w.dot(hidden.row(0)) + model.reg_b;
}

double regression_mse(const TextModel& model, std::span<const TextExample> batch) {
    if (batch.empty()) fail(errc::invalid_argument, "regression_mse: empty batch");
    double acc = 0.0;
    for (const TextExample& ex : batch) {
        const double e = predict_regression(model, ex.seq) - ex.target;
        acc += e * e;
    }
    return acc / static_cast<double>(batch.size());
}

double regression_gradients(const TextModel& model, std::span<const TextExample> batch,
                            Eigen::VectorXd& grad) {
    const int n = static_cast<int>(batch.size());
    if (n == 0) fail(errc::invalid_argument, "regression_gradients: empty batch");
    TextModel g = zeros_like(model);
    double loss = 0.0;
    ForwardCache cache;
    for (const TextExample& ex : batch) {
        forward_with_cache(model, ex.seq, cache);
        const Eigen::MatrixXd& hidden = cache.final_hidden();
        const double pred = model.reg_w.dot(hidden.row(0)) + model.reg_b;
        const double err = pred - ex.target;
        loss += err * err;

        const double dpred = 2.0 * err / n;
        g.reg_w += dpred * hidden.row(0);
        g.reg_b += dpred;
        Eigen::MatrixXd dfinal = Eigen::MatrixXd::Zero(hidden.rows(), hidden.cols());
        dfinal.row(0) = dpred * model.reg_w;
        backward_through_encoder(model, ex.seq, cache, std::move(dfinal), g);
    }
    grad = text_flatten(g);
    return loss / n;
}

std::vector<MaskedExample> sample_masks(std::span<const TokenSequence> seqs, double mask_prob,
                                        Rng& rng) {
    if (mask_prob <= 0.0 || mask_prob >= 1.0)
        fail(errc::invalid_argument, "sample_masks: mask_prob must be in (0, 1)");
    std::vector<MaskedExample> out;
    for (const TokenSequence& seq : seqs) {
        std::vector<int> maskable;
        for (int t = 0; t < seq.real_len; ++t)
            if (seq.ids[t] >= 4) maskable.push_back(t);  // ordinary words only
        if (maskable.empty()) continue;

        MaskedExample ex;
        ex.seq = seq;
        for (int t : maskable) {
            if (rng.next_double() < mask_prob) {
                ex.positions.push_back(t);
                ex.labels.push_back(seq.ids[t]);
                ex.seq.ids[t] = Vocab::mask_id;
            }
        }
        if (ex.positions.empty()) {
            const int t = maskable[static_cast<std::size_t>(
                rng.next_below(static_cast<std::uint64_t>(maskable.size())))];
            ex.positions.push_back(t);
            ex.labels.push_back(seq.ids[t]);
            ex.seq.ids[t] = Vocab::mask_id;
        }
        out.push_back(std::move(ex));
    }
    return out;
}

namespace {

long long total_masked(std::span<const MaskedExample> batch) {
    long long m = 0;
    for (const MaskedExample& ex : batch) m += static_cast<long long>(ex.positions.size());
    return m;
}

double masked_ce_for_example(const TextModel& model, const MaskedExample& ex,
                             const Eigen::MatrixXd& hidden, double inv_total, TextModel* grad,
                             Eigen::MatrixXd* dfinal) {
    double loss = 0.0;
    for (std::size_t j = 0; j < ex.positions.size(); ++j) {
        const int t = ex.positions[j];
        const int label = ex.labels[j];
        if (label < 0 || label >= model.config.vocab_size)
            fail(errc::invalid_argument, "masked loss: label out of range");
        const Eigen::VectorXd logits = model.mlm_w * hidden.row(t).transpose() + model.mlm_b;
        const double mx = logits.maxCoeff();
        const double lse = mx + std::log((logits.array() - mx).exp().sum());
        loss += lse - logits(label);
        if (grad) {
            Eigen::VectorXd dlogits = (logits.array() - lse).exp();
            dlogits(label) -= 1.0;
            dlogits *= inv_total;
            grad->mlm_w.noalias() += dlogits * hidden.row(t);
            grad->mlm_b += dlogits;
            dfinal->row(t) += (model.mlm_w.transpose() * dlogits).transpose();
        }
    }
    return loss;
}

}  // namespace

double masked_loss(const TextModel& model, std::span<const MaskedExample> batch) {
    const long long total = total_masked(batch);
    if (total == 0) fail(errc::invalid_argument, "masked_loss: no masked positions");
    double loss = 0.0;
    for (const MaskedExample& ex : batch) {
        const Eigen::MatrixXd hidden = encoder_forward(model, ex.seq);
        loss += masked_ce_for_example(model, ex, hidden, 0.0, nullptr, nullptr);
    }
    return loss / static_cast<double>(total);
}

double masked_gradients(const TextModel& model, std::span<const MaskedExample> batch,
                        Eigen::VectorXd& grad) {
    const long long total = total_masked(batch);
    if (total == 0) fail(errc::invalid_argument, "masked_gradients: no masked positions");
    TextModel g = zeros_like(model);
    const double inv_total = 1.0 / static_cast<double>(total);
    double loss = 0.0;
    ForwardCache cache;
    for (const MaskedExample& ex : batch) {
        forward_with_cache(model, ex.seq, cache);
        const Eigen::MatrixXd& hidden = cache.final_hidden();
        Eigen::MatrixXd dfinal = Eigen::MatrixXd::Zero(hidden.rows(), hidden.cols());
        loss += masked_ce_for_example(model, ex, hidden, inv_total, &g, &dfinal);
        backward_through_encoder(model, ex.seq, cache, std::move(dfinal), g);
    }
    grad = text_flatten(g);
    return loss / static_cast<double>(total);
}

TrainingHistory train_text_regressor(TextModel& model, std::span<const TextExample> train,
                                     std::span<const TextExample> val,
                                     const TrainOptions& options) {
    if (train.empty()) fail(errc::invalid_argument, "train_text_regressor: empty training set");
    if (options.epochs < 1) fail(errc::invalid_argument, "training: epochs must be >= 1");
    if (options.lr < 0.0) fail(errc::invalid_argument, "training: lr must be >= 0");

    AdamHyper hyper;
    hyper.lr = options.lr;
    AdamState adam(text_param_count(model), hyper);
    Eigen::VectorXd params = text_flatten(model);
    Eigen::VectorXd grad;
    const int n = static_cast<int>(train.size());
    const int batch = (options.batch_size <= 0) ? n : std::min(options.batch_size, n);
    TrainingHistory history;
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        const Eigen::VectorXd snapshot = params;
        for (int start = 0; start < n; start += batch) {
            const int count = std::min(batch, n - start);
            regression_gradients(model, train.subspan(start, count), grad);
            adam_step_vec(params, grad, adam);
            text_set_params(model, params);
        }
        const double train_loss = regression_mse(model, train);
        if (!std::isfinite(train_loss)) {
            params = snapshot;
            text_set_params(model, params);
            break;
        }
        history.train_loss.push_back(train_loss);
        if (!val.empty()) history.val_loss.push_back(regression_mse(model, val));
    }
    return history;
}

TrainingHistory pretrain_masked(TextModel& model, std::span<const TokenSequence> seqs,
                                double mask_prob, const TrainOptions& options,
                                std::uint64_t mask_seed) {
    if (seqs.empty()) fail(errc::invalid_argument, "pretrain_masked: empty corpus");
    Rng rng(mask_seed);
    AdamHyper hyper;
    hyper.lr = options.lr;
    if (options.epochs < 1) fail(errc::invalid_argument, "training: epochs must be >= 1");
    if (options.lr < 0.0) fail(errc::invalid_argument, "training: lr must be >= 0");
    AdamState adam(text_param_count(model), hyper);
    Eigen::VectorXd params = text_flatten(model);
    Eigen::VectorXd grad;
    TrainingHistory history;
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        const std::vector<MaskedExample> batch = sample_masks(seqs, mask_prob, rng);
        if (batch.empty())
            fail(errc::invalid_argument, "pretrain_masked: no sequence has maskable tokens");
        const Eigen::VectorXd snapshot = params;
        masked_gradients(model, batch, grad);
        adam_step_vec(params, grad, adam);
        text_set_params(model, params);
        const double loss = masked_loss(model, batch);
        if (!std::isfinite(loss)) {
            params = snapshot;
            text_set_params(model, params);
            break;
        }
        history.train_loss.push_back(loss);
    }
    return history;
}

NewsAlignment align_news_to_days(std::span<const NewsItem> items, std::span<const Date> dates) {
    if (dates.empty()) fail(errc::invalid_argument, "align_news_to_days: no trading days");
    NewsAlignment out;
    out.day_items.assign(dates.size(), {});
    for (std::size_t k = 0; k < items.size(); ++k) {
        const Date d = items[k].timestamp.utc_date();
        auto it = std::lower_bound(dates.begin(), dates.end(), d);
        if (it == dates.end())
            fail(errc::invalid_argument, "align_news_to_days: item " + std::to_string(k) +
                                             " dated " + d.iso() + " falls after the last " +
                                             "trading day " + dates.back().iso());
        out.day_items[static_cast<std::size_t>(it - dates.begin())].push_back(
            static_cast<int>(k));
    }
    for (std::size_t i = 0; i < out.day_items.size(); ++i)
        if (out.day_items[i].empty()) out.empty_days.push_back(static_cast<int>(i));
    return out;
}

DailyPredictions predict_daily(const TextModel& model, const Vocab& vocab,
                               std::span<const NewsItem> items, const NewsAlignment& alignment) {
    DailyPredictions out;
    out.values.resize(alignment.day_items.size());
    for (std::size_t i = 0; i < alignment.day_items.size(); ++i) {
        const std::vector<int>& bag = alignment.day_items[i];
        if (bag.empty()) {
            if (i == 0)
                fail(errc::invalid_argument,
                     "predict_daily: first trading day has no news to score");
            out.values[i] = out.values[i - 1];
            out.carried.push_back(static_cast<int>(i));
            continue;
        }
        double acc = 0.0;
        for (int k : bag) {
            const TokenSequence seq = encode(items[k].text, vocab, model.config.max_len);
            acc += predict_regression(model, seq);
        }
        out.values[i] = acc / static_cast<double>(bag.size());
    }
    return out;
}

}  // namespace fts
