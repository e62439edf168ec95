#include "fts/lstm.hpp"

#include <cmath>
#include <utility>

#include "fts/error.hpp"
#include "fts/numerics.hpp"
#include "fts/rng.hpp"

namespace fts {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Eigen::VectorXd sigmoid_vec(const Eigen::VectorXd& z) {
    return z.unaryExpr([](double v) { return sigmoid(v); });
}

void adam_step_vec(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state) {
    adam_step(std::span<double>(params.data(), static_cast<std::size_t>(params.size())),
              std::span<const double>(grad.data(), static_cast<std::size_t>(grad.size())), state);
}

}  // namespace

MinMaxScale MinMaxScale::fit(std::span<const double> values) {
    if (values.empty()) fail(errc::invalid_argument, "min-max scale: empty input");
    MinMaxScale s;
    s.lo = values[0];
    s.hi = values[0];
    for (double v : values) {
        if (!std::isfinite(v)) fail(errc::invalid_argument, "min-max scale: non-finite value");
        s.lo = std::min(s.lo, v);
        s.hi = std::max(s.hi, v);
    }
    return s;
}

double MinMaxScale::apply(double x) const {
    const double range = hi - lo;
    if (range <= 0.0) return 0.0;  // constant series maps to the low edge
    return (x - lo) / range;
}

double MinMaxScale::invert(double y) const {
    const double range = hi - lo;
    if (range <= 0.0) return lo;
    return lo + y * range;
}

WindowSet make_windows(std::span<const double> series, int lookback) {
    return make_windows(series, lookback, MinMaxScale::fit(series));
}

WindowSet make_windows(std::span<const double> series, int lookback, const MinMaxScale& scale) {
    if (lookback < 1) fail(errc::invalid_argument, "make_windows: lookback must be >= 1");
    const int n = static_cast<int>(series.size());
    if (n <= lookback)
        fail(errc::invalid_argument, "make_windows: series length " + std::to_string(n) +
                                         " must exceed lookback " + std::to_string(lookback));
    WindowSet set;
    set.lookback = lookback;
    set.scale = scale;
    const int samples = n - lookback;
    set.inputs.resize(samples, lookback);
    set.targets.resize(samples);
    for (int k = 0; k < samples; ++k) {
        for (int j = 0; j < lookback; ++j) set.inputs(k, j) = scale.apply(series[k + j]);
        set.targets(k) = scale.apply(series[k + lookback]);
    }
    return set;
}

LstmCellState lstm_cell_forward(const LstmLayerParams& layer, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& h_prev, const Eigen::VectorXd& c_prev) {
    const Eigen::VectorXd gi = sigmoid_vec(layer.w_in * x + layer.u_in * h_prev + layer.b_in);
    const Eigen::VectorXd gf =
        sigmoid_vec(layer.w_forget * x + layer.u_forget * h_prev + layer.b_forget);
    const Eigen::VectorXd go = sigmoid_vec(layer.w_out * x + layer.u_out * h_prev + layer.b_out);
    const Eigen::VectorXd gc =
        (layer.w_cand * x + layer.u_cand * h_prev + layer.b_cand).array().tanh();
    LstmCellState next;
    next.c = gf.cwiseProduct(c_prev) + gi.cwiseProduct(gc);
    next.h = go.cwiseProduct(next.c.array().tanh().matrix());
    return next;
}

namespace {

void init_matrix(Eigen::MatrixXd& m, double bound, Rng& rng) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.next_uniform(-bound, bound);
}

LstmLayerParams make_layer(int input, int hidden, Rng& rng) {
    LstmLayerParams L;
    const double kw = 1.0 / std::sqrt(static_cast<double>(input));
    const double ku = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (Eigen::MatrixXd* m : {&L.w_in, &L.w_forget, &L.w_out, &L.w_cand}) {
        m->resize(hidden, input);
        init_matrix(*m, kw, rng);
    }
    for (Eigen::MatrixXd* m : {&L.u_in, &L.u_forget, &L.u_out, &L.u_cand}) {
        m->resize(hidden, hidden);
        init_matrix(*m, ku, rng);
    }
    for (Eigen::VectorXd* b : {&L.b_in, &L.b_forget, &L.b_out, &L.b_cand})
        *b = Eigen::VectorXd::Zero(hidden);
    L.b_forget.setOnes();  // keeps early memory open
    return L;
}

LstmLayerParams zeros_like(const LstmLayerParams& src) {
    LstmLayerParams z;
    const int in = src.input_size();
    const int h = src.hidden_size();
    for (Eigen::MatrixXd* m : {&z.w_in, &z.w_forget, &z.w_out, &z.w_cand})
        *m = Eigen::MatrixXd::Zero(h, in);
    for (Eigen::MatrixXd* m : {&z.u_in, &z.u_forget, &z.u_out, &z.u_cand})
        *m = Eigen::MatrixXd::Zero(h, h);
    for (Eigen::VectorXd* b : {&z.b_in, &z.b_forget, &z.b_out, &z.b_cand})
        *b = Eigen::VectorXd::Zero(h);
    return z;
}

template <typename Net, typename Fn>
void visit_blocks(Net& net, Fn&& fn) {
    auto layer = [&](auto& L) {
        fn(L.w_in);
        fn(L.u_in);
        fn(L.b_in);
        fn(L.w_forget);
        fn(L.u_forget);
        fn(L.b_forget);
        fn(L.w_out);
        fn(L.u_out);
        fn(L.b_out);
        fn(L.w_cand);
        fn(L.u_cand);
        fn(L.b_cand);
    };
    layer(net.layer1);
    layer(net.layer2);
    fn(net.head_w);
}

}  // namespace

LstmNetwork make_lstm(const LstmConfig& config) {
    if (config.lookback < 1 || config.hidden1 < 1 || config.hidden2 < 1)
        fail(errc::invalid_argument, "lstm config: lookback and hidden sizes must be >= 1");
    LstmNetwork net;
    net.config = config;
    Rng rng(config.seed);
    net.layer1 = make_layer(1, config.hidden1, rng);
    net.layer2 = make_layer(config.hidden1, config.hidden2, rng);
    net.head_w.resize(config.hidden2);
    const double kh = 1.0 / std::sqrt(static_cast<double>(config.hidden2));
    for (Eigen::Index i = 0; i < net.head_w.size(); ++i)
        net.head_w(i) = rng.next_uniform(-kh, kh);
    net.head_b = 0.0;
    return net;
}

int lstm_param_count(const LstmNetwork& net) {
    int count = 1;  // head bias
    visit_blocks(net, [&](const auto& block) { count += static_cast<int>(block.size()); });
    return count;
}

Eigen::VectorXd lstm_flatten(const LstmNetwork& net) {
    Eigen::VectorXd flat(lstm_param_count(net));
    Eigen::Index pos = 0;
    visit_blocks(net, [&](const auto& block) {
        for (Eigen::Index i = 0; i < block.size(); ++i) flat(pos++) = block(i);
    });
    flat(pos) = net.head_b;
    return flat;
}

void lstm_set_params(LstmNetwork& net, const Eigen::VectorXd& flat) {
    if (flat.size() != lstm_param_count(net))
        fail(errc::invalid_argument, "lstm params: size mismatch");
    Eigen::Index pos = 0;
    visit_blocks(net, [&](auto& block) {
        for (Eigen::Index i = 0; i < block.size(); ++i) block(i) = flat(pos++);
    });
    net.head_b = flat(pos);
}

namespace {

// Everything the backward pass needs, indexed by timestep.
struct LayerCache {
    std::vector<Eigen::VectorXd> x, gi, gf, go, gc, c, tanh_c, h;
};

void layer_forward(const LstmLayerParams& L, const std::vector<Eigen::VectorXd>& xs,
                   LayerCache& cache) {
    const int T = static_cast<int>(xs.size());
    const int hidden = L.hidden_size();
    cache.x = xs;
    cache.gi.resize(T);
    cache.gf.resize(T);
    cache.go.resize(T);
    cache.gc.resize(T);
    cache.c.resize(T);
    cache.tanh_c.resize(T);
    cache.h.resize(T);
    Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(hidden);
    Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(hidden);
    for (int t = 0; t < T; ++t) {
        cache.gi[t] = sigmoid_vec(L.w_in * xs[t] + L.u_in * h_prev + L.b_in);
        cache.gf[t] = sigmoid_vec(L.w_forget * xs[t] + L.u_forget * h_prev + L.b_forget);
        cache.go[t] = sigmoid_vec(L.w_out * xs[t] + L.u_out * h_prev + L.b_out);
        cache.gc[t] = (L.w_cand * xs[t] + L.u_cand * h_prev + L.b_cand).array().tanh();
        cache.c[t] = cache.gf[t].cwiseProduct(c_prev) + cache.gi[t].cwiseProduct(cache.gc[t]);
        cache.tanh_c[t] = cache.c[t].array().tanh();
        cache.h[t] = cache.go[t].cwiseProduct(cache.tanh_c[t]);
        h_prev = cache.h[t];
        c_prev = cache.c[t];
    }
}

// dh_top holds dL/dh_t from the consumer of this layer's outputs. Parameter
// gradients accumulate into grad; dx_out (optional) receives dL/dx_t.
void layer_backward(const LstmLayerParams& L, const LayerCache& cache,
                    const std::vector<Eigen::VectorXd>& dh_top, LstmLayerParams& grad,
                    std::vector<Eigen::VectorXd>* dx_out) {
    const int T = static_cast<int>(cache.h.size());
    const int hidden = L.hidden_size();
    Eigen::VectorXd dh_rec = Eigen::VectorXd::Zero(hidden);
    Eigen::VectorXd dc_rec = Eigen::VectorXd::Zero(hidden);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(hidden);
    if (dx_out) dx_out->assign(T, Eigen::VectorXd());
    for (int t = T - 1; t >= 0; --t) {
        const Eigen::VectorXd& h_prev = (t > 0) ? cache.h[t - 1] : zero;
        const Eigen::VectorXd& c_prev = (t > 0) ? cache.c[t - 1] : zero;
        const Eigen::VectorXd dh = dh_top[t] + dh_rec;
        const Eigen::VectorXd one_m_tc2 =
            (1.0 - cache.tanh_c[t].array().square()).matrix();
        Eigen::VectorXd dc = dh.cwiseProduct(cache.go[t]).cwiseProduct(one_m_tc2) + dc_rec;

        const Eigen::VectorXd da_o = dh.cwiseProduct(cache.tanh_c[t])
                                         .cwiseProduct(cache.go[t])
                                         .cwiseProduct((1.0 - cache.go[t].array()).matrix());
        const Eigen::VectorXd da_i = dc.cwiseProduct(cache.gc[t])
                                         .cwiseProduct(cache.gi[t])
                                         .cwiseProduct((1.0 - cache.gi[t].array()).matrix());
        const Eigen::VectorXd da_f = dc.cwiseProduct(c_prev)
                                         .cwiseProduct(cache.gf[t])
                                         .cwiseProduct((1.0 - cache.gf[t].array()).matrix());
        const Eigen::VectorXd da_g =
            dc.cwiseProduct(cache.gi[t]).cwiseProduct((1.0 - cache.gc[t].array().square()).matrix());

        grad.w_in.noalias() += da_i * cache.x[t].transpose();
        grad.w_forget.noalias() += da_f * cache.x[t].transpose();
        grad.w_out.noalias() += da_o * cache.x[t].transpose();
        grad.w_cand.noalias() += da_g * cache.x[t].transpose();
        grad.u_in.noalias() += da_i * h_prev.transpose();
        grad.u_forget.noalias() += da_f * h_prev.transpose();
        grad.u_out.noalias() += da_o * h_prev.transpose();
        grad.u_cand.noalias() += da_g * h_prev.transpose();
        grad.b_in += da_i;
        grad.b_forget += da_f;
        grad.b_out += da_o;
        grad.b_cand += da_g;

        dh_rec = L.u_in.transpose() * da_i + L.u_forget.transpose() * da_f +
                 L.u_out.transpose() * da_o + L.u_cand.transpose() * da_g;
        dc_rec = dc.cwiseProduct(cache.gf[t]);
        if (dx_out)
            (*dx_out)[t] = L.w_in.transpose() * da_i + L.w_forget.transpose() * da_f +
                           L.w_out.transpose() * da_o + L.w_cand.transpose() * da_g;
    }
}

std::vector<Eigen::VectorXd> window_as_inputs(const Eigen::VectorXd& window) {
    std::vector<Eigen::VectorXd> xs(window.size());
    for (Eigen::Index t = 0; t < window.size(); ++t) {
        xs[t] = Eigen::VectorXd::Constant(1, window(t));
    }
    return xs;
}

}  // namespace

double network_forward(const LstmNetwork& net, const Eigen::VectorXd& window) {
    if (window.size() != net.config.lookback)
        fail(errc::invalid_argument, "network_forward: window length mismatch");
    LayerCache c1, c2;
    layer_forward(net.layer1, window_as_inputs(window), c1);
    layer_forward(net.layer2, c1.h, c2);
    return net.head_w.dot(c2.h.back()) + net.head_b;
}

double lstm_mse(const LstmNetwork& net, const WindowSet& set) {
    if (set.size() == 0) fail(errc::invalid_argument, "lstm_mse: empty window set");
    double acc = 0.0;
    for (int k = 0; k < set.size(); ++k) {
        const double pred = network_forward(net, set.inputs.row(k).transpose());
        const double e = pred - set.targets(k);
        acc += e * e;
    }
    return acc / set.size();
}

double compute_gradients(const LstmNetwork& net, const WindowSet& batch, Eigen::VectorXd& grad) {
    const int n = batch.size();
    if (n == 0) fail(errc::invalid_argument, "compute_gradients: empty batch");
    if (batch.lookback != net.config.lookback)
        fail(errc::invalid_argument, "compute_gradients: lookback mismatch");

    LstmNetwork g;
    g.config = net.config;
    g.layer1 = zeros_like(net.layer1);
    g.layer2 = zeros_like(net.layer2);
    g.head_w = Eigen::RowVectorXd::Zero(net.head_w.size());
    g.head_b = 0.0;

    const int T = net.config.lookback;
    double loss = 0.0;
    LayerCache c1, c2;
    for (int k = 0; k < n; ++k) {
        const Eigen::VectorXd window = batch.inputs.row(k).transpose();
        layer_forward(net.layer1, window_as_inputs(window), c1);
        layer_forward(net.layer2, c1.h, c2);
        const double pred = net.head_w.dot(c2.h.back()) + net.head_b;
        const double err = pred - batch.targets(k);
        loss += err * err;

        const double dpred = 2.0 * err / n;
        g.head_w += dpred * c2.h.back().transpose();
        g.head_b += dpred;

        std::vector<Eigen::VectorXd> dh2(T, Eigen::VectorXd::Zero(net.config.hidden2));
        dh2.back() = net.head_w.transpose() * dpred;
        std::vector<Eigen::VectorXd> dh1;
        layer_backward(net.layer2, c2, dh2, g.layer2, &dh1);
        layer_backward(net.layer1, c1, dh1, g.layer1, nullptr);
    }
    grad = lstm_flatten(g);
    return loss / n;
}

TrainingHistory train_lstm(LstmNetwork& net, const WindowSet& train, const WindowSet& val,
                           const TrainOptions& options) {
    if (options.epochs < 1) fail(errc::invalid_argument, "train_lstm: epochs must be >= 1");
    if (options.lr < 0.0) fail(errc::invalid_argument, "train_lstm: lr must be >= 0");
    if (train.size() == 0) fail(errc::invalid_argument, "train_lstm: empty training set");

    AdamHyper hyper;
    hyper.lr = options.lr;
    AdamState adam(lstm_param_count(net), hyper);
    Eigen::VectorXd params = lstm_flatten(net);
    Eigen::VectorXd grad;

    const int batch = (options.batch_size <= 0) ? train.size()
                                                : std::min(options.batch_size, train.size());
    TrainingHistory history;
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        const Eigen::VectorXd snapshot = params;
        for (int start = 0; start < train.size(); start += batch) {
            const int count = std::min(batch, train.size() - start);
            WindowSet slice;
            slice.lookback = train.lookback;
            slice.scale = train.scale;
            slice.inputs = train.inputs.middleRows(start, count);
            slice.targets = train.targets.segment(start, count);
            compute_gradients(net, slice, grad);
            adam_step_vec(params, grad, adam);
            lstm_set_params(net, params);
        }
        const double train_loss = lstm_mse(net, train);
        if (!std::isfinite(train_loss)) {
            // diverged: keep the last finite state and stop
            params = snapshot;
            lstm_set_params(net, params);
            break;
        }
        history.train_loss.push_back(train_loss);
        if (val.size() > 0) history.val_loss.push_back(lstm_mse(net, val));
    }
    return history;
}

std::vector<double> forecast_lstm(const LstmNetwork& net, std::span<const double> series,
                                  int test_len, const MinMaxScale& scale) {
    const int n = static_cast<int>(series.size());
    const int lookback = net.config.lookback;
    if (test_len < 1 || test_len > n)
        fail(errc::invalid_argument, "forecast_lstm: test_len out of range");
    if (n - test_len < lookback)
        fail(errc::invalid_argument, "forecast_lstm: not enough history before the test span");
    std::vector<double> out;
    out.reserve(test_len);
    Eigen::VectorXd window(lookback);
    for (int t = n - test_len; t < n; ++t) {
        for (int j = 0; j < lookback; ++j) window(j) = scale.apply(series[t - lookback + j]);
        out.push_back(scale.invert(network_forward(net, window)));
    }
    return out;
}

}  // namespace fts
