#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "fts/error.hpp"
#include "fts/lstm.hpp"
#include "fts/numerics.hpp"
#include "fts/rng.hpp"

using namespace fts;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

LstmLayerParams zero_layer(int input, int hidden) {
    LstmLayerParams layer;
    layer.w_in = layer.w_forget = layer.w_out = layer.w_cand =
        Eigen::MatrixXd::Zero(hidden, input);
    layer.u_in = layer.u_forget = layer.u_out = layer.u_cand =
        Eigen::MatrixXd::Zero(hidden, hidden);
    layer.b_in = layer.b_forget = layer.b_out = layer.b_cand = Eigen::VectorXd::Zero(hidden);
    return layer;
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
    return {v.data(), v.data() + v.size()};
}

}  // namespace

TEST_CASE("min-max scaling maps the fitted range onto [0,1]") {
    std::vector<double> values = {2.0, 4.0, 6.0};
    MinMaxScale s = MinMaxScale::fit(values);
    CHECK(s.lo == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(s.hi == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(s.apply(2.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(s.apply(6.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.apply(4.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.invert(0.5) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(s.invert(s.apply(3.7)) == doctest::Approx(3.7).epsilon(1e-12));
    // Out-of-range test values pass through the same affine map.
    CHECK(s.apply(8.0) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("min-max scaling of a constant series collapses to zero") {
    std::vector<double> values = {5.0, 5.0, 5.0};
    MinMaxScale s = MinMaxScale::fit(values);
    CHECK(s.apply(5.0) == 0.0);
    CHECK(s.apply(99.0) == 0.0);
    CHECK(s.invert(0.3) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("window construction slides over the scaled series") {
    std::vector<double> y = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
    WindowSet set = make_windows(y, 2);
    REQUIRE(set.size() == 4);
    CHECK(set.lookback == 2);
    CHECK(set.inputs.rows() == 4);
    CHECK(set.inputs.cols() == 2);

    // Scale maps [1,6] to [0,1]; window k is (y_k, y_{k+1}) -> target y_{k+2}.
    auto sc = [&](double v) { return (v - 1.0) / 5.0; };
    for (int k = 0; k < 4; ++k) {
        CHECK(set.inputs(k, 0) == doctest::Approx(sc(y[k])).epsilon(1e-12));
        CHECK(set.inputs(k, 1) == doctest::Approx(sc(y[k + 1])).epsilon(1e-12));
        CHECK(set.targets(k) == doctest::Approx(sc(y[k + 2])).epsilon(1e-12));
    }
}

TEST_CASE("window construction can reuse a fitted scale") {
    std::vector<double> train = {0.0, 10.0, 5.0, 2.0, 8.0};
    MinMaxScale s = MinMaxScale::fit(train);
    std::vector<double> test = {20.0, 12.0, 4.0};
    WindowSet set = make_windows(test, 2, s);
    REQUIRE(set.size() == 1);
    CHECK(set.inputs(0, 0) == doctest::Approx(2.0).epsilon(1e-12));  // 20 on a [0,10] scale
    CHECK(set.targets(0) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("window construction validates shapes") {
    std::vector<double> y = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS((void)make_windows(y, 0), Error);
    CHECK_THROWS_AS((void)make_windows(y, 3), Error);  // no room for a target
    CHECK_THROWS_AS((void)make_windows(std::vector<double>{}, 1), Error);
}

TEST_CASE("cell forward with zero weights halves the carry state") {
    LstmLayerParams layer = zero_layer(1, 2);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 3.0);
    Eigen::VectorXd h0 = Eigen::VectorXd::Zero(2);
    Eigen::VectorXd c0 = Eigen::VectorXd::Ones(2);

    LstmCellState st = lstm_cell_forward(layer, x, h0, c0);
    // All gates sit at sigmoid(0) = 0.5 and the candidate at tanh(0) = 0.
    for (int i = 0; i < 2; ++i) {
        CHECK(st.c(i) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(st.h(i) == doctest::Approx(0.5 * std::tanh(0.5)).epsilon(1e-12));
    }
}

TEST_CASE("cell forward matches a scalar-by-scalar oracle") {
    const int input = 2, hidden = 3;
    Rng rng(91);
    auto rand_mat = [&](int r, int c) {
        Eigen::MatrixXd m(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) m(i, j) = rng.next_uniform(-1.0, 1.0);
        return m;
    };
    LstmLayerParams layer;
    layer.w_in = rand_mat(hidden, input);
    layer.w_forget = rand_mat(hidden, input);
    layer.w_out = rand_mat(hidden, input);
    layer.w_cand = rand_mat(hidden, input);
    layer.u_in = rand_mat(hidden, hidden);
    layer.u_forget = rand_mat(hidden, hidden);
    layer.u_out = rand_mat(hidden, hidden);
    layer.u_cand = rand_mat(hidden, hidden);
    layer.b_in = rand_mat(hidden, 1);
    layer.b_forget = rand_mat(hidden, 1);
    layer.b_out = rand_mat(hidden, 1);
    layer.b_cand = rand_mat(hidden, 1);

    Eigen::VectorXd x = rand_mat(input, 1);
    Eigen::VectorXd h0 = rand_mat(hidden, 1);
    Eigen::VectorXd c0 = rand_mat(hidden, 1);
    LstmCellState st = lstm_cell_forward(layer, x, h0, c0);

    for (int i = 0; i < hidden; ++i) {
        auto pre = [&](const Eigen::MatrixXd& w, const Eigen::MatrixXd& u,
                       const Eigen::VectorXd& b) {
            double a = b(i);
            for (int j = 0; j < input; ++j) a += w(i, j) * x(j);
            for (int j = 0; j < hidden; ++j) a += u(i, j) * h0(j);
            return a;
        };
        double gi = sigmoid(pre(layer.w_in, layer.u_in, layer.b_in));
        double gf = sigmoid(pre(layer.w_forget, layer.u_forget, layer.b_forget));
        double go = sigmoid(pre(layer.w_out, layer.u_out, layer.b_out));
        double gc = std::tanh(pre(layer.w_cand, layer.u_cand, layer.b_cand));
        double c = gf * c0(i) + gi * gc;
        CHECK(st.c(i) == doctest::Approx(c).epsilon(1e-12));
        CHECK(st.h(i) == doctest::Approx(go * std::tanh(c)).epsilon(1e-12));
    }
}

TEST_CASE("initialization is deterministic, bounded, and biased to remember") {
    LstmConfig cfg{.lookback = 5, .hidden1 = 8, .hidden2 = 4, .seed = 3};
    LstmNetwork a = make_lstm(cfg);
    LstmNetwork b = make_lstm(cfg);
    CHECK(lstm_flatten(a) == lstm_flatten(b));

    LstmConfig other = cfg;
    other.seed = 4;
    CHECK(lstm_flatten(a) != lstm_flatten(make_lstm(other)));

    CHECK((a.layer1.b_forget.array() == 1.0).all());
    CHECK((a.layer2.b_forget.array() == 1.0).all());
    CHECK((a.layer1.b_in.array() == 0.0).all());
    double k1 = 1.0 / std::sqrt(1.0);
    CHECK((a.layer1.w_in.array().abs() <= k1).all());
    double ku = 1.0 / std::sqrt(8.0);
    CHECK((a.layer1.u_in.array().abs() <= ku).all());
}

TEST_CASE("flatten and set_params round-trip the whole network") {
    LstmNetwork net = make_lstm({.lookback = 4, .hidden1 = 6, .hidden2 = 3, .seed = 11});
    Eigen::VectorXd flat = lstm_flatten(net);
    CHECK(flat.size() == lstm_param_count(net));

    // Hand count: per layer 4*(h*in + h*h + h), head h2 + 1.
    int l1 = 4 * (6 * 1 + 6 * 6 + 6);
    int l2 = 4 * (3 * 6 + 3 * 3 + 3);
    CHECK(lstm_param_count(net) == l1 + l2 + 3 + 1);

    LstmNetwork other = make_lstm({.lookback = 4, .hidden1 = 6, .hidden2 = 3, .seed = 99});
    lstm_set_params(other, flat);
    CHECK(lstm_flatten(other) == flat);

    Eigen::VectorXd window = Eigen::VectorXd::LinSpaced(4, 0.1, 0.7);
    CHECK(network_forward(other, window) == network_forward(net, window));

    Eigen::VectorXd wrong = Eigen::VectorXd::Zero(flat.size() + 1);
    CHECK_THROWS_AS(lstm_set_params(other, wrong), Error);
}

TEST_CASE("head bias is the last flattened parameter") {
    LstmNetwork net = make_lstm({.lookback = 3, .hidden1 = 4, .hidden2 = 2, .seed = 5});
    Eigen::VectorXd flat = lstm_flatten(net);
    flat(flat.size() - 1) = 42.0;
    lstm_set_params(net, flat);
    CHECK(net.head_b == 42.0);

    // With everything else zeroed the forward pass returns exactly the bias.
    flat.setZero();
    flat(flat.size() - 1) = 0.25;
    lstm_set_params(net, flat);
    Eigen::VectorXd window = Eigen::VectorXd::Constant(3, 0.4);
    CHECK(network_forward(net, window) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("backprop gradient agrees with central differences") {
    Rng data_rng(7);
    std::vector<double> y(40);
    for (auto& v : y) v = data_rng.next_uniform(0.0, 1.0);
    WindowSet batch = make_windows(y, 5);

    LstmNetwork net = make_lstm({.lookback = 5, .hidden1 = 4, .hidden2 = 3, .seed = 21});
    Eigen::VectorXd grad;
    double loss = compute_gradients(net, batch, grad);
    CHECK(loss == doctest::Approx(lstm_mse(net, batch)).epsilon(1e-12));
    REQUIRE(grad.size() == lstm_param_count(net));

    Eigen::VectorXd flat = lstm_flatten(net);
    auto objective = [&](std::span<const double> p) {
        LstmNetwork probe = net;
        Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(p.data(), p.size());
        lstm_set_params(probe, v);
        return lstm_mse(probe, batch);
    };
    std::vector<double> numeric = finite_diff_gradient(objective, to_std(flat));
    double mismatch = check_gradient(to_std(grad), numeric);
    CHECK(mismatch < 1e-4);
}

TEST_CASE("training reduces the loss and records one entry per epoch") {
    std::vector<double> y(60);
    for (std::size_t t = 0; t < y.size(); ++t)
        y[t] = std::sin(0.3 * static_cast<double>(t));
    WindowSet train = make_windows(y, 6);

    LstmNetwork net = make_lstm({.lookback = 6, .hidden1 = 8, .hidden2 = 4, .seed = 2});
    double before = lstm_mse(net, train);

    TrainOptions opts;
    opts.epochs = 40;
    opts.lr = 5e-3;
    TrainingHistory hist = train_lstm(net, train, WindowSet{}, opts);
    CHECK(hist.train_loss.size() == 40);
    CHECK(hist.val_loss.empty());
    CHECK(hist.epochs() == 40);

    double after = lstm_mse(net, train);
    CHECK(after < before);
    CHECK(hist.train_loss.back() == doctest::Approx(after).epsilon(1e-12));
}

TEST_CASE("validation losses are tracked when a holdout is supplied") {
    std::vector<double> y(50);
    for (std::size_t t = 0; t < y.size(); ++t)
        y[t] = std::sin(0.25 * static_cast<double>(t));
    WindowSet train = make_windows(std::span(y).first(40), 5);
    WindowSet val = make_windows(std::span(y).last(10), 5, train.scale);

    LstmNetwork net = make_lstm({.lookback = 5, .hidden1 = 6, .hidden2 = 3, .seed = 8});
    TrainOptions opts;
    opts.epochs = 5;
    TrainingHistory hist = train_lstm(net, train, val, opts);
    CHECK(hist.train_loss.size() == 5);
    CHECK(hist.val_loss.size() == 5);
    CHECK(hist.val_loss.back() == doctest::Approx(lstm_mse(net, val)).epsilon(1e-12));
}

TEST_CASE("zero learning rate leaves parameters untouched") {
    std::vector<double> y(30);
    Rng rng(4);
    for (auto& v : y) v = rng.next_uniform(0.0, 1.0);
    WindowSet train = make_windows(y, 4);

    LstmNetwork net = make_lstm({.lookback = 4, .hidden1 = 5, .hidden2 = 3, .seed = 6});
    Eigen::VectorXd before = lstm_flatten(net);
    TrainOptions opts;
    opts.epochs = 3;
    opts.lr = 0.0;
    train_lstm(net, train, WindowSet{}, opts);
    CHECK(lstm_flatten(net) == before);
}

TEST_CASE("training rejects invalid options and mismatched windows") {
    std::vector<double> y = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    WindowSet train = make_windows(y, 3);
    LstmNetwork net = make_lstm({.lookback = 3, .hidden1 = 4, .hidden2 = 2, .seed = 1});
    TrainOptions opts;
    opts.epochs = 0;
    CHECK_THROWS_AS((void)train_lstm(net, train, WindowSet{}, opts), Error);

    WindowSet wrong = make_windows(y, 2);
    TrainOptions ok;
    ok.epochs = 1;
    CHECK_THROWS_AS((void)train_lstm(net, wrong, WindowSet{}, ok), Error);
}

TEST_CASE("walk-forward forecasts use observed history for every window") {
    std::vector<double> y(30);
    for (std::size_t t = 0; t < y.size(); ++t)
        y[t] = 10.0 + std::sin(0.4 * static_cast<double>(t));
    MinMaxScale scale = MinMaxScale::fit(std::span(y).first(24));

    LstmNetwork net = make_lstm({.lookback = 5, .hidden1 = 6, .hidden2 = 3, .seed = 9});
    auto preds = forecast_lstm(net, y, 6, scale);
    REQUIRE(preds.size() == 6);

    // Recompute the first prediction by hand from the same window.
    Eigen::VectorXd window(5);
    for (int j = 0; j < 5; ++j) window(j) = scale.apply(y[24 - 5 + j]);
    double want = scale.invert(network_forward(net, window));
    CHECK(preds[0] == doctest::Approx(want).epsilon(1e-12));

    CHECK_THROWS_AS((void)forecast_lstm(net, y, 0, scale), Error);
    CHECK_THROWS_AS((void)forecast_lstm(net, y, 30, scale), Error);
    CHECK_THROWS_AS((void)forecast_lstm(net, y, 26, scale), Error);  // prefix < lookback
}
