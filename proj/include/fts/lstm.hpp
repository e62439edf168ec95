#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "fts/training.hpp"

namespace fts {

class Rng;

// Affine map fitted on training data only; test data reuses the same bounds.
struct MinMaxScale {
    double lo = 0.0;
    double hi = 1.0;

    static MinMaxScale fit(std::span<const double> values);

    double apply(double x) const;
    double invert(double y) const;
};

// Supervised windows: row k holds lookback scaled values, target is the next one.
struct WindowSet {
    Eigen::MatrixXd inputs;   // samples x lookback
    Eigen::VectorXd targets;  // samples
    MinMaxScale scale;
    int lookback = 0;

    int size() const { return static_cast<int>(targets.size()); }
};

WindowSet make_windows(std::span<const double> series, int lookback);
WindowSet make_windows(std::span<const double> series, int lookback, const MinMaxScale& scale);

// One recurrent layer. Gate order everywhere: input, forget, output, candidate.
struct LstmLayerParams {
    Eigen::MatrixXd w_in, w_forget, w_out, w_cand;  // hidden x input
    Eigen::MatrixXd u_in, u_forget, u_out, u_cand;  // hidden x hidden
    Eigen::VectorXd b_in, b_forget, b_out, b_cand;  // hidden

    int input_size() const { return static_cast<int>(w_in.cols()); }
    int hidden_size() const { return static_cast<int>(w_in.rows()); }
};

struct LstmCellState {
    Eigen::VectorXd h;
    Eigen::VectorXd c;
};

LstmCellState lstm_cell_forward(const LstmLayerParams& layer, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& h_prev, const Eigen::VectorXd& c_prev);

struct LstmConfig {
    int lookback = 20;
    int hidden1 = 32;
    int hidden2 = 16;
    std::uint64_t seed = 1;
};

// Two stacked recurrent layers plus a scalar affine head.
struct LstmNetwork {
    LstmConfig config;
    LstmLayerParams layer1;  // input size 1
    LstmLayerParams layer2;  // input size hidden1
    Eigen::RowVectorXd head_w;
    double head_b = 0.0;
};

LstmNetwork make_lstm(const LstmConfig& config);

int lstm_param_count(const LstmNetwork& net);
Eigen::VectorXd lstm_flatten(const LstmNetwork& net);
void lstm_set_params(LstmNetwork& net, const Eigen::VectorXd& flat);

// Prediction in scaled space for one window of lookback scaled values.
double network_forward(const LstmNetwork& net, const Eigen::VectorXd& window);

double lstm_mse(const LstmNetwork& net, const WindowSet& set);

// Mean squared error over the batch plus its exact gradient (backprop through time).
double compute_gradients(const LstmNetwork& net, const WindowSet& batch, Eigen::VectorXd& grad);

TrainingHistory train_lstm(LstmNetwork& net, const WindowSet& train, const WindowSet& val,
                           const TrainOptions& options);

// Walk-forward one-step predictions for the last test_len points of series,
// each window drawn from observed history, returned in original units.
std::vector<double> forecast_lstm(const LstmNetwork& net, std::span<const double> series,
                                  int test_len, const MinMaxScale& scale);

}  // namespace fts
