#pragma once

#include <vector>

namespace fts {

struct TrainingHistory {
    std::vector<double> train_loss;  // one entry per epoch
    std::vector<double> val_loss;    // empty when no validation set was given

    int epochs() const { return static_cast<int>(train_loss.size()); }
};

struct TrainOptions {
    int epochs = 100;
    double lr = 1e-3;
    int batch_size = 0;  // 0 = full batch
};

}  // namespace fts
