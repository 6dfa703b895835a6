#pragma once

#include <string>
#include <vector>

#include "stella/data.hpp"
#include "stella/metrics.hpp"
#include "stella/model.hpp"
#include "stella/nn.hpp"

namespace stella {

enum class LossKind { mae, mse, smape };
LossKind loss_kind_from(const std::string& name);
const char* loss_kind_name(LossKind k);

// Mean reduction over all elements; SMAPE per the evaluation convention with
// both-zero terms defined as 0.
Tensor loss(const Tensor& pred, const Tensor& target, LossKind kind);

struct TrainConfig {
    LossKind loss_kind = LossKind::mse;
    real lr_target = 1e-3;
    int64_t warmup_epochs = 4;
    real decay_rate = 0.9;
    int64_t max_epochs = 100;
    int64_t patience = 5;
    int64_t batch_size = 32;
    real clip_norm = 1.0;
    int64_t oversample = 1;
    uint64_t seed = 0;
};

// Linear ramp lr/100 -> lr across warmup, then exponential decay.
real lr_at(int64_t epoch, const TrainConfig& cfg);

class Adam {
  public:
    explicit Adam(std::vector<Tensor> params, real beta1 = 0.9, real beta2 = 0.999,
                  real eps = 1e-8);
    void step(real lr);
    void zero_grad();

  private:
    std::vector<Tensor> params_;
    std::vector<std::vector<real>> m_, v_;
    real beta1_, beta2_, eps_;
    int64_t t_ = 0;
};

struct EpochRecord {
    int64_t epoch = 0;
    real train_loss = 0, val_loss = 0, lr = 0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    real best_val_loss = 0;
    int64_t best_epoch = 0;
    bool early_stopped = false;
    std::string to_csv() const;
};

// Full loop: Adam on trainable parameters only, de-normalized loss, gradient
// clipping, early stopping on validation loss, best parameters restored on
// return.
TrainHistory train(StellaModel& model, const SeriesTable& table, const SplitBundle& bundle,
                   const TrainConfig& cfg);

real evaluate_loss(const StellaModel& model, const SeriesTable& table, const SplitBundle& bundle,
                   Split split, const TrainConfig& cfg);

MetricReport evaluate_metrics(const StellaModel& model, const SeriesTable& table,
                              const SplitBundle& bundle, Split split, const TrainConfig& cfg);

// Truncates the train segment to its leading fraction; val/test untouched.
SplitBundle few_shot_bundle(const SplitBundle& bundle, real fraction, int64_t seq_len,
                            int64_t horizon);

}  // namespace stella
