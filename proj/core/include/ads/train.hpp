#pragma once

#include <string>

#include "ads/metrics.hpp"
#include "ads/model.hpp"

namespace ads {

struct EpochLog {
  int64_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double val_f1 = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  int64_t best_epoch = 0;
  double best_val_accuracy = 0.0;
};

// Mini-batch SGD with cross-entropy over shuffled training samples. After
// every epoch the validation accuracy is recorded; under best-validation
// selection the parameters from the best epoch are restored at the end.
// Throws NumericError on a non-finite loss.
TrainResult train(Model& model, const Dataset& train_split,
                  const Dataset& val_split, const TrainConfig& cfg);

// Argmax predictions over the split, reduced to a confusion matrix.
Metrics evaluate(const Model& model, const Dataset& split);

// Element count over the parameters this variant actually trains.
int64_t count_trainable_params(const Model& model);

// Closed-form expectation for count_trainable_params, documented per
// variant; the tensor-walk count must match it exactly.
int64_t expected_trainable_params(const ModelConfig& cfg, Variant variant,
                                  bool train_projections);

// Comma-separated per-epoch log: epoch,train_loss,val_acc,val_f1.
std::string epoch_log_csv(const std::vector<EpochLog>& log);

}  // namespace ads
