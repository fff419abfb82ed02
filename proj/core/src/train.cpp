#include "ads/train.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ads/sgd.hpp"

namespace ads {

namespace {

// Fisher-Yates over sample indices.
void shuffle_indices(std::vector<int64_t>& idx, Rng& rng) {
  for (size_t i = idx.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.below(i));
    std::swap(idx[i - 1], idx[j]);
  }
}

Tensor batch_loss(const Model& model, const Dataset& data,
                  std::span<const int64_t> indices) {
  std::vector<Tensor> rows;
  std::vector<int64_t> labels;
  rows.reserve(indices.size());
  labels.reserve(indices.size());
  for (const int64_t i : indices) {
    const Sample& s = data.samples[static_cast<size_t>(i)];
    rows.push_back(model.logits(s));
    labels.push_back(s.label);
  }
  return cross_entropy_logits(concat_rows(rows), labels);
}

}  // namespace

TrainResult train(Model& model, const Dataset& train_split,
                  const Dataset& val_split, const TrainConfig& cfg) {
  cfg.validate();
  if (train_split.samples.empty() || val_split.samples.empty()) {
    throw InputError("train and validation splits must be non-empty");
  }
  std::vector<Tensor> params = model.trainable();
  SgdOptimizer opt(cfg.learning_rate, params);
  Rng shuffle_rng = Rng(cfg.seed).split("shuffle");

  std::vector<int64_t> indices(train_split.samples.size());
  for (size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<int64_t>(i);

  TrainResult result;
  std::vector<Tensor> best_snapshot;
  for (int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_indices(indices, shuffle_rng);
    double loss_sum = 0.0;
    int64_t seen = 0;
    for (size_t start = 0; start < indices.size();
         start += static_cast<size_t>(cfg.batch_size)) {
      const size_t end =
          std::min(indices.size(), start + static_cast<size_t>(cfg.batch_size));
      const std::span<const int64_t> batch(indices.data() + start, end - start);
      const Tensor loss = batch_loss(model, train_split, batch);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        Tape::current().clear();
        throw NumericError("training loss diverged (non-finite) at epoch " +
                           std::to_string(epoch));
      }
      loss_sum += value * static_cast<double>(batch.size());
      seen += static_cast<int64_t>(batch.size());
      backward(loss);
      opt.step();
    }

    const Metrics val = evaluate(model, val_split);
    EpochLog row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(seen);
    row.val_accuracy = val.accuracy;
    row.val_f1 = val.macro_f1;
    result.log.push_back(row);

    if (result.best_epoch == 0 || val.accuracy > result.best_val_accuracy) {
      result.best_epoch = epoch;
      result.best_val_accuracy = val.accuracy;
      if (cfg.selection == Selection::BEST_VAL_ACCURACY) {
        best_snapshot.clear();
        for (const Tensor& p : params) best_snapshot.push_back(p.clone());
      }
    }
  }

  if (cfg.selection == Selection::BEST_VAL_ACCURACY) {
    for (size_t i = 0; i < params.size(); ++i) {
      params[i].copy_values_from(best_snapshot[i]);
    }
  }
  return result;
}

Metrics evaluate(const Model& model, const Dataset& split) {
  if (split.samples.empty()) throw InputError("cannot evaluate an empty split");
  NoGradGuard no_grad;
  Confusion confusion{};
  for (const Sample& s : split.samples) {
    const Tensor out = model.logits(s);
    const int64_t pred = out.value_at(1) > out.value_at(0) ? 1 : 0;
    confusion[s.label][static_cast<size_t>(pred)] += 1;
  }
  return metrics_from_confusion(confusion);
}

int64_t count_trainable_params(const Model& model) {
  int64_t total = 0;
  for (const NamedTensor& nt : model.named_trainable()) {
    total += nt.tensor.numel();
  }
  return total;
}

int64_t expected_trainable_params(const ModelConfig& cfg, Variant variant,
                                  bool train_projections) {
  const int64_t d = cfg.embed_dim;
  const int64_t dv = cfg.vision_width;
  const int64_t dt = cfg.text_width;
  const int64_t a = cfg.adapter_dim;
  const int64_t adapted = cfg.adapted_layers();

  int64_t total = (2 * d) * 2 + 2;  // classifier weight + bias
  if (train_projections) total += dv * d + dt * d;

  const int64_t adapter_per_layer =
      (dv * a + a + a * dv + dv) + (dt * a + a + a * dt + dt);
  const bool adapters_used =
      !(cfg.alpha == 0.0 && (variant == Variant::NO_SHARING));
  switch (variant) {
    case Variant::ADS:
    case Variant::V2T:
      if (adapters_used || cfg.sharing != Sharing::NONE) {
        total += adapted * adapter_per_layer;
      }
      if (cfg.gamma != 0.0 &&
          (variant == Variant::V2T || cfg.sharing != Sharing::NONE)) {
        total += dt * dv + dv * dt;  // W and P_f
      }
      break;
    case Variant::NO_SHARING:
      if (cfg.alpha != 0.0) total += adapted * adapter_per_layer;
      break;
    case Variant::NO_ADAPTERS:
      break;
    case Variant::LORA:
      total += cfg.layers * 2 * (dv * cfg.lora_rank + cfg.lora_rank * dv);
      total += cfg.layers * 2 * (dt * cfg.lora_rank + cfg.lora_rank * dt);
      break;
    case Variant::PROMPT:
      total += cfg.prompt_tokens * dv + cfg.prompt_tokens * dt;
      break;
  }
  return total;
}

std::string epoch_log_csv(const std::vector<EpochLog>& log) {
  std::ostringstream out;
  out << "epoch,train_loss,val_acc,val_f1\n";
  out.precision(17);
  for (const EpochLog& row : log) {
    out << row.epoch << ',' << row.train_loss << ',' << row.val_accuracy << ','
        << row.val_f1 << '\n';
  }
  return out.str();
}

}  // namespace ads
